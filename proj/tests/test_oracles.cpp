#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "helpers.hpp"

using namespace dcflow;
using Catch::Approx;

TEST_CASE("rate program reference reproduces the line example optimum") {
  auto ex = testutil::make_line_example();
  OracleResult r = oracle_dcfs(ex.network, ex.flows, ex.paths);
  CHECK(r.objective ==
        Approx(testutil::line_example_dynamic_energy()).epsilon(1e-6));
  CHECK(r.rates[0] == Approx(testutil::line_example_s1()).epsilon(1e-4));
  CHECK(r.rates[1] == Approx(testutil::line_example_s2()).epsilon(1e-4));
  CHECK(r.residual <= 1e-8);
}

TEST_CASE("a single flow's optimal rate is its density") {
  PowerParams p{0.0, 2.0, 3.0, 100.0};
  Network net({"A", "B", "C"}, {{"AB", "A", "B"}, {"BC", "B", "C"}}, p);
  std::vector<Flow> flows{{"f", 6.0, 1.0, 4.0, 0, 2}};
  OracleResult r = oracle_dcfs(net, flows, {{0, 1}});
  double density = 2.0;
  CHECK(r.rates[0] == Approx(density).epsilon(1e-6));
  // |P| * mu * w * D^(alpha-1)
  CHECK(r.objective == Approx(2.0 * 2.0 * 6.0 * density * density).epsilon(1e-6));
}

TEST_CASE("restarts land on the same optimum") {
  for (std::uint64_t seed : {3ULL, 17ULL}) {
    testutil::TinyInstance t = testutil::make_tiny_instance(seed);
    OracleDcfsOptions a, b;
    a.seed = 1;
    b.seed = 999;
    double va = oracle_dcfs(t.topology.network, t.flows, t.paths, a).objective;
    double vb = oracle_dcfs(t.topology.network, t.flows, t.paths, b).objective;
    CHECK(va == Approx(vb).epsilon(1e-6));
  }
}

TEST_CASE("interval subsets dominate arbitrary subsets of a link's flows") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    testutil::TinyInstance t = testutil::make_tiny_instance(seed);
    const Network& net = t.topology.network;
    auto constraints = p1_constraints(net, t.flows, t.paths);

    LinkAssignment assignment = LinkAssignment::build(net, t.flows, t.paths);
    for (int e = 0; e < net.link_count(); ++e) {
      const auto& on_link = assignment.flows_on_link[static_cast<std::size_t>(e)];
      REQUIRE(on_link.size() <= 4);
      for (unsigned mask = 1; mask < (1u << on_link.size()); ++mask) {
        std::vector<int> subset;
        for (std::size_t b = 0; b < on_link.size(); ++b)
          if (mask & (1u << b)) subset.push_back(on_link[b]);
        double lo = t.flows[static_cast<std::size_t>(subset[0])].release;
        double hi = t.flows[static_cast<std::size_t>(subset[0])].deadline;
        for (int i : subset) {
          lo = std::min(lo, t.flows[static_cast<std::size_t>(i)].release);
          hi = std::max(hi, t.flows[static_cast<std::size_t>(i)].deadline);
        }
        // some enforced constraint must contain this subset with bound <= hull
        bool dominated = false;
        for (const SubsetConstraint& c : constraints) {
          if (c.bound > hi - lo + 1e-12) continue;
          bool contains = true;
          for (int i : subset)
            contains &= std::find(c.flows.begin(), c.flows.end(), i) != c.flows.end();
          if (contains) {
            dominated = true;
            break;
          }
        }
        CHECK(dominated);
      }
    }
  }
}

TEST_CASE("joint reference prefers one dark link when idle power dominates") {
  PowerParams p{50.0, 1.0, 2.0, 100.0};
  Topology topo = make_parallel_links(2, p);
  std::vector<Flow> flows{{"f", 2.0, 0.0, 1.0, topo.network.node_index("src"),
                           topo.network.node_index("dst")}};
  OracleResult r = oracle_dcfsr(topo.network, flows);
  CHECK(r.objective == Approx(50.0 + 4.0));
  REQUIRE(r.paths.size() == 1);
  CHECK(r.paths[0].size() == 1);
}

TEST_CASE("the m=2 reduction gadget optimum uses both links at rate B") {
  testutil::Gadget g = testutil::make_gadget(2, 4.0, 8.0, 2.0, {2.0, 2.0, 2.0, 2.0});
  OracleResult r = oracle_dcfsr(g.topology.network, g.flows);
  // 2 alpha mu B^alpha with alpha=2, mu=1, B=4
  CHECK(r.objective == Approx(64.0).epsilon(1e-9));
  std::set<int> used;
  for (const auto& path : r.paths) used.insert(path.front());
  CHECK(used.size() == 2);
  for (double s : r.rates) CHECK(s == Approx(4.0).epsilon(1e-9));
}

TEST_CASE("forced paths make the joint reference the rate reference plus idle") {
  auto ex = testutil::make_line_example();
  // give the line power params a nonzero idle component
  PowerParams p{0.7, 1.0, 2.0, 1e6};
  Network net({"A", "B", "C"}, {{"AB", "A", "B"}, {"BC", "B", "C"}}, p);
  OracleResult joint = oracle_dcfsr(net, ex.flows);
  OracleResult fixed = oracle_dcfs(net, ex.flows, ex.paths);
  // horizon [1,4], both links active
  CHECK(joint.objective == Approx(fixed.objective + 0.7 * 3.0 * 2.0).epsilon(1e-4));
}

TEST_CASE("combination budget refusal names the count") {
  PowerParams p{0.0, 1.0, 2.0, 100.0};
  Topology topo = make_parallel_links(8, p);
  std::vector<Flow> flows;
  for (int i = 0; i < 8; ++i)
    flows.push_back({"f" + std::to_string(i), 1.0, 0.0, 1.0,
                     topo.network.node_index("src"), topo.network.node_index("dst")});
  OracleDcfsrOptions options;
  options.combination_budget = 1000;  // 8^8 combinations is far beyond this
  CHECK_THROWS_WITH(oracle_dcfsr(topo.network, flows, options),
                    Catch::Matchers::ContainsSubstring("budget"));
}

TEST_CASE("shortest-path baseline matches the forced-route schedule on the line") {
  auto ex = testutil::make_line_example();
  McfSchedule direct = most_critical_first(ex.network, ex.flows, ex.paths);
  McfSchedule sp = shortest_path_baseline(ex.network, ex.flows);
  CHECK(dynamic_energy(sp.schedule, ex.flows, ex.network) ==
        Approx(dynamic_energy(direct.schedule, ex.flows, ex.network)));
  for (std::size_t i = 0; i < ex.flows.size(); ++i)
    CHECK(sp.schedule.flows[i].path == ex.paths[i]);
}

TEST_CASE("parallel links pile onto the lexicographically first link") {
  PowerParams p{0.0, 1.0, 2.0, 1e6};
  Topology topo = make_parallel_links(3, p);
  int src = topo.network.node_index("src"), dst = topo.network.node_index("dst");
  std::vector<Flow> flows{{"f1", 1.0, 0.0, 1.0, src, dst},
                          {"f2", 1.0, 0.5, 2.0, src, dst}};
  McfSchedule sp = shortest_path_baseline(topo.network, flows);
  for (const FlowPlan& plan : sp.schedule.flows)
    CHECK(topo.network.link(plan.path.front()).id == "p0");
  CHECK(is_feasible(sp.schedule, flows, topo.network));
}

TEST_CASE("baseline schedules are feasible absent capacity warnings") {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    testutil::TinyInstance t = testutil::make_tiny_instance(seed);
    McfSchedule sp;
    try {
      sp = shortest_path_baseline(t.topology.network, t.flows);
    } catch (const std::logic_error&) {
      continue;
    }
    if (!sp.capacity_warnings.empty()) continue;
    FeasibilityReport report = check_schedule(sp.schedule, t.flows, t.topology.network);
    INFO("seed " << seed << ": " << report.summary());
    CHECK(report.feasible());
  }
}

TEST_CASE("ideal operating rate closed forms") {
  SECTION("sigma tuned for R_opt = B") {
    double B = 4.0, alpha = 2.0, mu = 1.0;
    PowerParams p{mu * (alpha - 1.0) * std::pow(B, alpha), mu, alpha, 100.0};
    CHECK(r_opt(p) == Approx(B));
  }
  SECTION("unit case") {
    CHECK(r_opt({1.0, 1.0, 2.0, 10.0}) == Approx(1.0));
  }
  SECTION("grid argmin of f(x)/x matches min(R_opt, C)") {
    PowerParams p{16.0, 1.0, 2.0, 10.0};
    CHECK(r_opt(p) == Approx(4.0));
    double best_x = 0.0, best = std::numeric_limits<double>::infinity();
    const int grid = 100000;
    for (int i = 1; i <= grid; ++i) {
      double x = std::min(p.capacity, p.capacity * i / grid);
      double v = link_power(x, p) / x;
      if (v < best) {
        best = v;
        best_x = x;
      }
    }
    CHECK(best_x == Approx(4.0).margin(2.0 * p.capacity / grid));
  }
  SECTION("all-dynamic regime returns zero") {
    CHECK(r_opt({0.0, 1.0, 2.0, 10.0}) == 0.0);
  }
}

TEST_CASE("inapproximability constant") {
  CHECK(inapprox_gamma(2.0) == Approx(13.0 / 12.0).margin(1e-12));
  CHECK(inapprox_gamma(1.0 + 1e-9) == Approx(1.0).margin(1e-6));
  CHECK(inapprox_gamma(4.0) ==
        Approx(1.5 * (1.0 + (std::pow(2.0 / 3.0, 4.0) - 1.0) / 4.0)).margin(1e-12));
  CHECK(inapprox_gamma(4.0) == Approx(1.1991).margin(1e-4));
  CHECK_THROWS_AS(inapprox_gamma(1.0), std::invalid_argument);
}
