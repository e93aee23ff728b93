#pragma once

#include <algorithm>
#include <utility>
#include <vector>

namespace dcflow {

// Per-link bookkeeping of time already claimed by scheduled flows.
// Busy intervals are kept sorted and merged.
class Availability {
 public:
  explicit Availability(int link_count)
      : busy_(static_cast<std::size_t>(link_count)) {}

  void mark_busy(int link, double t0, double t1) {
    if (!(t0 < t1)) return;
    auto& list = busy_[static_cast<std::size_t>(link)];
    std::vector<std::pair<double, double>> merged;
    merged.reserve(list.size() + 1);
    bool placed = false;
    for (auto& iv : list) {
      if (iv.second < t0 - kMergeEps) {
        merged.push_back(iv);
      } else if (iv.first > t1 + kMergeEps) {
        if (!placed) {
          merged.push_back({t0, t1});
          placed = true;
        }
        merged.push_back(iv);
      } else {
        t0 = std::min(t0, iv.first);
        t1 = std::max(t1, iv.second);
      }
    }
    if (!placed) merged.push_back({t0, t1});
    std::sort(merged.begin(), merged.end());
    list = std::move(merged);
  }

  // Unclaimed time within [a, b].
  double free_time(int link, double a, double b) const {
    if (!(a < b)) return 0.0;
    double busy = 0.0;
    for (auto& iv : busy_[static_cast<std::size_t>(link)]) {
      double lo = std::max(a, iv.first);
      double hi = std::min(b, iv.second);
      if (lo < hi) busy += hi - lo;
    }
    return std::max(0.0, (b - a) - busy);
  }

  // Maximal unclaimed sub-intervals of [a, b], in time order.
  std::vector<std::pair<double, double>> free_gaps(int link, double a, double b) const {
    std::vector<std::pair<double, double>> gaps;
    double cursor = a;
    for (auto& iv : busy_[static_cast<std::size_t>(link)]) {
      if (iv.second <= a) continue;
      if (iv.first >= b) break;
      if (iv.first > cursor) gaps.push_back({cursor, std::min(iv.first, b)});
      cursor = std::max(cursor, iv.second);
      if (cursor >= b) break;
    }
    if (cursor < b) gaps.push_back({cursor, b});
    return gaps;
  }

  const std::vector<std::pair<double, double>>& busy_intervals(int link) const {
    return busy_[static_cast<std::size_t>(link)];
  }

 private:
  static constexpr double kMergeEps = 1e-12;
  std::vector<std::vector<std::pair<double, double>>> busy_;
};

}  // namespace dcflow
