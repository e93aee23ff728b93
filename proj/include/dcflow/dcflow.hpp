#pragma once

// Umbrella header for the deadline-constrained flow scheduling library.

#include "dcflow/availability.hpp"
#include "dcflow/dcfs.hpp"
#include "dcflow/energy.hpp"
#include "dcflow/experiment.hpp"
#include "dcflow/feasibility.hpp"
#include "dcflow/fmcf.hpp"
#include "dcflow/intervals.hpp"
#include "dcflow/json_io.hpp"
#include "dcflow/network.hpp"
#include "dcflow/oracles.hpp"
#include "dcflow/parallel.hpp"
#include "dcflow/paths.hpp"
#include "dcflow/rng.hpp"
#include "dcflow/rounding.hpp"
#include "dcflow/schedule.hpp"
#include "dcflow/topology.hpp"
