#pragma once

// Umbrella header: consensus clustering over ensembles of hard partitionings,
// with co-association density scoring, k-means consensus engines, graph and
// linkage alternatives, agreement metrics, and a benchmark harness.

#include "eac/bench.hpp"
#include "eac/consensus.hpp"
#include "eac/core.hpp"
#include "eac/density.hpp"
#include "eac/graph.hpp"
#include "eac/io.hpp"
#include "eac/kmeans.hpp"
#include "eac/metrics.hpp"
#include "eac/rng.hpp"
