#pragma once

// Umbrella header for the metapath GTN library: heterogeneous graph storage,
// edge scoring, exact and sampled metapath graph generation, the dense
// matrix-chain oracle, and the GCN training loop.

#include "metagtn/dataset_io.hpp"
#include "metagtn/dense_oracle.hpp"
#include "metagtn/gnn.hpp"
#include "metagtn/hetero_graph.hpp"
#include "metagtn/matrix.hpp"
#include "metagtn/metapath_graph.hpp"
#include "metagtn/parallel.hpp"
#include "metagtn/pathfinder.hpp"
#include "metagtn/rng.hpp"
#include "metagtn/scoring.hpp"
#include "metagtn/train.hpp"
#include "metagtn/walker.hpp"
