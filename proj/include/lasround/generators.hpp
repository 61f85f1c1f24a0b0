#pragma once

#include "lasround/common.hpp"
#include "lasround/csp.hpp"

namespace lasround {

ConstraintGraph cycle_graph(int n);
ConstraintGraph complete_graph(int n);
/// Boolean hypercube of the given dimension; edge weights perturbed to
/// 1 + noise * u with u uniform in [-1,1], rescaled per direction so the
/// graph stays regular.
ConstraintGraph hypercube_graph(int dim, double noise, std::mt19937_64& rng);
/// Configuration model with rejection of self-loops and multi-edges.
ConstraintGraph random_regular_graph(int n, int d, std::mt19937_64& rng);

/// t vertex-disjoint copies of a base instance (the standard high
/// threshold-rank construction).
Csp2Instance disjoint_copies(const Csp2Instance& base, int t);

/// Unique-games instance with a hidden labeling: every constraint bijection
/// maps the hidden label of i to the hidden label of j; a `noise` fraction of
/// constraints is re-randomized.
Csp2Instance planted_ug_instance(const ConstraintGraph& graph, int k, double noise,
                                 std::mt19937_64& rng, Assignment* hidden = nullptr);

}  // namespace lasround
