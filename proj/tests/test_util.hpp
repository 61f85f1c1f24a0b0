#pragma once

#include <random>

#include "lasround/csp.hpp"
#include "lasround/generators.hpp"
#include "lasround/oracle.hpp"
#include "lasround/pseudodist.hpp"

namespace lasround::testutil {

/// Random dense distribution over [k]^n (normalized exponential draws).
inline ExplicitDistribution random_joint(int n, int k, std::mt19937_64& rng,
                                         double sparsity = 0.0) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ExplicitDistribution d;
  d.n = n;
  d.k = k;
  const std::size_t total = pow_size(k, static_cast<std::size_t>(n));
  double mass = 0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (sparsity > 0 && unif(rng) < sparsity) continue;
    double w = expo(rng);
    d.support.emplace_back(idx, w);
    mass += w;
  }
  if (d.support.empty()) d.support.emplace_back(0, mass = 1.0);
  for (auto& [idx, w] : d.support) w /= mass;
  return d;
}

/// Random mixture of a few point masses (high correlation fixtures).
inline ExplicitDistribution random_sparse_joint(int n, int k, int atoms, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pow_size(k, static_cast<std::size_t>(n)) - 1);
  std::exponential_distribution<double> expo(1.0);
  ExplicitDistribution d;
  d.n = n;
  d.k = k;
  double mass = 0;
  for (int a = 0; a < atoms; ++a) {
    double w = expo(rng);
    d.support.emplace_back(pick(rng), w);
    mass += w;
  }
  for (auto& [idx, w] : d.support) w /= mass;
  return d;
}

inline Csp2Instance c5_maxcut() { return max_cut_instance(cycle_graph(5)); }
inline Csp2Instance k3_maxcut() { return max_cut_instance(complete_graph(3)); }

inline Csp2Instance single_edge_maxcut() {
  ConstraintGraph g;
  g.n = 2;
  g.edges.push_back({0, 1, 1.0});
  return max_cut_instance(g);
}

}  // namespace lasround::testutil
