#pragma once

#include "lasround/common.hpp"
#include "lasround/csp.hpp"
#include "lasround/pseudodist.hpp"

namespace lasround {

/// Sparse explicit distribution over [k]^n, entries (global odometer index, mass).
struct ExplicitDistribution {
  int n = 0, k = 0;
  std::vector<std::pair<std::size_t, double>> support;

  LocalDistributionFamily family(int order = -1) const {
    return LocalDistributionFamily::from_global_distribution(n, k, support, order);
  }
  double expected_value(const Csp2Instance& inst) const;
};

inline constexpr std::size_t kEnumerationCap = 20'000'000;

/// Exact maximum of value() over all k^n assignments; ties broken by the
/// first maximizer in odometer order.
std::pair<double, Assignment> brute_force_optimum(const Csp2Instance& inst);

enum class DistributionMode { uniform_over_optima, boltzmann };

/// uniform_over_optima: equal mass on every optimal assignment.
/// boltzmann: mass proportional to exp(beta * value).
ExplicitDistribution exhaustive_distribution(const Csp2Instance& inst, DistributionMode mode,
                                             double beta = 0.0);

/// Exact output law of propagation sampling with r rounds: the mixture over
/// (m, S, x_S) of products of conditional singletons. Feasible only when
/// n^r k^n is tiny.
ExplicitDistribution exact_rounding_distribution(const LocalDistributionFamily& family, int r);

/// Exact output law of propagation rounding with a fixed seed set.
ExplicitDistribution exact_propagation_distribution(const LocalDistributionFamily& family,
                                                    const Subset& S);

}  // namespace lasround
