#include "lasround/oracle.hpp"

#include <cmath>

namespace lasround {

double ExplicitDistribution::expected_value(const Csp2Instance& inst) const {
  double acc = 0;
  for (const auto& [idx, w] : support) {
    Assignment x{index_to_labels(idx, k, static_cast<std::size_t>(n))};
    acc += w * inst.value(x);
  }
  return acc;
}

std::pair<double, Assignment> brute_force_optimum(const Csp2Instance& inst) {
  const int n = inst.n(), k = inst.k();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    total *= static_cast<std::size_t>(k);
    if (total > kEnumerationCap) throw cap_exceeded("brute_force_optimum: k^n exceeds cap");
  }
  double best = -1;
  std::size_t best_idx = 0;
  Assignment x{Labels(static_cast<std::size_t>(n), 0)};
  for (std::size_t idx = 0; idx < total; ++idx) {
    double v = inst.value(x);
    if (v > best + 1e-15) {
      best = v;
      best_idx = idx;
    }
    // odometer increment, least significant digit last
    for (int p = n - 1; p >= 0; --p) {
      if (++x.labels[p] < k) break;
      x.labels[p] = 0;
    }
  }
  return {best, Assignment{index_to_labels(best_idx, k, static_cast<std::size_t>(n))}};
}

ExplicitDistribution exhaustive_distribution(const Csp2Instance& inst, DistributionMode mode,
                                             double beta) {
  const int n = inst.n(), k = inst.k();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    total *= static_cast<std::size_t>(k);
    if (total > kEnumerationCap) throw cap_exceeded("exhaustive_distribution: k^n exceeds cap");
  }
  ExplicitDistribution out;
  out.n = n;
  out.k = k;
  if (mode == DistributionMode::uniform_over_optima) {
    double best = brute_force_optimum(inst).first;
    Assignment x{Labels(static_cast<std::size_t>(n), 0)};
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (inst.value(x) >= best - 1e-12) out.support.emplace_back(idx, 1.0);
      for (int p = n - 1; p >= 0; --p) {
        if (++x.labels[p] < k) break;
        x.labels[p] = 0;
      }
    }
  } else {
    Assignment x{Labels(static_cast<std::size_t>(n), 0)};
    for (std::size_t idx = 0; idx < total; ++idx) {
      out.support.emplace_back(idx, std::exp(beta * inst.value(x)));
      for (int p = n - 1; p >= 0; --p) {
        if (++x.labels[p] < k) break;
        x.labels[p] = 0;
      }
    }
  }
  double mass = 0;
  for (auto& [idx, w] : out.support) mass += w;
  for (auto& [idx, w] : out.support) w /= mass;
  return out;
}

namespace {

// accumulate the product-of-conditionals law for one (S, x_S) into `law`
void accumulate_conditional_product(const LocalDistributionFamily& family, const Subset& S,
                                    const Labels& xS, double weight,
                                    std::vector<double>& law) {
  const int n = family.n(), k = family.k();
  ConditionedFamily cf = family.condition(S, xS);
  std::vector<Eigen::VectorXd> marg(n);
  for (int i = 0; i < n; ++i) marg[i] = cf.singleton(i).p;
  const std::size_t total = law.size();
  Labels x(static_cast<std::size_t>(n), 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    double p = weight;
    for (int i = 0; i < n && p > 0; ++i) p *= marg[i][x[i]];
    law[idx] += p;
    for (int q = n - 1; q >= 0; --q) {
      if (++x[q] < k) break;
      x[q] = 0;
    }
  }
}

std::vector<Subset> all_seed_tuples(int n, int m) {
  // distinct-set view of V^m tuples is handled by the caller; here we return
  // V^m as sorted multisets collapsed to subsets with multiplicity weights
  std::vector<Subset> out;
  Subset tuple(static_cast<std::size_t>(m), 0);
  std::size_t total = 1;
  for (int q = 0; q < m; ++q) total *= static_cast<std::size_t>(n);
  for (std::size_t idx = 0; idx < total; ++idx) {
    out.push_back(canon_subset(tuple));
    for (int q = m - 1; q >= 0; --q) {
      if (++tuple[q] < n) break;
      tuple[q] = 0;
    }
  }
  return out;
}

}  // namespace

ExplicitDistribution exact_rounding_distribution(const LocalDistributionFamily& family, int r) {
  const int n = family.n(), k = family.k();
  if (family.order() < r) throw budget_error("exact_rounding_distribution: family order below r");
  std::size_t space = pow_size(k, static_cast<std::size_t>(n));
  double cost = static_cast<double>(space);
  for (int m = 1; m <= r; ++m) cost += std::pow(n, m) * pow_size(k, m) * space * 1e-3;
  if (space > 1u << 22 || cost > 5e8)
    throw cap_exceeded("exact_rounding_distribution: enumeration infeasible");

  std::vector<double> law(space, 0.0);
  for (int m = 1; m <= r; ++m) {
    auto seeds = all_seed_tuples(n, m);
    double tuple_weight = 1.0 / (static_cast<double>(r) * seeds.size());
    for (const auto& S : seeds) {
      ProbTable muS = family.marginal(S);
      for (std::size_t si = 0; si < static_cast<std::size_t>(muS.p.size()); ++si) {
        double mass = muS.p[static_cast<Eigen::Index>(si)];
        if (mass <= 1e-12) continue;
        Labels xS = index_to_labels(si, k, S.size());
        accumulate_conditional_product(family, S, xS, tuple_weight * mass, law);
      }
    }
  }
  ExplicitDistribution out;
  out.n = n;
  out.k = k;
  for (std::size_t idx = 0; idx < space; ++idx)
    if (law[idx] > 0) out.support.emplace_back(idx, law[idx]);
  return out;
}

ExplicitDistribution exact_propagation_distribution(const LocalDistributionFamily& family,
                                                    const Subset& Sraw) {
  const int n = family.n(), k = family.k();
  Subset S = canon_subset(Sraw);
  std::size_t space = pow_size(k, static_cast<std::size_t>(n));
  if (space > 1u << 22) throw cap_exceeded("exact_propagation_distribution: k^n too large");
  std::vector<double> law(space, 0.0);
  if (S.empty()) {
    accumulate_conditional_product(family, S, {}, 1.0, law);
  } else {
    ProbTable muS = family.marginal(S);
    for (std::size_t si = 0; si < static_cast<std::size_t>(muS.p.size()); ++si) {
      double mass = muS.p[static_cast<Eigen::Index>(si)];
      if (mass <= 1e-12) continue;
      accumulate_conditional_product(family, S, index_to_labels(si, k, S.size()), mass, law);
    }
  }
  ExplicitDistribution out;
  out.n = n;
  out.k = k;
  for (std::size_t idx = 0; idx < space; ++idx)
    if (law[idx] > 0) out.support.emplace_back(idx, law[idx]);
  return out;
}

}  // namespace lasround
