#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "lasround/common.hpp"

#include <json.hpp>

namespace lasround {

/// Probability table over [k]^T for a sorted vertex subset T. Assignments are
/// flattened with labels_to_index (first vertex most significant).
struct ProbTable {
  Subset verts;
  int k = 0;
  Eigen::VectorXd p;

  double prob(const Labels& x) const { return p[labels_to_index(x, k)]; }
  /// Sum out every vertex not in `to` (`to` must be a subset of verts).
  ProbTable marginalize(const Subset& to) const;
  double sum() const { return p.sum(); }
};

enum class Provenance { exact_distribution, solver, fitted, constructed };

/// Read-only source of consistent local marginals. Implemented by
/// LocalDistributionFamily and ConditionedFamily so statistics work on both.
class MarginalSource {
 public:
  virtual ~MarginalSource() = default;
  virtual int n() const = 0;
  virtual int k() const = 0;
  virtual int order() const = 0;  // conditioning budget: tables exist for |T| <= order + 2
  virtual ProbTable marginal(const Subset& T) const = 0;
  virtual bool available(const Subset& T) const = 0;

  ProbTable singleton(int i) const { return marginal({i}); }
  ProbTable pair(int i, int j) const { return marginal(canon_subset({i, j})); }
};

class ConditionedFamily;

/// Family of consistent local distributions mu_T for |T| <= order + 2.
/// Tables are materialized lazily: from a backing populator (exact
/// distribution, solver tables) or by marginalizing a stored superset.
/// Immutable from the caller's perspective; the internal cache is guarded.
class LocalDistributionFamily : public MarginalSource {
 public:
  /// Populator fills `out` with the table over [k]^T, returns false if it
  /// cannot produce this subset.
  using Populator = std::function<bool(const Subset& T, Eigen::VectorXd& out)>;

  LocalDistributionFamily(int n, int k, int order, Provenance prov, Populator populator = nullptr);

  /// Family backed by an explicit sparse distribution over [k]^n.
  static LocalDistributionFamily from_global_distribution(
      int n, int k, std::vector<std::pair<std::size_t, double>> support, int order = -1,
      Provenance prov = Provenance::exact_distribution);

  /// Product family with the given singleton marginals.
  static LocalDistributionFamily product(int k, std::vector<Eigen::VectorXd> singletons,
                                         int order = -1);

  /// Family over explicitly provided tables (tests and fitted families).
  static LocalDistributionFamily from_tables(int n, int k, int order,
                                             std::map<Subset, Eigen::VectorXd> tables,
                                             Provenance prov = Provenance::constructed);

  int n() const override { return n_; }
  int k() const override { return k_; }
  int order() const override { return order_; }
  Provenance provenance() const { return provenance_; }

  bool available(const Subset& T) const override;
  ProbTable marginal(const Subset& T) const override;

  /// Condition on X_S = x_S. Requires Pr[X_S = x_S] > 1e-12.
  ConditionedFamily condition(const Subset& S, const Labels& xS) const;

  /// Stored/cached subsets, for dumps and consistency sweeps.
  std::vector<Subset> materialized_subsets() const;

  nlohmann::json dump() const;

 private:
  int n_, k_, order_;
  Provenance provenance_;
  // copies share the memoized tables; the cache only ever grows
  struct State {
    Populator populator;
    std::mutex mu;
    std::map<Subset, Eigen::VectorXd> cache;
  };
  std::shared_ptr<State> state_;

  std::optional<Eigen::VectorXd> lookup_or_derive(const Subset& T) const;
};

/// View of a base family conditioned on a seed assignment. Shares the base
/// tables; derived tables satisfy mu_{T|S}(a) = mu_{T∪S}(a, x_S) / mu_S(x_S).
class ConditionedFamily : public MarginalSource {
 public:
  ConditionedFamily(const LocalDistributionFamily& base, Subset seed, Labels seed_labels);

  int n() const override { return base_.n(); }
  int k() const override { return base_.k(); }
  int order() const override { return base_.order(); }
  const Subset& seed() const { return seed_; }
  const Labels& seed_labels() const { return seed_labels_; }
  double seed_mass() const { return seed_mass_; }

  bool available(const Subset& T) const override;
  ProbTable marginal(const Subset& T) const override;

 private:
  LocalDistributionFamily base_;  // shares table state with the source family
  Subset seed_;
  Labels seed_labels_;
  double seed_mass_;
};

// ---------------------------------------------------------------------------
// scalar statistics

/// Var[X] over [k]: sum_a p_a (1 - p_a) = 1 - cp(X).
double variance_k(const Eigen::VectorXd& dist);
/// cp(X) = Pr[X = X'] for an independent copy X'.
double collision_probability(const Eigen::VectorXd& dist);
/// l1 distance sum_x |p(x) - q(x)|; shapes must match.
double statistical_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Cov(X_ia, X_jb) = E[X_ia X_jb] - E[X_ia] E[X_jb] from the pair table.
double covariance(const MarginalSource& f, int i, int a, int j, int b);

/// Full nk x nk covariance matrix of the indicator variables, ordered (i,a) -> i*k + a.
Eigen::MatrixXd covariance_matrix(const MarginalSource& f);

struct StatDistCovIdentity {
  double lhs;  // || {X_i X_j} - {X_i}{X_j} ||_1
  double rhs;  // sum_{a,b} |Cov(X_ia, X_jb)|
  bool pass;   // |lhs - rhs| <= 1e-9
};
StatDistCovIdentity check_statdist_cov_identity(const MarginalSource& f, int i, int j);

struct CondVarDecrement {
  double decrement;  // Var X_i - E_{X_j} Var[X_i | X_j]
  double bound;      // (1/k) sum_{a,b} Cov(X_ia,X_jb)^2 / Var X_jb  (floored terms skipped)
  bool pass;         // decrement >= bound - 1e-9
};
CondVarDecrement conditional_variance_decrement(const MarginalSource& f, int i, int j);

struct PiDistance {
  double distance;        // sum_a |Pr_joint[X_i=a, X_j=pi(a)] - Pr_prod[...]|
  double covariance_sum;  // sum_a |Cov(X_ia, X_{j pi(a)})|
  bool pass;              // equal within 1e-9
};
PiDistance pi_distance(const MarginalSource& f, int i, int j, const std::vector<int>& pi);

/// E_{i in V} Var[X_i | .] from singleton tables.
double average_variance(const MarginalSource& f);

/// Largest total-variation inconsistency between any cached pair of
/// nested subsets (marginalization check).
double consistency_violation(const LocalDistributionFamily& f);

}  // namespace lasround
