#pragma once

#include <optional>
#include <string>

#include "lasround/common.hpp"
#include "lasround/csp.hpp"
#include "lasround/oracle.hpp"
#include "lasround/pseudodist.hpp"
#include "lasround/sdp.hpp"

#include <json.hpp>

namespace lasround {

enum class RoundingStrategy { random, greedy, exhaustive };

std::string to_string(RoundingStrategy s);
RoundingStrategy strategy_from_string(const std::string& s);

struct TrialRecord {
  int m = 0;
  Subset seed;
  Labels seed_labels;
  double value = 0;
};

struct RoundingRun {
  std::string strategy;
  int trials = 0;
  int rounds = 0;
  std::uint64_t seed = 0;
  Assignment best;
  double best_value = 0;
  double sdp_objective = 0;
  double independent_value = 0;
  std::optional<double> brute_force_opt;
  std::vector<TrialRecord> trial_log;
  std::vector<Subset> greedy_seed;  // chosen seed set per strategy (b)

  nlohmann::json to_json() const;
};

/// Algorithm: pick m uniform in {1..r}, a seed tuple S in V^m with
/// repetition, sample x_S from mu_S, then every other vertex from
/// mu_{S + i} | x_S. Zero-probability seeds are resampled up to 100 times,
/// then the offending vertex is dropped.
Assignment propagation_sampling(const LocalDistributionFamily& family, int r,
                                std::mt19937_64& rng, TrialRecord* record = nullptr);

/// Propagation rounding with an explicit seed set.
Assignment propagation_rounding(const LocalDistributionFamily& family, const Subset& S,
                                std::mt19937_64& rng, TrialRecord* record = nullptr);

struct RoundingErrorBound {
  double variance_sum;      // sum_{t in T} Var[X_t | X_S]
  double l1_distance = 0;   // || mu_T - mu^{|S}_T ||_1, exact when enumerable
  bool exact_checked = false;
  bool pass = true;         // l1 <= variance_sum + 1e-6 (when checked)
};

/// Propagation-rounding error bound: the rounded distribution on T is within
/// the summed conditional variances of the local distribution mu_T.
RoundingErrorBound rounding_error_bound(const LocalDistributionFamily& family, const Subset& S,
                                        const Subset& T);

struct PotentialEstimate {
  int m;
  double phi;        // E_{S in V^m} E_{x_S} E_i Var(X_i | X_S)
  double eps;        // E_{S, x_S} E_{ij~G} || {X_i X_j | x_S} - {X_i|x_S}{X_j|x_S} ||_1
  bool exact;        // enumerated rather than sampled
  double lemma_reference;  // eps^2 / (k * rank_{(eps/k)^2}(G)) for comparison
};

struct PotentialSchedule {
  std::vector<PotentialEstimate> levels;
};

/// Per-conditioning-level potential Phi_m and edge-correlation eps_m.
/// Enumerates exactly when n^m k^m is small, otherwise Monte Carlo with
/// `samples` seed draws per level.
PotentialSchedule potential_schedule(const LocalDistributionFamily& family,
                                     const Csp2Instance& inst, int r, int samples,
                                     std::mt19937_64& rng);

struct RoundInstanceOptions {
  RoundingStrategy strategy = RoundingStrategy::random;
  int trials = 32;
  int rounds = 0;          // 0: use the solution's budget
  int exhaustive_cap = 2;  // strategy (c): enumerate seeds up to this size
  bool with_oracle = true; // brute-force check when within cap
};

/// Full rounding pass over a solved relaxation: runs the chosen strategy,
/// reports the best assignment by exact value and all diagnostics.
RoundingRun round_instance(const Csp2Instance& inst, const MomentMatrix& M,
                           const RoundInstanceOptions& opts, std::mt19937_64& rng);

/// Exact expected value of sampling every vertex independently from its marginal.
double independent_sampling_value(const MarginalSource& family, const Csp2Instance& inst);

}  // namespace lasround
