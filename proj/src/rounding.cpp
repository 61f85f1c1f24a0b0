#include "lasround/rounding.hpp"

#include <cmath>

#include "lasround/spectral.hpp"

namespace lasround {

std::string to_string(RoundingStrategy s) {
  switch (s) {
    case RoundingStrategy::random: return "random";
    case RoundingStrategy::greedy: return "greedy";
    case RoundingStrategy::exhaustive: return "exhaustive";
  }
  return "random";
}

RoundingStrategy strategy_from_string(const std::string& s) {
  if (s == "random") return RoundingStrategy::random;
  if (s == "greedy") return RoundingStrategy::greedy;
  if (s == "exhaustive") return RoundingStrategy::exhaustive;
  throw input_error("unknown rounding strategy: " + s);
}

namespace {

/// Sample x_S from mu_S and every other vertex from the conditioned
/// singletons. Retries on zero-probability conditioning; after 100 failures
/// the vertex at which conditioning failed is dropped from the seed.
Assignment propagate_from_seed(const LocalDistributionFamily& family, Subset S,
                               std::mt19937_64& rng, TrialRecord* record) {
  const int n = family.n(), k = family.k();
  while (true) {
    int failed_vertex = -1;
    for (int attempt = 0; attempt < 100; ++attempt) {
      Labels xS;
      try {
        Labels labels(S.size());
        if (!S.empty()) {
          ProbTable muS = family.marginal(S);
          std::size_t idx = static_cast<std::size_t>(sample_index(muS.p, rng));
          labels = index_to_labels(idx, k, S.size());
        }
        xS = labels;
        Assignment out{Labels(static_cast<std::size_t>(n), 0)};
        for (std::size_t q = 0; q < S.size(); ++q) out.labels[S[q]] = xS[q];
        ConditionedFamily cf = S.empty() ? family.condition({}, {})
                                         : family.condition(S, xS);
        for (int i = 0; i < n; ++i) {
          if (std::binary_search(S.begin(), S.end(), i)) continue;
          failed_vertex = i;
          ProbTable cond = cf.singleton(i);
          out.labels[i] = sample_index(cond.p, rng);
        }
        if (record) {
          record->seed = S;
          record->seed_labels = xS;
          record->m = static_cast<int>(S.size());
        }
        return out;
      } catch (const zero_probability_error&) {
        continue;  // resample x_S
      }
    }
    // persistent zero-probability event: drop the offending vertex
    if (S.empty()) throw zero_probability_error("propagation: empty seed keeps failing");
    int drop = failed_vertex >= 0 ? failed_vertex : S.back();
    Subset next;
    for (int v : S)
      if (v != drop) next.push_back(v);
    if (next.size() == S.size()) next.pop_back();
    S = std::move(next);
  }
}

}  // namespace

Assignment propagation_sampling(const LocalDistributionFamily& family, int r,
                                std::mt19937_64& rng, TrialRecord* record) {
  if (r < 1) throw input_error("propagation_sampling: r must be >= 1");
  if (family.order() < r) throw budget_error("propagation_sampling: family order below r");
  std::uniform_int_distribution<int> pick_m(1, r);
  std::uniform_int_distribution<int> pick_v(0, family.n() - 1);
  int m = pick_m(rng);
  Subset S;
  for (int q = 0; q < m; ++q) S.push_back(pick_v(rng));  // repetition allowed
  S = canon_subset(S);
  Assignment out = propagate_from_seed(family, S, rng, record);
  if (record) record->m = m;
  return out;
}

Assignment propagation_rounding(const LocalDistributionFamily& family, const Subset& S,
                                std::mt19937_64& rng, TrialRecord* record) {
  Subset seed = canon_subset(S);
  if (static_cast<int>(seed.size()) > family.order() + 1)
    throw budget_error("propagation_rounding: seed exceeds conditioning budget");
  return propagate_from_seed(family, seed, rng, record);
}

RoundingErrorBound rounding_error_bound(const LocalDistributionFamily& family, const Subset& Sraw,
                                        const Subset& Traw) {
  Subset S = canon_subset(Sraw), T = canon_subset(Traw);
  const int k = family.k();
  RoundingErrorBound out;

  ProbTable muS = S.empty() ? ProbTable{{}, k, Eigen::VectorXd::Ones(1)} : family.marginal(S);
  std::size_t seed_space = static_cast<std::size_t>(muS.p.size());
  std::size_t t_space = pow_size(k, T.size());

  out.variance_sum = 0;
  Eigen::VectorXd rounded = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t_space));
  bool enumerable = seed_space * t_space <= 2'000'000;
  for (std::size_t si = 0; si < seed_space; ++si) {
    double mass = muS.p[static_cast<Eigen::Index>(si)];
    if (mass <= 1e-12) continue;
    Labels xS = index_to_labels(si, k, S.size());
    ConditionedFamily cf = family.condition(S, xS);
    std::vector<Eigen::VectorXd> cond(T.size());
    for (std::size_t q = 0; q < T.size(); ++q) {
      cond[q] = cf.singleton(T[q]).p;
      out.variance_sum += mass * variance_k(cond[q]);
    }
    if (!enumerable) continue;
    for (std::size_t ti = 0; ti < t_space; ++ti) {
      Labels y = index_to_labels(ti, k, T.size());
      double p = mass;
      for (std::size_t q = 0; q < T.size() && p > 0; ++q) p *= cond[q][y[q]];
      rounded[static_cast<Eigen::Index>(ti)] += p;
    }
  }
  if (enumerable) {
    ProbTable muT = family.marginal(T);
    out.l1_distance = statistical_distance(muT.p, rounded);
    out.exact_checked = true;
    out.pass = out.l1_distance <= out.variance_sum + 1e-6;
  }
  return out;
}

PotentialSchedule potential_schedule(const LocalDistributionFamily& family,
                                     const Csp2Instance& inst, int r, int samples,
                                     std::mt19937_64& rng) {
  if (family.order() < r) throw budget_error("potential_schedule: family order below r");
  const int n = family.n(), k = family.k();
  const auto& graph = inst.graph();
  double total_w = 0;
  for (const auto& e : graph.edges) total_w += e.w;

  SpectralProfile prof = spectral_profile(graph);

  auto seed_stats = [&](const Subset& S, const Labels& xS) {
    ConditionedFamily cf = family.condition(S, xS);
    double var = 0;
    for (int i = 0; i < n; ++i) var += variance_k(cf.singleton(i).p);
    var /= n;
    double eps = 0;
    for (const auto& e : graph.edges) {
      ProbTable pij = cf.marginal({e.i, e.j});
      ProbTable pi = cf.singleton(e.i);
      ProbTable pj = cf.singleton(e.j);
      Eigen::VectorXd prod(k * k);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) prod[a * k + b] = pi.p[a] * pj.p[b];
      eps += e.w * statistical_distance(pij.p, prod);
    }
    return std::make_pair(var, eps / total_w);
  };

  PotentialSchedule sched;
  for (int m = 1; m <= r; ++m) {
    double tuple_count = std::pow(static_cast<double>(n), m);
    double work = tuple_count * std::pow(static_cast<double>(k), m);
    PotentialEstimate est;
    est.m = m;
    double phi = 0, eps = 0;
    if (work <= 20000) {
      est.exact = true;
      Subset tuple(static_cast<std::size_t>(m), 0);
      std::size_t tuples = static_cast<std::size_t>(tuple_count);
      for (std::size_t t = 0; t < tuples; ++t) {
        Subset S = canon_subset(tuple);
        ProbTable muS = family.marginal(S);
        for (std::size_t si = 0; si < static_cast<std::size_t>(muS.p.size()); ++si) {
          double mass = muS.p[static_cast<Eigen::Index>(si)];
          if (mass <= 1e-12) continue;
          auto [v, e] = seed_stats(S, index_to_labels(si, k, S.size()));
          phi += mass * v / tuples;
          eps += mass * e / tuples;
        }
        for (int q = m - 1; q >= 0; --q) {
          if (++tuple[q] < n) break;
          tuple[q] = 0;
        }
      }
    } else {
      est.exact = false;
      std::uniform_int_distribution<int> pick_v(0, n - 1);
      for (int s = 0; s < samples; ++s) {
        Subset S;
        for (int q = 0; q < m; ++q) S.push_back(pick_v(rng));
        S = canon_subset(S);
        ProbTable muS = family.marginal(S);
        std::size_t si = static_cast<std::size_t>(sample_index(muS.p, rng));
        auto [v, e] = seed_stats(S, index_to_labels(si, k, S.size()));
        phi += v / samples;
        eps += e / samples;
      }
    }
    est.phi = phi;
    est.eps = eps;
    double tau = (eps / k) * (eps / k);
    int rank = threshold_rank(prof, tau);
    est.lemma_reference = rank > 0 ? eps * eps / (k * rank) : 0.0;
    sched.levels.push_back(est);
  }
  return sched;
}

double independent_sampling_value(const MarginalSource& family, const Csp2Instance& inst) {
  const int k = inst.k();
  double acc = 0, total = 0;
  for (const auto& c : inst.constraints()) {
    ProbTable mi = family.singleton(c.i);
    ProbTable mj = family.singleton(c.j);
    double sat = 0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (c.rel.contains(a, b)) sat += mi.p[a] * mj.p[b];
    acc += c.w * sat;
    total += c.w;
  }
  return acc / total;
}

RoundingRun round_instance(const Csp2Instance& inst, const MomentMatrix& M,
                           const RoundInstanceOptions& opts, std::mt19937_64& rng) {
  LocalDistributionFamily family = extract_local_family(M);
  int r = opts.rounds > 0 ? opts.rounds : std::max(1, M.rounds());
  if (r > family.order()) r = family.order();

  RoundingRun run;
  run.strategy = to_string(opts.strategy);
  run.trials = opts.trials;
  run.rounds = r;
  run.sdp_objective = M.objective;
  run.independent_value = independent_sampling_value(family, inst);

  auto consider = [&](Assignment&& x, TrialRecord rec) {
    rec.value = inst.value(x);
    if (run.trial_log.empty() || rec.value > run.best_value) {
      run.best_value = rec.value;
      run.best = x;
    }
    run.trial_log.push_back(std::move(rec));
  };

  switch (opts.strategy) {
    case RoundingStrategy::random: {
      for (int t = 0; t < opts.trials; ++t) {
        TrialRecord rec;
        Assignment x = propagation_sampling(family, r, rng, &rec);
        consider(std::move(x), rec);
      }
      break;
    }
    case RoundingStrategy::greedy: {
      EmbeddingSet vecs = extract_vectors(M);
      // at most r seed vertices so conditioning stays within budget
      SeedVectorResult seeds = greedy_vertex_seeds(vecs, inst.k(), 1.0 / r);
      run.greedy_seed.push_back(seeds.seed_vertices);
      for (int t = 0; t < opts.trials; ++t) {
        TrialRecord rec;
        Assignment x = propagation_rounding(family, seeds.seed_vertices, rng, &rec);
        consider(std::move(x), rec);
      }
      break;
    }
    case RoundingStrategy::exhaustive: {
      int cap = std::min(opts.exhaustive_cap, r);
      std::vector<Subset> seeds;
      std::function<void(Subset&, int)> rec_enum = [&](Subset& cur, int start) {
        seeds.push_back(cur);
        if (static_cast<int>(cur.size()) >= cap) return;
        for (int v = start; v < inst.n(); ++v) {
          cur.push_back(v);
          rec_enum(cur, v + 1);
          cur.pop_back();
        }
      };
      Subset cur;
      rec_enum(cur, 0);
      int per_seed = std::max(1, opts.trials / static_cast<int>(seeds.size()));
      for (const auto& S : seeds) {
        for (int t = 0; t < per_seed; ++t) {
          TrialRecord rec;
          Assignment x = propagation_rounding(family, S, rng, &rec);
          consider(std::move(x), rec);
        }
      }
      break;
    }
  }

  if (opts.with_oracle) {
    double total = 1;
    for (int i = 0; i < inst.n() && total <= kEnumerationCap; ++i) total *= inst.k();
    if (total <= kEnumerationCap) {
      run.brute_force_opt = brute_force_optimum(inst).first;
      if (run.best_value > *run.brute_force_opt + 1e-9)
        throw check_failure("round_instance: rounded value exceeds the brute-force optimum");
    }
  }
  return run;
}

nlohmann::json RoundingRun::to_json() const {
  nlohmann::json j;
  j["strategy"] = strategy;
  j["trials"] = trials;
  j["rounds"] = rounds;
  j["seed"] = seed;
  j["best_value"] = best_value;
  j["best_assignment"] = best.labels;
  j["sdp_objective"] = sdp_objective;
  j["independent_value"] = independent_value;
  if (brute_force_opt) j["brute_force_opt"] = *brute_force_opt;
  if (!greedy_seed.empty()) j["greedy_seed"] = greedy_seed;
  nlohmann::json log = nlohmann::json::array();
  for (const auto& t : trial_log)
    log.push_back({{"m", t.m}, {"seed", t.seed}, {"seed_labels", t.seed_labels}, {"value", t.value}});
  j["trial_log"] = std::move(log);
  return j;
}

}  // namespace lasround
