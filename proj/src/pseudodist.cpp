#include "lasround/pseudodist.hpp"

#include <cmath>

namespace lasround {

ProbTable ProbTable::marginalize(const Subset& to) const {
  if (!subset_contains(verts, to)) throw input_error("marginalize: target not a subset");
  std::vector<int> pos;
  for (int v : to) {
    auto it = std::lower_bound(verts.begin(), verts.end(), v);
    pos.push_back(static_cast<int>(it - verts.begin()));
  }
  ProbTable out;
  out.verts = to;
  out.k = k;
  out.p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pow_size(k, to.size())));
  const std::size_t total = static_cast<std::size_t>(p.size());
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (p[static_cast<Eigen::Index>(idx)] == 0.0) continue;
    Labels full = index_to_labels(idx, k, verts.size());
    Labels sub(to.size());
    for (std::size_t q = 0; q < pos.size(); ++q) sub[q] = full[pos[q]];
    out.p[static_cast<Eigen::Index>(labels_to_index(sub, k))] += p[static_cast<Eigen::Index>(idx)];
  }
  return out;
}

LocalDistributionFamily::LocalDistributionFamily(int n, int k, int order, Provenance prov,
                                                 Populator populator)
    : n_(n), k_(k), order_(order), provenance_(prov), state_(std::make_shared<State>()) {
  state_->populator = std::move(populator);
  if (n_ <= 0 || k_ <= 0) throw input_error("family: n and k must be positive");
  if (order_ < 0) order_ = n_;
}

LocalDistributionFamily LocalDistributionFamily::from_global_distribution(
    int n, int k, std::vector<std::pair<std::size_t, double>> support, int order,
    Provenance prov) {
  double total = 0;
  for (auto& [idx, w] : support) {
    if (w < 0) throw input_error("global distribution: negative mass");
    total += w;
  }
  if (total <= 0) throw input_error("global distribution: zero mass");
  for (auto& [idx, w] : support) w /= total;
  auto sp = std::make_shared<std::vector<std::pair<std::size_t, double>>>(std::move(support));
  auto pop = [n, k, sp](const Subset& T, Eigen::VectorXd& out) {
    out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pow_size(k, T.size())));
    for (const auto& [idx, w] : *sp) {
      Labels sub(T.size());
      // decode only the needed digits of the global odometer index
      for (std::size_t q = 0; q < T.size(); ++q) {
        std::size_t div = pow_size(k, static_cast<std::size_t>(n - 1 - T[q]));
        sub[q] = static_cast<int>((idx / div) % static_cast<std::size_t>(k));
      }
      out[static_cast<Eigen::Index>(labels_to_index(sub, k))] += w;
    }
    return true;
  };
  return LocalDistributionFamily(n, k, order < 0 ? n : order, prov, pop);
}

LocalDistributionFamily LocalDistributionFamily::product(int k,
                                                         std::vector<Eigen::VectorXd> singletons,
                                                         int order) {
  int n = static_cast<int>(singletons.size());
  auto sp = std::make_shared<std::vector<Eigen::VectorXd>>(std::move(singletons));
  auto pop = [k, sp](const Subset& T, Eigen::VectorXd& out) {
    std::size_t sz = pow_size(k, T.size());
    out.resize(static_cast<Eigen::Index>(sz));
    for (std::size_t idx = 0; idx < sz; ++idx) {
      Labels x = index_to_labels(idx, k, T.size());
      double v = 1;
      for (std::size_t q = 0; q < T.size(); ++q) v *= (*sp)[T[q]][x[q]];
      out[static_cast<Eigen::Index>(idx)] = v;
    }
    return true;
  };
  return LocalDistributionFamily(n, k, order < 0 ? n : order, Provenance::constructed, pop);
}

LocalDistributionFamily LocalDistributionFamily::from_tables(
    int n, int k, int order, std::map<Subset, Eigen::VectorXd> tables, Provenance prov) {
  LocalDistributionFamily f(n, k, order, prov);
  for (auto& [T, tab] : tables) {
    if (tab.size() != static_cast<Eigen::Index>(pow_size(k, T.size())))
      throw input_error("from_tables: table size mismatch for subset " + subset_key(T));
    f.state_->cache[T] = std::move(tab);
  }
  return f;
}

bool LocalDistributionFamily::available(const Subset& T) const {
  if (static_cast<int>(T.size()) > order_ + 2) return false;
  return lookup_or_derive(T).has_value();
}

std::optional<Eigen::VectorXd> LocalDistributionFamily::lookup_or_derive(const Subset& T) const {
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    auto it = state_->cache.find(T);
    if (it != state_->cache.end()) return it->second;
  }
  Eigen::VectorXd fresh;
  if (state_->populator && state_->populator(T, fresh)) {
    std::lock_guard<std::mutex> lock(state_->mu);
    auto [it, inserted] = state_->cache.emplace(T, std::move(fresh));
    return it->second;
  }
  // fall back to marginalizing the smallest cached superset
  Subset best;
  Eigen::VectorXd big_table;
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    for (const auto& [S, tab] : state_->cache) {
      if (S.size() > T.size() && subset_contains(S, T) &&
          (best.empty() || S.size() < best.size()))
        best = S;
    }
    if (best.empty()) return std::nullopt;
    big_table = state_->cache.at(best);
  }
  ProbTable big{best, k_, std::move(big_table)};
  ProbTable small = big.marginalize(T);
  std::lock_guard<std::mutex> lock(state_->mu);
  auto [it, inserted] = state_->cache.emplace(T, std::move(small.p));
  return it->second;
}

ProbTable LocalDistributionFamily::marginal(const Subset& Traw) const {
  Subset T = canon_subset(Traw);
  if (static_cast<int>(T.size()) > order_ + 2)
    throw budget_error("marginal: |T| = " + std::to_string(T.size()) + " exceeds budget " +
                       std::to_string(order_ + 2));
  auto tab = lookup_or_derive(T);
  if (!tab) throw unavailable_subset("marginal: subset {" + subset_key(T) + "} not derivable");
  return ProbTable{T, k_, *tab};
}

ConditionedFamily LocalDistributionFamily::condition(const Subset& S, const Labels& xS) const {
  return ConditionedFamily(*this, S, xS);
}

std::vector<Subset> LocalDistributionFamily::materialized_subsets() const {
  std::lock_guard<std::mutex> lock(state_->mu);
  std::vector<Subset> out;
  for (const auto& [T, tab] : state_->cache) out.push_back(T);
  return out;
}

nlohmann::json LocalDistributionFamily::dump() const {
  nlohmann::json j;
  j["n"] = n_;
  j["k"] = k_;
  j["order"] = order_;
  nlohmann::json tables = nlohmann::json::object();
  std::lock_guard<std::mutex> lock(state_->mu);
  for (const auto& [T, tab] : state_->cache) {
    std::vector<double> row(tab.data(), tab.data() + tab.size());
    tables[subset_key(T)] = row;
  }
  j["tables"] = std::move(tables);
  return j;
}

ConditionedFamily::ConditionedFamily(const LocalDistributionFamily& base, Subset seed,
                                     Labels seed_labels)
    : base_(base) {
  if (seed.size() != seed_labels.size()) throw input_error("condition: seed label count mismatch");
  // canonicalize (sort by vertex) while keeping labels aligned; repeated seed
  // vertices must agree
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t q = 0; q < seed.size(); ++q) pairs.emplace_back(seed[q], seed_labels[q]);
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t q = 0; q + 1 < pairs.size(); ++q)
    if (pairs[q].first == pairs[q + 1].first && pairs[q].second != pairs[q + 1].second)
      throw input_error("condition: conflicting labels for repeated seed vertex");
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (auto& [v, a] : pairs) {
    if (v < 0 || v >= base_.n()) throw input_error("condition: seed vertex out of range");
    if (a < 0 || a >= base_.k()) throw input_error("condition: seed label out of range");
    seed_.push_back(v);
    seed_labels_.push_back(a);
  }
  if (seed_.empty()) {
    seed_mass_ = 1.0;
    return;
  }
  ProbTable muS = base_.marginal(seed_);
  seed_mass_ = muS.prob(seed_labels_);
  if (seed_mass_ <= 1e-12)
    throw zero_probability_error("condition: Pr[X_S = x_S] <= 1e-12 for S = {" +
                                 subset_key(seed_) + "}");
}

bool ConditionedFamily::available(const Subset& T) const {
  Subset u = subset_union(canon_subset(T), seed_);
  return base_.available(u);
}

ProbTable ConditionedFamily::marginal(const Subset& Traw) const {
  Subset T = canon_subset(Traw);
  if (seed_.empty()) return base_.marginal(T);
  Subset u = subset_union(T, seed_);
  if (static_cast<int>(u.size()) > order() + 2)
    throw budget_error("conditioned marginal: |T ∪ S| exceeds budget");
  ProbTable joint = base_.marginal(u);
  ProbTable out;
  out.verts = T;
  out.k = joint.k;
  out.p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pow_size(joint.k, T.size())));
  // positions of T's and S's vertices inside u
  std::vector<int> tpos, spos;
  for (int v : T) tpos.push_back(static_cast<int>(std::lower_bound(u.begin(), u.end(), v) - u.begin()));
  for (int v : seed_) spos.push_back(static_cast<int>(std::lower_bound(u.begin(), u.end(), v) - u.begin()));
  const std::size_t total = static_cast<std::size_t>(joint.p.size());
  for (std::size_t idx = 0; idx < total; ++idx) {
    double w = joint.p[static_cast<Eigen::Index>(idx)];
    if (w == 0.0) continue;
    Labels full = index_to_labels(idx, joint.k, u.size());
    bool match = true;
    for (std::size_t q = 0; q < spos.size(); ++q)
      if (full[spos[q]] != seed_labels_[q]) {
        match = false;
        break;
      }
    if (!match) continue;
    Labels sub(T.size());
    for (std::size_t q = 0; q < tpos.size(); ++q) sub[q] = full[tpos[q]];
    out.p[static_cast<Eigen::Index>(labels_to_index(sub, joint.k))] += w;
  }
  out.p /= seed_mass_;
  return out;
}

// ---------------------------------------------------------------------------

double collision_probability(const Eigen::VectorXd& dist) { return dist.squaredNorm(); }

double variance_k(const Eigen::VectorXd& dist) {
  double v = 0;
  for (Eigen::Index a = 0; a < dist.size(); ++a) v += dist[a] * (1.0 - dist[a]);
  return v;
}

double statistical_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw input_error("statistical_distance: shape mismatch");
  return (p - q).cwiseAbs().sum();
}

double covariance(const MarginalSource& f, int i, int a, int j, int b) {
  if (i == j) {
    ProbTable pi = f.singleton(i);
    double eab = (a == b) ? pi.p[a] : 0.0;
    return eab - pi.p[a] * pi.p[b];
  }
  ProbTable pij = f.pair(i, j);
  ProbTable pi = f.singleton(i);
  ProbTable pj = f.singleton(j);
  Labels x(2);
  x[i < j ? 0 : 1] = a;
  x[i < j ? 1 : 0] = b;
  return pij.prob(x) - pi.p[a] * pj.p[b];
}

Eigen::MatrixXd covariance_matrix(const MarginalSource& f) {
  const int n = f.n(), k = f.k();
  Eigen::MatrixXd C(n * k, n * k);
  std::vector<Eigen::VectorXd> singles(n);
  for (int i = 0; i < n; ++i) singles[i] = f.singleton(i).p;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        double eab = (a == b) ? singles[i][a] : 0.0;
        C(i * k + a, i * k + b) = eab - singles[i][a] * singles[i][b];
      }
    }
    for (int j = i + 1; j < n; ++j) {
      ProbTable pij = f.marginal({i, j});
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          double cov = pij.p[a * k + b] - singles[i][a] * singles[j][b];
          C(i * k + a, j * k + b) = cov;
          C(j * k + b, i * k + a) = cov;
        }
      }
    }
  }
  return C;
}

StatDistCovIdentity check_statdist_cov_identity(const MarginalSource& f, int i, int j) {
  ProbTable pij = f.pair(i, j);
  ProbTable pi = f.singleton(std::min(i, j));
  ProbTable pj = f.singleton(std::max(i, j));
  const int k = f.k();
  Eigen::VectorXd prod(k * k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) prod[a * k + b] = pi.p[a] * pj.p[b];
  double lhs = statistical_distance(pij.p, prod);
  double rhs = 0;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) rhs += std::abs(covariance(f, std::min(i, j), a, std::max(i, j), b));
  return {lhs, rhs, std::abs(lhs - rhs) <= 1e-9};
}

CondVarDecrement conditional_variance_decrement(const MarginalSource& f, int i, int j) {
  const int k = f.k();
  ProbTable pij = f.pair(i, j);  // over sorted {min, max}
  const bool iFirst = i < j;
  ProbTable pi = f.singleton(i);
  ProbTable pj = f.singleton(j);
  double var_i = variance_k(pi.p);

  // E_{X_j} Var[X_i | X_j] by direct conditioning of the pair table
  double evar = 0;
  for (int b = 0; b < k; ++b) {
    double pb = pj.p[b];
    if (pb <= 0) continue;
    Eigen::VectorXd cond(k);
    for (int a = 0; a < k; ++a) cond[a] = (iFirst ? pij.p[a * k + b] : pij.p[b * k + a]) / pb;
    evar += pb * variance_k(cond);
  }
  double decrement = var_i - evar;

  double bound = 0;
  for (int b = 0; b < k; ++b) {
    double var_jb = pj.p[b] * (1.0 - pj.p[b]);
    if (var_jb < 1e-12) continue;  // degenerate indicator: term contributes 0
    for (int a = 0; a < k; ++a) {
      double cov = covariance(f, i, a, j, b);
      bound += cov * cov / var_jb;
    }
  }
  bound /= k;
  return {decrement, bound, decrement >= bound - 1e-9};
}

PiDistance pi_distance(const MarginalSource& f, int i, int j, const std::vector<int>& pi) {
  const int k = f.k();
  if (static_cast<int>(pi.size()) != k) throw input_error("pi_distance: bijection size mismatch");
  {
    std::vector<uint8_t> seen(k, 0);
    for (int v : pi) {
      if (v < 0 || v >= k || seen[v]) throw input_error("pi_distance: not a bijection");
      seen[v] = 1;
    }
  }
  ProbTable pij = f.pair(i, j);
  const bool iFirst = i < j;
  ProbTable mi = f.singleton(i);
  ProbTable mj = f.singleton(j);
  double dist = 0, covsum = 0;
  for (int a = 0; a < k; ++a) {
    int b = pi[a];
    double joint = iFirst ? pij.p[a * k + b] : pij.p[b * k + a];
    dist += std::abs(joint - mi.p[a] * mj.p[b]);
    covsum += std::abs(covariance(f, i, a, j, b));
  }
  return {dist, covsum, std::abs(dist - covsum) <= 1e-9};
}

double average_variance(const MarginalSource& f) {
  double acc = 0;
  for (int i = 0; i < f.n(); ++i) acc += variance_k(f.singleton(i).p);
  return acc / f.n();
}

double consistency_violation(const LocalDistributionFamily& f) {
  auto subsets = f.materialized_subsets();
  double worst = 0;
  for (const auto& big : subsets) {
    for (const auto& small : subsets) {
      if (small.size() >= big.size() || !subset_contains(big, small)) continue;
      ProbTable down = f.marginal(big).marginalize(small);
      ProbTable direct = f.marginal(small);
      worst = std::max(worst, statistical_distance(down.p, direct.p));
    }
  }
  return worst;
}

}  // namespace lasround
