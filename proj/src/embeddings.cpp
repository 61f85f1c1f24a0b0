#include "lasround/embeddings.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace lasround {

EmbeddingSet EmbeddingSet::explicit_rows(Eigen::MatrixXd rows, IndexSpace space, int k) {
  EmbeddingSet s;
  s.count_ = static_cast<int>(rows.rows());
  s.rows_ = std::move(rows);
  s.space_ = space;
  s.k_ = k;
  s.is_implicit_ = false;
  if (!s.rows_.allFinite()) throw input_error("embedding: non-finite vector entries");
  return s;
}

EmbeddingSet EmbeddingSet::implicit(int count, GramFn gram, IndexSpace space, int k) {
  EmbeddingSet s;
  s.count_ = count;
  s.gram_ = std::move(gram);
  s.space_ = space;
  s.k_ = k;
  s.is_implicit_ = true;
  return s;
}

double EmbeddingSet::gram(int i, int j) const {
  if (is_implicit_) return gram_(i, j);
  return rows_.row(i).dot(rows_.row(j));
}

Eigen::VectorXd EmbeddingSet::row(int i) const {
  if (is_implicit_) throw input_error("embedding: implicit set has no explicit rows");
  return rows_.row(i);
}

const Eigen::MatrixXd& EmbeddingSet::rows() const {
  if (is_implicit_) throw input_error("embedding: implicit set has no explicit rows");
  return rows_;
}

EmbeddingSet gram_factorize(const Eigen::MatrixXd& psd, double tol,
                            EmbeddingSet::IndexSpace space, int k) {
  if (psd.rows() != psd.cols()) throw input_error("gram_factorize: matrix not square");
  Eigen::MatrixXd sym = 0.5 * (psd + psd.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("gram_factorize: eigensolver failed");
  double lmin = es.eigenvalues().minCoeff();
  if (lmin < -tol) {
    std::ostringstream msg;
    msg << "gram_factorize: min eigenvalue " << lmin << " below -" << tol;
    throw input_error(msg.str());
  }
  Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd rows = es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
  return EmbeddingSet::explicit_rows(std::move(rows), space, k);
}

namespace {

// guarded normalized inner product; zero when either vector is below the floor
double bar_dot(const EmbeddingSet& s, int p, int q, double np, double nq) {
  if (np < kNormFloor || nq < kNormFloor) return 0.0;
  return s.gram(p, q) / (np * nq);
}

void require_per_vertex_orthogonality(const EmbeddingSet& v, int n, int k, double tol) {
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        if (std::abs(v.gram(v.id(i, a), v.id(i, b))) > tol)
          throw input_error("label vectors: per-vertex orthogonality violation above " +
                            std::to_string(tol));
}

}  // namespace

SandwichCheck general_tensoring_bounds(const EmbeddingSet& u, int n, int k, int i, int j) {
  double cov_abs_sum = 0, inner = 0, upper = 0;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      double cov = u.gram(u.id(i, a), u.id(j, b));
      cov_abs_sum += std::abs(cov);
      double via = u.norm2(u.id(i, a)), vjb = u.norm2(u.id(j, b));
      if (via < kNormFloor || vjb < kNormFloor) continue;
      inner += cov * cov / std::sqrt(via * vjb);
      upper += 0.5 * (1.0 / via + 1.0 / vjb) * cov * cov;
    }
  }
  inner /= k;
  upper /= k;
  double lower = cov_abs_sum * cov_abs_sum / (static_cast<double>(k) * k);
  bool pass = lower <= inner + 1e-9 && inner <= upper + 1e-9;
  return {lower, inner, upper, pass};
}

EmbeddingSet tensor_embedding_general(const EmbeddingSet& u, int n, int k) {
  if (u.size() != n * k) throw input_error("tensor_embedding_general: size mismatch");
  auto G = std::make_shared<Eigen::MatrixXd>(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      auto chk = general_tensoring_bounds(u, n, k, i, j);
      if (!chk.pass) {
        std::ostringstream msg;
        msg << "tensoring sandwich violated at (" << i << "," << j << "): " << chk.lower
            << " <= " << chk.inner << " <= " << chk.upper;
        throw check_failure(msg.str());
      }
      (*G)(i, j) = (*G)(j, i) = chk.inner;
    }
    if ((*G)(i, i) > 1.0 + 1e-9)
      throw check_failure("tensor_embedding_general: ||v_i||^2 > 1");
  }
  return EmbeddingSet::implicit(n, [G](int i, int j) { return (*G)(i, j); });
}

SandwichCheck ug_tensoring_bounds(const EmbeddingSet& u, const EmbeddingSet& v, int n, int k,
                                  int i, int j, const std::vector<int>& pi) {
  double diag_cov = 0;
  for (int a = 0; a < k; ++a) diag_cov += std::abs(u.gram(u.id(i, a), u.id(j, pi[a])));
  double lower = diag_cov * diag_cov * diag_cov * diag_cov;

  double inner = 0, upper = 0;
  for (int a = 0; a < k; ++a) {
    double nua = std::sqrt(std::max(0.0, u.norm2(u.id(i, a))));
    double nva = std::sqrt(std::max(0.0, v.norm2(v.id(i, a))));
    for (int b = 0; b < k; ++b) {
      double nub = std::sqrt(std::max(0.0, u.norm2(u.id(j, b))));
      double nvb = std::sqrt(std::max(0.0, v.norm2(v.id(j, b))));
      double ubar = bar_dot(u, u.id(i, a), u.id(j, b), nua, nub);
      double vbar = bar_dot(v, v.id(i, a), v.id(j, b), nva, nvb);
      inner += nua * nub * ubar * ubar * vbar * vbar;
      double cov = u.gram(u.id(i, a), u.id(j, b));
      double via = nua * nua, vjb = nub * nub;
      if (via < kNormFloor || vjb < kNormFloor) continue;
      upper += 0.5 * (1.0 / via + 1.0 / vjb) * cov * cov;
    }
  }
  bool pass = lower <= inner + 1e-9 && inner <= upper + 1e-9;
  return {lower, inner, upper, pass};
}

EmbeddingSet tensor_embedding_ug(const EmbeddingSet& u, const EmbeddingSet& v, int n, int k) {
  if (u.size() != n * k || v.size() != n * k)
    throw input_error("tensor_embedding_ug: size mismatch");
  require_per_vertex_orthogonality(v, n, k, 1e-7);
  auto G = std::make_shared<Eigen::MatrixXd>(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double inner = 0;
      for (int a = 0; a < k; ++a) {
        double nua = std::sqrt(std::max(0.0, u.norm2(u.id(i, a))));
        double nva = std::sqrt(std::max(0.0, v.norm2(v.id(i, a))));
        for (int b = 0; b < k; ++b) {
          double nub = std::sqrt(std::max(0.0, u.norm2(u.id(j, b))));
          double nvb = std::sqrt(std::max(0.0, v.norm2(v.id(j, b))));
          double ubar = bar_dot(u, u.id(i, a), u.id(j, b), nua, nub);
          double vbar = bar_dot(v, v.id(i, a), v.id(j, b), nva, nvb);
          inner += nua * nub * ubar * ubar * vbar * vbar;
        }
      }
      (*G)(i, j) = (*G)(j, i) = inner;
    }
    double norm_sum = 0;
    for (int a = 0; a < k; ++a) norm_sum += u.norm2(u.id(i, a));
    if ((*G)(i, i) > norm_sum + 1e-7 || (*G)(i, i) > 1.0 + 1e-9)
      throw check_failure("tensor_embedding_ug: ||v_i||^2 exceeds sum_a ||u_ia||^2 <= 1");
  }
  return EmbeddingSet::implicit(n, [G](int i, int j) { return (*G)(i, j); });
}

double residual_statistic(const Eigen::MatrixXd& rows) {
  const int n = static_cast<int>(rows.rows());
  Eigen::VectorXd norms(n);
  for (int i = 0; i < n; ++i) norms[i] = rows.row(i).norm();
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    if (norms[i] < kNormFloor) continue;
    for (int j = 0; j < n; ++j) {
      if (norms[j] < kNormFloor) continue;
      double d = rows.row(i).dot(rows.row(j));
      acc += d * d / (norms[i] * norms[j]);
    }
  }
  return acc / (static_cast<double>(n) * n);
}

namespace {

// index maximizing E_i <w_i, wbar_j>^2 among candidates with norm above floor
int best_pick(const Eigen::MatrixXd& W) {
  const int n = static_cast<int>(W.rows());
  int best = -1;
  double best_score = -1;
  for (int j = 0; j < n; ++j) {
    double nj2 = W.row(j).squaredNorm();
    if (nj2 < kNormFloor * kNormFloor) continue;
    double score = (W * W.row(j).transpose()).squaredNorm() / nj2;
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

Eigen::MatrixXd orthonormal_basis(const std::vector<Eigen::VectorXd>& vecs) {
  if (vecs.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd B(vecs.front().size(), vecs.size());
  int cols = 0;
  for (const auto& v : vecs) {
    Eigen::VectorXd w = v;
    for (int c = 0; c < cols; ++c) w -= B.col(c).dot(w) * B.col(c);
    double nw = w.norm();
    if (nw < 1e-10) continue;
    B.col(cols++) = w / nw;
  }
  return B.leftCols(cols);
}

}  // namespace

SeedSelection greedy_basis(const EmbeddingSet& vectors, double eps) {
  if (eps <= 0) throw input_error("greedy_basis: eps must be positive");
  Eigen::MatrixXd W = vectors.rows();
  const int n = static_cast<int>(W.rows());
  const int cap = static_cast<int>(std::ceil(1.0 / eps));
  SeedSelection sel;
  std::vector<Eigen::VectorXd> basis_vecs;
  while (static_cast<int>(sel.picked.size()) < cap) {
    double stat = residual_statistic(W);
    if (stat <= eps) break;
    int j = best_pick(W);
    if (j < 0) break;  // nothing left above the norm floor
    sel.step_statistic.push_back(stat);
    Eigen::VectorXd u = W.row(j).normalized();
    double before = W.rowwise().squaredNorm().mean();
    Eigen::VectorXd proj = W * u;
    W -= proj * u.transpose();
    double after = W.rowwise().squaredNorm().mean();
    sel.step_decrease.push_back(before - after);
    sel.picked.push_back(j);
    basis_vecs.push_back(u);
  }
  sel.basis = orthonormal_basis(basis_vecs);
  sel.final_statistic = residual_statistic(W);
  sel.residual_norms.resize(n);
  for (int i = 0; i < n; ++i) sel.residual_norms[i] = W.row(i).norm();
  sel.guarantee_met = sel.final_statistic <= eps + 1e-7 &&
                      static_cast<int>(sel.picked.size()) <= cap;
  return sel;
}

SeedSelection greedy_basis_general(const EmbeddingSet& vectors, const ProjectorRule& rule,
                                   double eps) {
  if (eps <= 0) throw input_error("greedy_basis_general: eps must be positive");
  const Eigen::MatrixXd& V = vectors.rows();
  Eigen::MatrixXd W = V;
  const int cap = static_cast<int>(std::ceil(1.0 / eps));
  SeedSelection sel;
  std::vector<Eigen::VectorXd> basis_vecs;
  while (static_cast<int>(sel.picked.size()) < cap) {
    double stat = residual_statistic(W);
    if (stat <= eps) break;
    int j = best_pick(W);
    if (j < 0) break;
    sel.step_statistic.push_back(stat);
    sel.picked.push_back(j);
    basis_vecs.push_back(V.row(j));
    Eigen::MatrixXd Q = rule(sel.picked);
    for (int p : sel.picked) {
      if ((Q * V.row(p).transpose()).norm() > 1e-9 * std::max(1.0, V.row(p).norm()))
        throw input_error("greedy_basis_general: projector rule does not annihilate span(U)");
    }
    double before = W.rowwise().squaredNorm().mean();
    W = V * Q.transpose();
    double after = W.rowwise().squaredNorm().mean();
    sel.step_decrease.push_back(before - after);
  }
  sel.basis = orthonormal_basis(basis_vecs);
  sel.final_statistic = residual_statistic(W);
  sel.residual_norms.resize(V.rows());
  for (int i = 0; i < V.rows(); ++i) sel.residual_norms[i] = W.row(i).norm();
  sel.guarantee_met = sel.final_statistic <= eps + 1e-7 &&
                      static_cast<int>(sel.picked.size()) <= cap;
  return sel;
}

SeedVectorResult greedy_vertex_seeds(const EmbeddingSet& label_vectors, int k, double eps) {
  if (label_vectors.space() != EmbeddingSet::IndexSpace::vertex_label)
    throw input_error("greedy_vertex_seeds: expected vertex-label vectors");
  const Eigen::MatrixXd& V = label_vectors.rows();
  const int n = static_cast<int>(V.rows()) / k;

  // projector annihilating every label vector of every selected vertex
  ProjectorRule rule = [&V, n, k](const std::vector<int>& picked) {
    std::vector<Eigen::VectorXd> span;
    std::vector<bool> seen(n, false);
    for (int id : picked) {
      int vertex = id / k;
      if (seen[vertex]) continue;
      seen[vertex] = true;
      for (int a = 0; a < k; ++a) span.push_back(V.row(vertex * k + a));
    }
    Eigen::MatrixXd B = orthonormal_basis(span);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(V.cols(), V.cols());
    if (B.cols() > 0) Q -= B * B.transpose();
    return Q;
  };

  SeedVectorResult out;
  out.selection = greedy_basis_general(label_vectors, rule, eps);
  std::vector<bool> seen(n, false);
  for (int id : out.selection.picked) seen[id / k] = true;
  for (int i = 0; i < n; ++i)
    if (seen[i]) out.seed_vertices.push_back(i);

  out.residual_variance.assign(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < k; ++a) {
      double r = out.selection.residual_norms[i * k + a];
      out.residual_variance[i] += r * r;
    }
  double acc = 0;
  for (double r : out.residual_variance) acc += r;
  out.mean_residual_variance = acc / n;
  return out;
}

SeedVectorResult seed_from_sdp_vectors(const EmbeddingSet& label_vectors, int m, int k) {
  if (m < 1) throw input_error("seed_from_sdp_vectors: m must be >= 1");
  return greedy_vertex_seeds(label_vectors, k, 1.0 / (static_cast<double>(k) * k * m));
}

std::vector<VarianceBound> variance_bound_from_projection(const LocalDistributionFamily& family,
                                                          const EmbeddingSet& label_vectors,
                                                          const Subset& Sraw) {
  const int n = family.n(), k = family.k();
  Subset S = canon_subset(Sraw);
  const Eigen::MatrixXd& V = label_vectors.rows();

  // consistency of vectors with the family's pair probabilities
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      ProbTable t = (i == j) ? family.singleton(i) : family.marginal({i, j});
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          double prob = (i == j) ? (a == b ? t.p[a] : 0.0) : t.p[a * k + b];
          if (std::abs(V.row(i * k + a).dot(V.row(j * k + b)) - prob) > 1e-7)
            throw input_error("variance_bound_from_projection: vectors inconsistent with family");
        }
      }
    }
  }

  std::vector<Eigen::VectorXd> span;
  for (int j : S)
    for (int b = 0; b < k; ++b) span.push_back(V.row(j * k + b));
  Eigen::MatrixXd B = orthonormal_basis(span);

  // enumerate seed assignments once
  ProbTable muS = family.marginal(S);
  std::vector<VarianceBound> out;
  for (int i = 0; i < n; ++i) {
    VarianceBound vb;
    vb.vertex = i;
    vb.per_label_variance.assign(k, 0.0);
    vb.per_label_bound.assign(k, 0.0);
    for (int a = 0; a < k; ++a) {
      Eigen::VectorXd via = V.row(i * k + a);
      Eigen::VectorXd w = via;
      if (B.cols() > 0) w -= B * (B.transpose() * via);
      vb.per_label_bound[a] = w.squaredNorm();
    }
    double cond_var = 0;
    std::vector<double> label_var(k, 0.0);
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(muS.p.size()); ++idx) {
      double mass = muS.p[static_cast<Eigen::Index>(idx)];
      if (mass <= 1e-12) continue;
      Labels xS = index_to_labels(idx, k, S.size());
      ConditionedFamily cf = family.condition(S, xS);
      ProbTable cond = cf.singleton(i);
      cond_var += mass * variance_k(cond.p);
      for (int a = 0; a < k; ++a) label_var[a] += mass * cond.p[a] * (1.0 - cond.p[a]);
    }
    vb.conditional_variance = cond_var;
    vb.per_label_variance = label_var;
    vb.projection_bound = 0;
    for (int a = 0; a < k; ++a) vb.projection_bound += vb.per_label_bound[a];
    vb.pass = cond_var <= vb.projection_bound + 1e-7;
    for (int a = 0; a < k && vb.pass; ++a)
      vb.pass = label_var[a] <= vb.per_label_bound[a] + 1e-7;
    out.push_back(std::move(vb));
  }
  return out;
}

EmbeddingSet vertex_vectors_U(const EmbeddingSet& u, const EmbeddingSet& v, int n, int k) {
  if (u.size() != n * k || v.size() != n * k) throw input_error("vertex_vectors_U: size mismatch");
  require_per_vertex_orthogonality(v, n, k, 1e-7);
  auto G = std::make_shared<Eigen::MatrixXd>(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double acc = 0;
      for (int a = 0; a < k; ++a) {
        double nua = std::sqrt(std::max(0.0, u.norm2(u.id(i, a))));
        double nva = std::sqrt(std::max(0.0, v.norm2(v.id(i, a))));
        for (int b = 0; b < k; ++b) {
          double nub = std::sqrt(std::max(0.0, u.norm2(u.id(j, b))));
          double nvb = std::sqrt(std::max(0.0, v.norm2(v.id(j, b))));
          double ubar = bar_dot(u, u.id(i, a), u.id(j, b), nua, nub);
          double vbar = bar_dot(v, v.id(i, a), v.id(j, b), nva, nvb);
          acc += nua * nub * ubar * ubar * vbar;
        }
      }
      (*G)(i, j) = (*G)(j, i) = acc;
    }
  }
  return EmbeddingSet::implicit(n, [G](int i, int j) { return (*G)(i, j); });
}

double ug_edge_energy(const EmbeddingSet& label_vectors, const Csp2Instance& inst) {
  const int k = inst.k();
  double acc = 0, total = 0;
  for (const auto& c : inst.constraints()) {
    auto pi = c.rel.as_bijection();
    if (!pi) throw input_error("ug_edge_energy: non-bijection constraint");
    double e = 0;
    for (int a = 0; a < k; ++a) {
      int p = label_vectors.id(c.i, a), q = label_vectors.id(c.j, (*pi)[a]);
      e += label_vectors.norm2(p) + label_vectors.norm2(q) - 2 * label_vectors.gram(p, q);
    }
    acc += c.w * e;
    total += c.w;
  }
  return acc / total;
}

HighLocalCorrelation check_high_local_correlation(const EmbeddingSet& U,
                                                  const EmbeddingSet& label_vectors,
                                                  const Csp2Instance& inst) {
  double eta = ug_edge_energy(label_vectors, inst);
  double acc = 0, total = 0;
  for (const auto& c : inst.constraints()) {
    double e = U.norm2(c.i) + U.norm2(c.j) - 2 * U.gram(c.i, c.j);
    acc += c.w * e;
    total += c.w;
  }
  double lhs = acc / total;
  return {lhs, eta, lhs <= 3 * eta + 1e-6};
}

LocalToGlobal local_to_global_check(const EmbeddingSet& U, double lambda_m_laplacian, int m,
                                    double eta) {
  LocalToGlobal out;
  const int n = U.size();
  double mean_norm2 = 0;
  for (int i = 0; i < n; ++i) mean_norm2 += U.norm2(i);
  mean_norm2 /= n;
  out.mean_norm2 = mean_norm2;
  out.threshold = lambda_m_laplacian > 0 ? 4 * eta / lambda_m_laplacian
                                         : std::numeric_limits<double>::infinity();
  out.hypothesis_met = mean_norm2 >= out.threshold;
  double global = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) global += U.gram(i, j);
  global /= static_cast<double>(n) * n;
  out.global_correlation = global;
  out.required = 1.0 / m;
  out.pass = !out.hypothesis_met || global >= out.required - 1e-7;
  return out;
}

}  // namespace lasround
