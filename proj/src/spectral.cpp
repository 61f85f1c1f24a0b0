#include "lasround/spectral.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace lasround {

Eigen::MatrixXd normalized_adjacency(const ConstraintGraph& graph) {
  ConstraintGraph g = graph;
  g.validate();
  auto deg = g.weighted_degrees();
  for (int i = 0; i < g.n; ++i)
    if (deg[i] <= 0) throw input_error("normalized_adjacency: zero-degree vertex");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.n, g.n);
  for (const auto& e : g.edges) {
    A(e.i, e.j) += e.w;
    A(e.j, e.i) += e.w;
  }
  double d = deg[0];
  return A / d;
}

SpectralProfile spectral_profile(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  if (n > 2000) throw cap_exceeded("spectral_profile: n > 2000 not supported");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral_profile: eigensolver failed");
  SpectralProfile prof;
  prof.eigenvalues = es.eigenvalues().reverse();
  prof.eigenvectors = es.eigenvectors().rowwise().reverse();
  if (prof.eigenvalues.maxCoeff() > 1.0 + 1e-8 || prof.eigenvalues.minCoeff() < -1.0 - 1e-8)
    throw check_failure("spectral_profile: eigenvalue outside [-1, 1]");
  Eigen::MatrixXd recon = prof.eigenvectors * prof.eigenvalues.asDiagonal() *
                          prof.eigenvectors.transpose();
  if ((A - recon).norm() > 1e-7 * n)
    throw check_failure("spectral_profile: reconstruction residual too large");
  return prof;
}

SpectralProfile spectral_profile(const ConstraintGraph& graph) {
  SpectralProfile p = spectral_profile(normalized_adjacency(graph));
  // rows sum to one, so the top eigenvalue of a regular graph is 1
  if (p.eigenvalues[0] < 1.0 - 1e-9)
    throw check_failure("spectral_profile: top eigenvalue below 1 for a regular graph");
  return p;
}

int threshold_rank(const SpectralProfile& profile, double tau) {
  int count = 0;
  for (Eigen::Index i = 0; i < profile.eigenvalues.size(); ++i)
    if (profile.eigenvalues[i] > tau - 1e-12) ++count;
  return count;
}

EmbeddingSet locally_correlated_vectors(const SpectralProfile& profile, int m) {
  const int n = static_cast<int>(profile.eigenvalues.size());
  if (m < 1 || m > n) throw input_error("locally_correlated_vectors: m out of range");
  // eigenfunctions rescaled so E_i f_i^2 = 1; coordinates divided by sqrt(m)
  Eigen::MatrixXd rows(n, m);
  for (int r = 0; r < m; ++r)
    rows.col(r) = profile.eigenvectors.col(r) * std::sqrt(static_cast<double>(n) / m);

  // the three converse-lemma quantities, verified on construction
  double mean_norm2 = rows.rowwise().squaredNorm().mean();
  double global_sq = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double d = rows.row(i).dot(rows.row(j));
      global_sq += d * d;
    }
  global_sq /= static_cast<double>(n) * n;
  if (std::abs(mean_norm2 - 1.0) > 1e-7)
    throw check_failure("locally_correlated_vectors: mean squared norm != 1");
  if (std::abs(global_sq - 1.0 / m) > 1e-7)
    throw check_failure("locally_correlated_vectors: global correlation != 1/m");
  return EmbeddingSet::explicit_rows(std::move(rows));
}

namespace {

double edge_correlation(const EmbeddingSet& vectors, const ConstraintGraph& graph) {
  double acc = 0, total = 0;
  for (const auto& e : graph.edges) {
    acc += e.w * vectors.gram(e.i, e.j);
    total += e.w;
  }
  return acc / total;
}

}  // namespace

RankWitness verify_rank_witness(const EmbeddingSet& vectors, const ConstraintGraph& graph,
                                double eps, int m, double C) {
  if (C <= 1.0) throw input_error("verify_rank_witness: C must exceed 1");
  const int n = vectors.size();
  RankWitness w;
  w.local_correlation = edge_correlation(vectors, graph);
  double global_sq = 0, norm2 = 0;
  for (int i = 0; i < n; ++i) {
    norm2 += vectors.norm2(i);
    for (int j = 0; j < n; ++j) {
      double d = vectors.gram(i, j);
      global_sq += d * d;
    }
  }
  w.global_correlation_sq = global_sq / (static_cast<double>(n) * n);
  w.mean_norm2 = norm2 / n;
  w.hypothesis_local = w.local_correlation >= 1.0 - eps - 1e-7;
  w.hypothesis_global = w.global_correlation_sq <= 1.0 / m + 1e-7;
  w.hypothesis_norm = std::abs(w.mean_norm2 - 1.0) <= 1e-7;

  SpectralProfile prof = spectral_profile(graph);
  w.checked_index = static_cast<int>(std::ceil((1.0 - 1.0 / C) * m - 1e-12));
  if (w.checked_index < 1) w.checked_index = 1;
  w.lambda_at_index = prof.eigenvalues[w.checked_index - 1];
  w.required = 1.0 - C * eps;
  w.conclusion = w.lambda_at_index >= w.required - 1e-9;
  w.pass = w.hypothesis_local && w.hypothesis_global && w.hypothesis_norm && w.conclusion;
  return w;
}

}  // namespace lasround
