#pragma once

#include "lasround/common.hpp"
#include "lasround/csp.hpp"
#include "lasround/embeddings.hpp"

namespace lasround {

/// Eigendecomposition of a normalized adjacency matrix, eigenvalues sorted
/// non-increasing with eigenvector columns aligned.
struct SpectralProfile {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // orthonormal columns

  /// m-th smallest Laplacian eigenvalue = 1 - m-th largest adjacency eigenvalue.
  double laplacian_lambda(int m) const { return 1.0 - eigenvalues[m - 1]; }
};

/// Normalized adjacency A/d of a regular graph: symmetric, rows sum to 1.
Eigen::MatrixXd normalized_adjacency(const ConstraintGraph& graph);

/// Decompose; validates eigenvalue range, reconstruction residual and (for
/// connected graphs) the top eigenvalue. n capped at 2000.
SpectralProfile spectral_profile(const ConstraintGraph& graph);
SpectralProfile spectral_profile(const Eigen::MatrixXd& normalized_adjacency);

/// |{ i : lambda_i > tau }| with strictness resolved as "> tau - 1e-12".
int threshold_rank(const SpectralProfile& profile, double tau);

/// Vectors v_i in R^m with <v_i,v_j> = E_{r in [m]} f^(r)_i f^(r)_j built from
/// the top m eigenfunctions (normalized to E_i f_i^2 = 1). For lambda_m >= 1-eps
/// they attain local correlation >= 1-eps, global squared correlation exactly
/// 1/m and mean squared norm 1 (each checked to 1e-7).
EmbeddingSet locally_correlated_vectors(const SpectralProfile& profile, int m);

struct RankWitness {
  bool hypothesis_local;    // E_{ij~G} <v_i,v_j> >= 1 - eps
  bool hypothesis_global;   // E_{i,j in V} <v_i,v_j>^2 <= 1/m
  bool hypothesis_norm;     // E_i ||v_i||^2 = 1
  double local_correlation;
  double global_correlation_sq;
  double mean_norm2;
  int checked_index;        // ceil((1 - 1/C) m), 1-based
  double lambda_at_index;
  double required;          // 1 - C eps
  bool conclusion;          // lambda_{checked_index} >= required
  bool pass;                // hypotheses hold and conclusion holds
};

/// Checks the threshold-rank witness: vectors satisfying the three hypotheses
/// force lambda_{ceil((1-1/C) m)} >= 1 - C eps. Hypothesis failures are
/// reported separately from conclusion failures.
RankWitness verify_rank_witness(const EmbeddingSet& vectors, const ConstraintGraph& graph,
                                double eps, int m, double C);

}  // namespace lasround
