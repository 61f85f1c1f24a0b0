#pragma once

#include <functional>
#include <vector>

#include "lasround/common.hpp"
#include "lasround/csp.hpp"
#include "lasround/pseudodist.hpp"

namespace lasround {

/// Collection of vectors with Gram access, either materialized as rows or
/// given implicitly by a symmetric Gram evaluator (used for tensored vectors
/// whose explicit dimension would cube).
class EmbeddingSet {
 public:
  enum class IndexSpace { vertex, vertex_label };
  using GramFn = std::function<double(int, int)>;

  static EmbeddingSet explicit_rows(Eigen::MatrixXd rows,
                                    IndexSpace space = IndexSpace::vertex, int k = 1);
  static EmbeddingSet implicit(int count, GramFn gram, IndexSpace space = IndexSpace::vertex,
                               int k = 1);

  int size() const { return count_; }
  int dim() const { return is_implicit_ ? 0 : static_cast<int>(rows_.cols()); }
  bool is_implicit() const { return is_implicit_; }
  IndexSpace space() const { return space_; }
  int label_count() const { return k_; }

  double gram(int i, int j) const;
  double norm2(int i) const { return gram(i, i); }
  Eigen::VectorXd row(int i) const;
  const Eigen::MatrixXd& rows() const;

  /// Index of vector (vertex i, label a) when space() == vertex_label.
  int id(int i, int a) const { return i * k_ + a; }

 private:
  EmbeddingSet() = default;
  int count_ = 0;
  int k_ = 1;
  IndexSpace space_ = IndexSpace::vertex;
  bool is_implicit_ = false;
  Eigen::MatrixXd rows_;
  GramFn gram_;
};

/// Greedy selection output: picked vector indices (in order), an orthonormal
/// basis of their span (or of the annihilated space's complement witness),
/// and per-step diagnostics.
struct SeedSelection {
  std::vector<int> picked;
  Eigen::MatrixXd basis;               // columns orthonormal
  std::vector<double> step_statistic;  // residual statistic before each pick
  std::vector<double> step_decrease;   // measured drop of E_i ||v_i||^2 at each pick
  std::vector<double> residual_norms;  // final ||w_i||
  double final_statistic = 0;
  bool guarantee_met = false;
};

/// Factor a PSD matrix M into row vectors with <u_p, u_q> = M_pq (negative
/// eigenvalues clipped at zero). Throws if min eigenvalue < -tol.
EmbeddingSet gram_factorize(const Eigen::MatrixXd& psd, double tol = 1e-7,
                            EmbeddingSet::IndexSpace space = EmbeddingSet::IndexSpace::vertex,
                            int k = 1);

/// Norm floor below which a vector is treated as zero in all Gram sums.
inline constexpr double kNormFloor = 1e-12;

struct SandwichCheck {
  double lower, inner, upper;
  bool pass;
};

/// Per-vertex vectors v_i = k^{-1/2} sum_a u_ia^{x2} / ||u_ia|| computed via
/// the closed-form Gram <v_i,v_j> = (1/k) sum_{ab} <u_ia,u_jb>^2 / (||u_ia|| ||u_jb||).
/// Validates the two-sided bound against sum |Cov| and the variance-weighted
/// upper expression for every pair; throws check_failure on violation.
EmbeddingSet tensor_embedding_general(const EmbeddingSet& u, int n, int k);

/// The two-sided bound for one pair, computed independently of the embedding.
SandwichCheck general_tensoring_bounds(const EmbeddingSet& u, int n, int k, int i, int j);

/// Unique-games variant: v_i = sum_a ||u_ia|| ubar_ia^{x2} (x) vbar_ia^{x2},
/// requiring the per-vertex label vectors v_ia to be mutually orthogonal.
/// Gram is alphabet-independent; bounds checked per constraint bijection.
EmbeddingSet tensor_embedding_ug(const EmbeddingSet& u, const EmbeddingSet& v, int n, int k);

/// Lower/upper bound check of the UG tensoring for one pair and bijection.
SandwichCheck ug_tensoring_bounds(const EmbeddingSet& u, const EmbeddingSet& v, int n, int k,
                                  int i, int j, const std::vector<int>& pi);

/// Residual statistic E_{i,j} ||w_i|| ||w_j|| <wbar_i, wbar_j>^2.
double residual_statistic(const Eigen::MatrixXd& rows);

/// Greedy low-rank approximation: picks at most ceil(1/eps) directions from
/// the normalized residual vectors, each maximizing the guaranteed norm
/// decrease E_i <v_i, ubar>^2, until the residual statistic drops to eps.
SeedSelection greedy_basis(const EmbeddingSet& vectors, double eps);

/// Projector rule: maps the set of picked indices to the projector (as a
/// dense matrix) onto a subspace orthogonal to the span of the picked vectors.
using ProjectorRule = std::function<Eigen::MatrixXd(const std::vector<int>&)>;

/// Greedy selection with a custom projector applied after each pick. The rule
/// must annihilate the span of the selected vectors (checked to 1e-9).
SeedSelection greedy_basis_general(const EmbeddingSet& vectors, const ProjectorRule& rule,
                                   double eps);

struct SeedVectorResult {
  std::vector<int> seed_vertices;            // S, sorted
  SeedSelection selection;                   // underlying greedy run over (i,a) vectors
  std::vector<double> residual_variance;     // per vertex: sum_a ||P_S v_ia||^2
  double mean_residual_variance = 0;
};

/// Greedy over label vectors with the vertex-closure projector (picking a
/// label vector annihilates all k vectors of its vertex); at most ceil(1/eps)
/// picks.
SeedVectorResult greedy_vertex_seeds(const EmbeddingSet& label_vectors, int k, double eps);

/// Seed set of at most k^2 m vertices chosen so the projections of all label
/// vectors onto the orthogonal complement of the seed's span are small
/// (greedy_vertex_seeds at eps = 1/(k^2 m)).
SeedVectorResult seed_from_sdp_vectors(const EmbeddingSet& label_vectors, int m, int k);

struct VarianceBound {
  int vertex;
  double conditional_variance;   // Var[X_i | X_S]
  double projection_bound;       // sum_a ||P_S v_ia||^2
  std::vector<double> per_label_variance;  // Var[X_ia | X_S]
  std::vector<double> per_label_bound;     // ||P_S v_ia||^2
  bool pass;
};

/// Checks Var[X_ia | X_S] <= ||P_S v_ia||^2 and the per-vertex sum version
/// for every vertex, after verifying family/vector consistency to 1e-7.
std::vector<VarianceBound> variance_bound_from_projection(const LocalDistributionFamily& family,
                                                          const EmbeddingSet& label_vectors,
                                                          const Subset& S);

/// Vertex vectors U_i = sum_a ||u_ia|| ubar_ia^{x2} (x) vbar_ia with implicit
/// Gram <U_i,U_j> = sum_{ab} ||u_ia|| ||u_jb|| <ubar_ia,ubar_jb>^2 <vbar_ia,vbar_jb>.
EmbeddingSet vertex_vectors_U(const EmbeddingSet& u, const EmbeddingSet& v, int n, int k);

/// UG edge energy of a label-vector solution: E_{ij in E} sum_a ||v_ia - v_j pi(a)||^2.
double ug_edge_energy(const EmbeddingSet& label_vectors, const Csp2Instance& inst);

struct HighLocalCorrelation {
  double edge_energy_U;  // E_{ij in E} ||U_i - U_j||^2
  double eta;            // measured UG energy of the label vectors
  bool pass;             // edge_energy_U <= 3 eta + 1e-6
};
HighLocalCorrelation check_high_local_correlation(const EmbeddingSet& U,
                                                  const EmbeddingSet& label_vectors,
                                                  const Csp2Instance& inst);

struct LocalToGlobal {
  bool hypothesis_met;      // E_i ||U_i||^2 >= 4 eta / lambda_m
  double mean_norm2;
  double threshold;         // 4 eta / lambda_m
  double global_correlation;  // E_{i,j in V} <U_i, U_j>
  double required;            // 1/m
  bool pass;                  // only meaningful when hypothesis_met
};

/// Lambda here is the m-th smallest Laplacian eigenvalue (1 - m-th largest
/// adjacency eigenvalue); callers take it from a SpectralProfile.
LocalToGlobal local_to_global_check(const EmbeddingSet& U, double lambda_m_laplacian, int m,
                                    double eta);

}  // namespace lasround
