#pragma once

#include <map>
#include <memory>

#include "lasround/common.hpp"
#include "lasround/csp.hpp"
#include "lasround/embeddings.hpp"
#include "lasround/oracle.hpp"
#include "lasround/pseudodist.hpp"

#include <Eigen/Sparse>
#include <json.hpp>

namespace lasround {

/// One index of the moment matrix: a vertex subset with a local assignment.
struct BasisEntry {
  Subset verts;
  Labels labels;
};

/// Canonically ordered basis (by |S|, then lexicographic subset, then
/// assignment odometer); entry 0 is (emptyset, empty).
struct MomentBasis {
  int n = 0, k = 0, depth = 0;
  std::vector<BasisEntry> entries;

  static MomentBasis build(int n, int k, int depth, std::size_t cap);
  static std::size_t size_of(int n, int k, int depth);
};

enum class Hierarchy { lasserre, weak };

struct RelaxationOptions {
  Hierarchy hierarchy = Hierarchy::lasserre;
  std::size_t basis_cap = 5000;
  /// weak hierarchy: local distributions on subsets up to this size
  int weak_rounds = 3;
  /// weak hierarchy: restrict consistency constraints to sampled seed-closed
  /// subsets instead of all subsets up to weak_rounds
  bool sampled_subsets = false;
  int sample_count = 8;
  std::uint64_t sample_seed = 1;
};

/// Joint probability tables indexed by sorted subset.
using SubsetTables = std::map<Subset, Eigen::VectorXd>;

/// Hierarchy relaxation in entry-function form: the moment matrix is a linear
/// image of per-subset probability tables, tied by marginalization equalities.
class RelaxationProblem {
 public:
  const Csp2Instance& instance() const { return *instance_; }
  const MomentBasis& basis() const { return basis_; }
  int depth() const { return depth_; }
  Hierarchy hierarchy() const { return hierarchy_; }
  int rounds() const;  // conditioning budget of the extracted family
  const std::vector<Subset>& stored_subsets() const { return subsets_; }
  const std::vector<Subset>& sampled_seeds() const { return sampled_seeds_; }
  std::size_t variable_count() const { return var_count_; }

  /// Objective value of an explicit table assignment.
  double objective(const Eigen::VectorXd& p) const;
  /// Assemble the moment matrix from tables.
  Eigen::MatrixXd assemble(const Eigen::VectorXd& p) const;
  /// Tables of a true distribution flattened into the variable vector.
  Eigen::VectorXd variables_from_distribution(const ExplicitDistribution& dist) const;
  SubsetTables tables_from_variables(const Eigen::VectorXd& p) const;
  /// max |A p - b| over the marginalization/normalization constraints.
  double consistency_residual(const Eigen::VectorXd& p) const;

  friend RelaxationProblem build_relaxation(const Csp2Instance&, int, const RelaxationOptions&);
  friend struct AdmmSolver;

 private:
  std::shared_ptr<const Csp2Instance> instance_;
  MomentBasis basis_;
  int depth_ = 1;
  Hierarchy hierarchy_ = Hierarchy::lasserre;
  std::vector<Subset> subsets_;          // stored subsets, sorted by (size, lex)
  std::map<Subset, int> subset_index_;
  std::vector<std::size_t> offsets_;     // table offsets into the variable vector
  std::size_t var_count_ = 0;
  std::vector<Subset> sampled_seeds_;

  // entry function: for each upper-triangle cell, the variable it reads (-1 = structural zero)
  struct Cell {
    int row, col;
    std::ptrdiff_t var;
  };
  std::vector<Cell> cells_;
  Eigen::VectorXd cell_weight_;          // per variable: number of matrix cells mapped to it
  Eigen::SparseMatrix<double> A_;        // marginalization + normalization constraints
  Eigen::VectorXd b_;
  Eigen::VectorXd c_;                    // objective on pair variables
  int psd_block_ = 0;                    // leading block size under the PSD constraint

  std::ptrdiff_t var_of(const Subset& verts, const Labels& labels) const;
};

/// depth d stores subsets up to 2d (lasserre) so the extracted family has
/// order 2d-2; the weak hierarchy stores subsets up to weak_rounds with a
/// (1 + nk)-dimensional PSD block.
RelaxationProblem build_relaxation(const Csp2Instance& inst, int depth,
                                   const RelaxationOptions& opts = {});

struct SolveOptions {
  double tol = 1e-6;          // feasibility target (psd violation of the returned matrix)
  double objective_tol = 1e-5;
  int max_iter = 20000;
  double rho = 1.0;
  std::uint64_t seed = 0;     // reserved; the method is deterministic
  bool verbose = false;
};

struct SolveReport {
  double objective = 0;
  double psd_violation = 0;
  double consistency_violation = 0;
  int iterations = 0;
  double wall_time_ms = 0;
  int depth = 0;
  std::size_t basis_size = 0;
  bool converged = false;

  nlohmann::json to_json() const;
};

struct MomentMatrix {
  MomentBasis basis;
  Eigen::MatrixXd M;
  double psd_violation = 0;
  double consistency_violation = 0;
  double objective = 0;
  int n = 0, k = 0, depth = 1;
  Hierarchy hierarchy = Hierarchy::lasserre;
  std::shared_ptr<const SubsetTables> tables;
  std::vector<Subset> sampled_seeds;

  /// Conditioning budget of the family the matrix realizes.
  int rounds() const {
    return hierarchy == Hierarchy::lasserre ? 2 * depth - 2
                                            : static_cast<int>(longest_subset()) - 2;
  }
  std::size_t longest_subset() const;
};

/// First-order solve: ADMM between the consistency-affine subspace and the
/// PSD cone, followed by a feasibility polish with the objective switched off.
std::pair<MomentMatrix, SolveReport> solve(const RelaxationProblem& problem,
                                           const SolveOptions& opts = {});

/// Read local distributions off the moment tables (renormalized per subset).
LocalDistributionFamily extract_local_family(const MomentMatrix& M);

/// Label vectors v_{ia} from the singleton block; per-vertex orthogonality
/// asserted to 1e-6.
EmbeddingSet extract_vectors(const MomentMatrix& M);

/// Moment matrix of an explicit distribution: feasible at every level, exact
/// entries, objective equal to the distribution's expected value.
MomentMatrix exact_moment_matrix(const ExplicitDistribution& dist, const Csp2Instance& inst,
                                 int depth);

struct FitViolation {
  Subset subset;
  int i = -1, a = -1, j = -1, b = -1;  // j = -1 for singleton moments
  double implied = 0, target = 0;
};

struct FitResult {
  LocalDistributionFamily family;
  double max_deviation = 0;
  FitViolation worst;  // separation certificate when max_deviation > tolerance
};

struct FitOptions {
  int iterations = 4000;
  double step = 0.25;
};

/// Appendix-A style separation helper: per requested subset, fit a
/// distribution minimizing the worst absolute deviation between its implied
/// singleton/pair moments and the vector inner products (projected
/// subgradient on the probability simplex).
FitResult fit_local_distributions(const EmbeddingSet& label_vectors,
                                  const std::vector<Subset>& sets, const FitOptions& opts = {});

}  // namespace lasround
