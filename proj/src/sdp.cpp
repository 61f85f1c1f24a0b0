#include "lasround/sdp.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

namespace lasround {

namespace {

void enumerate_subsets(int n, int max_size, std::vector<Subset>& out) {
  out.push_back({});
  Subset cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) >= max_size) return;
    for (int v = start; v < n; ++v) {
      cur.push_back(v);
      out.push_back(cur);
      rec(v + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

void sort_subsets(std::vector<Subset>& subsets) {
  std::sort(subsets.begin(), subsets.end(), [](const Subset& a, const Subset& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  subsets.erase(std::unique(subsets.begin(), subsets.end()), subsets.end());
}

/// merge (S, alpha) with (T, beta); false on conflicting shared labels
bool merge_entries(const BasisEntry& x, const BasisEntry& y, Subset& verts, Labels& labels) {
  verts.clear();
  labels.clear();
  std::size_t p = 0, q = 0;
  while (p < x.verts.size() || q < y.verts.size()) {
    if (q >= y.verts.size() || (p < x.verts.size() && x.verts[p] < y.verts[q])) {
      verts.push_back(x.verts[p]);
      labels.push_back(x.labels[p]);
      ++p;
    } else if (p >= x.verts.size() || y.verts[q] < x.verts[p]) {
      verts.push_back(y.verts[q]);
      labels.push_back(y.labels[q]);
      ++q;
    } else {
      if (x.labels[p] != y.labels[q]) return false;
      verts.push_back(x.verts[p]);
      labels.push_back(x.labels[p]);
      ++p;
      ++q;
    }
  }
  return true;
}

}  // namespace

std::size_t MomentBasis::size_of(int n, int k, int depth) {
  std::size_t total = 0;
  std::vector<Subset> subsets;
  enumerate_subsets(n, depth, subsets);
  for (const auto& s : subsets) total += pow_size(k, s.size());
  return total;
}

MomentBasis MomentBasis::build(int n, int k, int depth, std::size_t cap) {
  if (depth < 1) throw input_error("moment basis: depth must be >= 1");
  std::size_t size = size_of(n, k, depth);
  if (size > cap)
    throw cap_exceeded("moment basis: size " + std::to_string(size) + " exceeds cap " +
                       std::to_string(cap));
  MomentBasis basis;
  basis.n = n;
  basis.k = k;
  basis.depth = depth;
  std::vector<Subset> subsets;
  enumerate_subsets(n, depth, subsets);
  sort_subsets(subsets);
  for (const auto& s : subsets) {
    std::size_t tab = pow_size(k, s.size());
    for (std::size_t idx = 0; idx < tab; ++idx)
      basis.entries.push_back({s, index_to_labels(idx, k, s.size())});
  }
  return basis;
}

std::size_t MomentMatrix::longest_subset() const {
  std::size_t longest = 0;
  for (const auto& [sub, tab] : *tables) longest = std::max(longest, sub.size());
  return longest;
}

int RelaxationProblem::rounds() const {
  if (hierarchy_ == Hierarchy::lasserre) return 2 * depth_ - 2;
  std::size_t longest = 0;
  for (const auto& s : subsets_) longest = std::max(longest, s.size());
  return static_cast<int>(longest) - 2;
}

std::ptrdiff_t RelaxationProblem::var_of(const Subset& verts, const Labels& labels) const {
  auto it = subset_index_.find(verts);
  if (it == subset_index_.end()) return -1;
  return static_cast<std::ptrdiff_t>(offsets_[it->second] + labels_to_index(labels, basis_.k));
}

double RelaxationProblem::objective(const Eigen::VectorXd& p) const { return c_.dot(p); }

double RelaxationProblem::consistency_residual(const Eigen::VectorXd& p) const {
  return (A_ * p - b_).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd RelaxationProblem::assemble(const Eigen::VectorXd& p) const {
  const int N = static_cast<int>(basis_.entries.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  for (const auto& cell : cells_) {
    double v = cell.var >= 0 ? p[cell.var] : 0.0;
    M(cell.row, cell.col) = v;
    M(cell.col, cell.row) = v;
  }
  return M;
}

Eigen::VectorXd RelaxationProblem::variables_from_distribution(
    const ExplicitDistribution& dist) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(var_count_));
  const int k = basis_.k;
  for (std::size_t si = 0; si < subsets_.size(); ++si) {
    const Subset& U = subsets_[si];
    Eigen::VectorXd table = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pow_size(k, U.size())));
    for (const auto& [idx, w] : dist.support) {
      Labels sub(U.size());
      for (std::size_t q = 0; q < U.size(); ++q) {
        std::size_t div = pow_size(k, static_cast<std::size_t>(dist.n - 1 - U[q]));
        sub[q] = static_cast<int>((idx / div) % static_cast<std::size_t>(k));
      }
      table[static_cast<Eigen::Index>(labels_to_index(sub, k))] += w;
    }
    p.segment(static_cast<Eigen::Index>(offsets_[si]), table.size()) = table;
  }
  return p;
}

SubsetTables RelaxationProblem::tables_from_variables(const Eigen::VectorXd& p) const {
  SubsetTables tables;
  const int k = basis_.k;
  for (std::size_t si = 0; si < subsets_.size(); ++si) {
    const Subset& U = subsets_[si];
    Eigen::Index len = static_cast<Eigen::Index>(pow_size(k, U.size()));
    tables[U] = p.segment(static_cast<Eigen::Index>(offsets_[si]), len);
  }
  return tables;
}

RelaxationProblem build_relaxation(const Csp2Instance& inst, int depth,
                                   const RelaxationOptions& opts) {
  if (depth < 1) throw input_error("build_relaxation: depth must be >= 1");
  RelaxationProblem prob;
  prob.instance_ = std::make_shared<Csp2Instance>(inst);
  prob.depth_ = depth;
  prob.hierarchy_ = opts.hierarchy;
  const int n = inst.n(), k = inst.k();

  int table_size_limit;
  if (opts.hierarchy == Hierarchy::lasserre) {
    prob.basis_ = MomentBasis::build(n, k, depth, opts.basis_cap);
    table_size_limit = 2 * depth;
    enumerate_subsets(n, std::min(table_size_limit, n), prob.subsets_);
    sort_subsets(prob.subsets_);
  } else {
    prob.basis_ = MomentBasis::build(n, k, 1, opts.basis_cap);
    table_size_limit = std::max(2, opts.weak_rounds);
    if (opts.sampled_subsets) {
      // all subsets of size <= 2 plus the downward closure of sampled
      // seed-plus-pair sets
      enumerate_subsets(n, std::min(2, n), prob.subsets_);
      SeedStream stream(opts.sample_seed);
      auto rng = stream.engine(0);
      std::set<Subset> extra;
      int seed_size = std::max(1, table_size_limit - 2);
      for (int s = 0; s < opts.sample_count; ++s) {
        Subset seed;
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int q = 0; q < seed_size; ++q) seed.push_back(pick(rng));
        seed = canon_subset(seed);
        prob.sampled_seeds_.push_back(seed);
        for (int i = 0; i < n; ++i) {
          for (int j = i; j < n; ++j) {
            Subset closure = subset_union(seed, canon_subset({i, j}));
            // downward closure keeps every marginalization chain inside the family
            std::vector<Subset> below;
            enumerate_subsets(static_cast<int>(closure.size()),
                              static_cast<int>(closure.size()), below);
            for (const auto& mask : below) {
              Subset sub;
              for (int pos : mask) sub.push_back(closure[pos]);
              extra.insert(sub);
            }
          }
        }
      }
      for (const auto& s : extra) prob.subsets_.push_back(s);
      sort_subsets(prob.subsets_);
    } else {
      enumerate_subsets(n, std::min(table_size_limit, n), prob.subsets_);
      sort_subsets(prob.subsets_);
    }
  }

  // variable layout
  prob.offsets_.resize(prob.subsets_.size());
  std::size_t off = 0;
  for (std::size_t si = 0; si < prob.subsets_.size(); ++si) {
    prob.subset_index_[prob.subsets_[si]] = static_cast<int>(si);
    prob.offsets_[si] = off;
    off += pow_size(k, prob.subsets_[si].size());
  }
  prob.var_count_ = off;

  // entry function on the upper triangle
  const int N = static_cast<int>(prob.basis_.entries.size());
  prob.psd_block_ = N;
  prob.cell_weight_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.var_count_));
  Subset mv;
  Labels ml;
  for (int r = 0; r < N; ++r) {
    for (int c = r; c < N; ++c) {
      std::ptrdiff_t var = -1;
      if (merge_entries(prob.basis_.entries[r], prob.basis_.entries[c], mv, ml)) {
        var = prob.var_of(mv, ml);
        if (var < 0)
          throw check_failure("build_relaxation: merged subset not stored: {" + subset_key(mv) +
                              "}");
      }
      prob.cells_.push_back({r, c, var});
      if (var >= 0) prob.cell_weight_[var] += (r == c) ? 1.0 : 2.0;
    }
  }

  // marginalization constraints: one row per (stored U, i in U, assignment of U\{i})
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> rhs;
  int row = 0;
  for (std::size_t si = 0; si < prob.subsets_.size(); ++si) {
    const Subset& U = prob.subsets_[si];
    if (U.empty()) continue;
    for (std::size_t drop = 0; drop < U.size(); ++drop) {
      Subset Usub;
      for (std::size_t q = 0; q < U.size(); ++q)
        if (q != drop) Usub.push_back(U[q]);
      auto sub_it = prob.subset_index_.find(Usub);
      if (sub_it == prob.subset_index_.end()) continue;
      std::size_t sub_tab = pow_size(k, Usub.size());
      for (std::size_t idx = 0; idx < sub_tab; ++idx) {
        Labels beta = index_to_labels(idx, k, Usub.size());
        // sum_a p_U(beta with a at position drop) - p_{U\{i}}(beta) = 0
        for (int a = 0; a < k; ++a) {
          Labels full(U.size());
          for (std::size_t q = 0, t = 0; q < U.size(); ++q)
            full[q] = (q == drop) ? a : beta[t++];
          trips.emplace_back(row, static_cast<int>(prob.var_of(U, full)), 1.0);
        }
        trips.emplace_back(row, static_cast<int>(prob.var_of(Usub, beta)), -1.0);
        rhs.push_back(0.0);
        ++row;
      }
    }
  }
  // normalization p_emptyset = 1
  trips.emplace_back(row, static_cast<int>(prob.var_of({}, {})), 1.0);
  rhs.push_back(1.0);
  ++row;

  prob.A_.resize(row, static_cast<int>(prob.var_count_));
  prob.A_.setFromTriplets(trips.begin(), trips.end());
  prob.b_ = Eigen::Map<Eigen::VectorXd>(rhs.data(), row);

  // objective: E over constraint weight of Pr[(X_i, X_j) in Pi]
  prob.c_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.var_count_));
  double total_w = 0;
  for (const auto& con : inst.constraints()) total_w += con.w;
  for (const auto& con : inst.constraints()) {
    Subset pairset = {con.i, con.j};
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (con.rel.contains(a, b)) {
          std::ptrdiff_t var = prob.var_of(pairset, {a, b});
          if (var < 0) throw check_failure("build_relaxation: pair table missing");
          prob.c_[var] += con.w / total_w;
        }
  }
  return prob;
}

// ---------------------------------------------------------------------------
// ADMM solver

struct AdmmSolver {
  const RelaxationProblem& prob;
  const SolveOptions& opts;

  int N;                 // psd block size
  bool weak;             // nonnegativity cone on all variables
  Eigen::VectorXd W;     // quadratic weights per variable
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> kkt;
  Eigen::SparseMatrix<double> A, At;

  explicit AdmmSolver(const RelaxationProblem& p, const SolveOptions& o) : prob(p), opts(o) {
    N = static_cast<int>(prob.basis_.entries.size());
    weak = prob.hierarchy_ == Hierarchy::weak;
    W = prob.cell_weight_;
    if (weak) W.array() += 1.0;            // p = z2 coupling
    W = W.cwiseMax(1e-12);
    A = prob.A_;
    At = A.transpose();
    Eigen::SparseMatrix<double> Winv_At = At;
    for (int c = 0; c < Winv_At.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Winv_At, c); it; ++it)
        it.valueRef() /= W[it.row()];
    Eigen::SparseMatrix<double> K = A * Winv_At;
    // tiny ridge: marginalization rows are rank-deficient by one per diamond
    Eigen::SparseMatrix<double> I(K.rows(), K.cols());
    I.setIdentity();
    K = K + I * 1e-10;
    kkt.compute(K);
    if (kkt.info() != Eigen::Success) throw std::runtime_error("solve: KKT factorization failed");
  }

  /// minimize (rho/2)(p' W p - 2 p' t) - c' p  s.t. A p = b
  Eigen::VectorXd project_affine(const Eigen::VectorXd& t, double rho, bool with_objective) {
    Eigen::VectorXd target = t;
    if (with_objective) target += prob.c_ / rho;
    Eigen::VectorXd unconstrained = target.cwiseQuotient(W);
    Eigen::VectorXd nu = kkt.solve(A * unconstrained - prob.b_);
    return unconstrained - (At * nu).cwiseQuotient(W);
  }

  /// accumulate per-variable sums of matrix cells (adjoint of assemble)
  Eigen::VectorXd cell_sums(const Eigen::MatrixXd& G) const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.var_count_));
    for (const auto& cell : prob.cells_)
      if (cell.var >= 0) s[cell.var] += (cell.row == cell.col) ? G(cell.row, cell.col)
                                                               : 2.0 * G(cell.row, cell.col);
    return s;
  }

  static Eigen::MatrixXd psd_project(const Eigen::MatrixXd& V, double* min_eig = nullptr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
    if (min_eig) *min_eig = es.eigenvalues().minCoeff();
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  }

  std::pair<MomentMatrix, SolveReport> run() {
    auto t0 = std::chrono::steady_clock::now();
    double rho = opts.rho;

    // start from the product-uniform tables (a feasible true distribution)
    Eigen::VectorXd p(static_cast<Eigen::Index>(prob.var_count_));
    for (std::size_t si = 0; si < prob.subsets_.size(); ++si) {
      std::size_t len = pow_size(prob.basis_.k, prob.subsets_[si].size());
      double val = 1.0 / static_cast<double>(len);
      for (std::size_t q = 0; q < len; ++q) p[static_cast<Eigen::Index>(prob.offsets_[si] + q)] = val;
    }

    Eigen::MatrixXd Z = prob.assemble(p), U = Eigen::MatrixXd::Zero(N, N);
    Eigen::VectorXd z2 = p, u2 = Eigen::VectorXd::Zero(p.size());

    SolveReport rep;
    rep.depth = prob.depth_;
    rep.basis_size = prob.basis_.entries.size();

    double last_obj = prob.objective(p);
    int it = 0;
    bool polishing = false;
    int polish_iters = 0;
    for (; it < opts.max_iter; ++it) {
      // p-step: weighted projection onto the consistency subspace
      Eigen::VectorXd t = cell_sums(Z - U);
      if (weak) t += z2 - u2;
      p = project_affine(t, rho, /*with_objective=*/!polishing);

      Eigen::MatrixXd X = prob.assemble(p);
      Eigen::MatrixXd Zprev = Z;
      Z = psd_project(X + U);
      U += X - Z;
      double r_primal = (X - Z).norm();
      double r_dual = rho * (Z - Zprev).norm();
      if (weak) {
        Eigen::VectorXd z2prev = z2;
        z2 = (p + u2).cwiseMax(0.0);
        u2 += p - z2;
        r_primal = std::hypot(r_primal, (p - z2).norm());
        r_dual = std::hypot(r_dual, rho * (z2 - z2prev).norm());
      }

      if ((it + 1) % 25 == 0) {
        if (r_primal > 10 * r_dual && rho < 1e6) {
          rho *= 2;
          U *= 0.5;
          u2 *= 0.5;
        } else if (r_dual > 10 * r_primal && rho > 1e-6) {
          rho *= 0.5;
          U *= 2;
          u2 *= 2;
        }
      }

      if ((it + 1) % 20 == 0 || r_primal < opts.tol) {
        double obj = prob.objective(p);
        double scale = std::max(1.0, Z.norm());
        bool settled = it >= 100 && r_primal <= 0.2 * opts.tol * scale &&
                       r_dual <= 10 * opts.tol * scale &&
                       std::abs(obj - last_obj) <= opts.objective_tol;
        last_obj = obj;
        if (!polishing && settled) {
          polishing = true;  // freeze the objective, drive feasibility
        } else if (polishing) {
          ++polish_iters;
          double mineig;
          Eigen::MatrixXd Xc = prob.assemble(p);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Xc);
          mineig = es.eigenvalues().minCoeff();
          double neg = std::max(0.0, -mineig);
          bool entries_ok = !weak || p.minCoeff() >= -opts.tol;
          if (neg <= opts.tol && entries_ok) {
            rep.converged = true;
            ++it;
            break;
          }
          if (polish_iters > 400) break;
        }
      }
    }

    rep.iterations = it;
    Eigen::MatrixXd M = prob.assemble(p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    double psd_viol = std::max(0.0, -es.eigenvalues().minCoeff());
    if (weak) psd_viol = std::max(psd_viol, std::max(0.0, -p.minCoeff()));
    rep.psd_violation = psd_viol;
    rep.consistency_violation = (A * p - prob.b_).cwiseAbs().maxCoeff();
    rep.objective = prob.objective(p);
    rep.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();

    MomentMatrix mm;
    mm.basis = prob.basis_;
    mm.M = std::move(M);
    mm.psd_violation = rep.psd_violation;
    mm.consistency_violation = rep.consistency_violation;
    mm.objective = rep.objective;
    mm.n = prob.basis_.n;
    mm.k = prob.basis_.k;
    mm.depth = prob.depth_;
    mm.hierarchy = prob.hierarchy_;
    mm.tables = std::make_shared<SubsetTables>(prob.tables_from_variables(p));
    mm.sampled_seeds = prob.sampled_seeds_;
    return {std::move(mm), rep};
  }
};

std::pair<MomentMatrix, SolveReport> solve(const RelaxationProblem& problem,
                                           const SolveOptions& opts) {
  AdmmSolver solver(problem, opts);
  return solver.run();
}

nlohmann::json SolveReport::to_json() const {
  return nlohmann::json{{"objective", objective},
                        {"psd_violation", psd_violation},
                        {"consistency_violation", consistency_violation},
                        {"iterations", iterations},
                        {"wall_time_ms", wall_time_ms},
                        {"depth", depth},
                        {"basis_size", basis_size},
                        {"converged", converged}};
}

// ---------------------------------------------------------------------------

MomentMatrix exact_moment_matrix(const ExplicitDistribution& dist, const Csp2Instance& inst,
                                 int depth) {
  RelaxationOptions opts;
  opts.basis_cap = 200000;  // fixtures may exceed the solver cap
  RelaxationProblem prob = build_relaxation(inst, depth, opts);
  Eigen::VectorXd p = prob.variables_from_distribution(dist);
  MomentMatrix mm;
  mm.basis = prob.basis();
  mm.M = prob.assemble(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mm.M);
  mm.psd_violation = std::max(0.0, -es.eigenvalues().minCoeff());
  mm.consistency_violation = prob.consistency_residual(p);
  mm.objective = prob.objective(p);
  mm.n = dist.n;
  mm.k = dist.k;
  mm.depth = depth;
  mm.hierarchy = Hierarchy::lasserre;
  mm.tables = std::make_shared<SubsetTables>(prob.tables_from_variables(p));
  return mm;
}

LocalDistributionFamily extract_local_family(const MomentMatrix& M) {
  if (M.psd_violation > 1e-5 || M.consistency_violation > 1e-5)
    throw input_error("extract_local_family: residuals above 1e-5");
  auto tables = M.tables;
  const int k = M.k;
  int order = M.rounds();
  auto pop = [tables, k](const Subset& T, Eigen::VectorXd& out) {
    auto it = tables->find(T);
    if (it == tables->end()) return false;
    out = it->second;
    double negative = out.minCoeff();
    if (negative < -1e-5)
      throw input_error("extract_local_family: table entry below -1e-5");
    out = out.cwiseMax(0.0);
    double sum = out.sum();
    if (sum <= 0) throw input_error("extract_local_family: zero-mass table");
    out /= sum;
    return true;
  };
  return LocalDistributionFamily(M.n, k, order, Provenance::solver, pop);
}

EmbeddingSet extract_vectors(const MomentMatrix& M) {
  const int n = M.n, k = M.k;
  // basis entries for singletons are laid out immediately after (emptyset)
  std::vector<int> rows;
  for (std::size_t e = 0; e < M.basis.entries.size(); ++e)
    if (M.basis.entries[e].verts.size() == 1) rows.push_back(static_cast<int>(e));
  if (static_cast<int>(rows.size()) != n * k)
    throw check_failure("extract_vectors: singleton block incomplete");
  Eigen::MatrixXd block(n * k, n * k);
  for (int r = 0; r < n * k; ++r)
    for (int c = 0; c < n * k; ++c) block(r, c) = M.M(rows[r], rows[c]);
  double tol = std::max(1e-6, 10 * M.psd_violation);
  EmbeddingSet vecs = gram_factorize(block, tol, EmbeddingSet::IndexSpace::vertex_label, k);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        if (std::abs(vecs.gram(vecs.id(i, a), vecs.id(i, b))) > 1e-6)
          throw check_failure("extract_vectors: per-vertex orthogonality above 1e-6");
  return vecs;
}

// ---------------------------------------------------------------------------
// Appendix-A distribution fitting

namespace {

Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
  // Euclidean projection onto the probability simplex
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0, tau = 0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0) {
      rho = static_cast<int>(i + 1);
      tau = t;
    }
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::max(0.0, v[i] - tau);
  return v;
}

struct MomentConstraint {
  int i, a, j, b;  // j < 0: singleton moment
  double target;
  std::vector<std::size_t> cells;  // indices of q with the moment's indicator = 1
};

}  // namespace

FitResult fit_local_distributions(const EmbeddingSet& vecs, const std::vector<Subset>& sets,
                                  const FitOptions& opts) {
  const int k = vecs.label_count();
  if (vecs.space() != EmbeddingSet::IndexSpace::vertex_label)
    throw input_error("fit_local_distributions: expected vertex-label vectors");
  int n = vecs.size() / k;

  std::map<Subset, Eigen::VectorXd> fitted;
  double global_dev = 0;
  FitViolation worst;

  for (const Subset& Traw : sets) {
    Subset T = canon_subset(Traw);
    std::size_t space = pow_size(k, T.size());
    std::vector<MomentConstraint> cons;
    for (std::size_t p = 0; p < T.size(); ++p) {
      for (int a = 0; a < k; ++a) {
        MomentConstraint mc{T[p], a, -1, -1, vecs.norm2(vecs.id(T[p], a)), {}};
        for (std::size_t idx = 0; idx < space; ++idx)
          if (index_to_labels(idx, k, T.size())[p] == a) mc.cells.push_back(idx);
        cons.push_back(std::move(mc));
      }
      for (std::size_t q = p + 1; q < T.size(); ++q) {
        for (int a = 0; a < k; ++a) {
          for (int b = 0; b < k; ++b) {
            MomentConstraint mc{T[p], a, T[q], b,
                                vecs.gram(vecs.id(T[p], a), vecs.id(T[q], b)), {}};
            for (std::size_t idx = 0; idx < space; ++idx) {
              Labels x = index_to_labels(idx, k, T.size());
              if (x[p] == a && x[q] == b) mc.cells.push_back(idx);
            }
            cons.push_back(std::move(mc));
          }
        }
      }
    }

    Eigen::VectorXd q = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(space),
                                                  1.0 / static_cast<double>(space));
    Eigen::VectorXd best_q = q;
    double best_dev = std::numeric_limits<double>::infinity();
    int best_ci = 0;
    for (int itn = 1; itn <= opts.iterations; ++itn) {
      double dev = 0;
      int ci = 0;
      double signed_dev = 0;
      for (std::size_t c = 0; c < cons.size(); ++c) {
        double implied = 0;
        for (std::size_t cell : cons[c].cells) implied += q[static_cast<Eigen::Index>(cell)];
        double d = implied - cons[c].target;
        if (std::abs(d) > dev) {
          dev = std::abs(d);
          signed_dev = d;
          ci = static_cast<int>(c);
        }
      }
      if (dev < best_dev) {
        best_dev = dev;
        best_q = q;
        best_ci = ci;
      }
      if (dev < 1e-10) break;
      // Polyak step with target 0 (a feasible point exists when the vectors
      // come from an actual family); the subgradient is the 0/1 cell mask
      double step = dev / static_cast<double>(cons[ci].cells.size());
      double g = signed_dev > 0 ? step : -step;
      for (std::size_t cell : cons[ci].cells) q[static_cast<Eigen::Index>(cell)] -= g;
      q = project_simplex(q);
    }
    fitted[T] = best_q;
    if (best_dev > global_dev) {
      global_dev = best_dev;
      const auto& mc = cons[best_ci];
      double implied = 0;
      for (std::size_t cell : mc.cells) implied += best_q[static_cast<Eigen::Index>(cell)];
      worst = {T, mc.i, mc.a, mc.j, mc.b, implied, mc.target};
    }
  }

  return FitResult{
      LocalDistributionFamily::from_tables(n, k, n, std::move(fitted), Provenance::fitted),
      global_dev, worst};
}

}  // namespace lasround
