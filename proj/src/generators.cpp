#include "lasround/generators.hpp"

#include <numeric>
#include <set>

namespace lasround {

ConstraintGraph cycle_graph(int n) {
  if (n < 3) throw input_error("cycle_graph: n >= 3 required");
  ConstraintGraph g;
  g.n = n;
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    g.edges.push_back({std::min(i, j), std::max(i, j), 1.0});
  }
  g.validate();
  return g;
}

ConstraintGraph complete_graph(int n) {
  if (n < 2) throw input_error("complete_graph: n >= 2 required");
  ConstraintGraph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j, 1.0});
  g.validate();
  return g;
}

ConstraintGraph hypercube_graph(int dim, double noise, std::mt19937_64& rng) {
  if (dim < 1 || dim > 20) throw input_error("hypercube_graph: dim out of range");
  int n = 1 << dim;
  ConstraintGraph g;
  g.n = n;
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  // one weight per direction keeps weighted degrees equal across vertices
  for (int d = 0; d < dim; ++d) {
    double w = 1.0 + noise * unif(rng);
    if (w <= 0) w = 1.0;
    for (int v = 0; v < n; ++v) {
      int u = v ^ (1 << d);
      if (v < u) g.edges.push_back({v, u, w});
    }
  }
  g.validate();
  return g;
}

ConstraintGraph random_regular_graph(int n, int d, std::mt19937_64& rng) {
  if (n * d % 2 != 0) throw input_error("random_regular_graph: n*d must be even");
  if (d < 1 || d >= n) throw input_error("random_regular_graph: degree out of range");
  for (int attempt = 0; attempt < 2000; ++attempt) {
    std::vector<int> stubs;
    for (int v = 0; v < n; ++v)
      for (int q = 0; q < d; ++q) stubs.push_back(v);
    std::shuffle(stubs.begin(), stubs.end(), rng);
    std::set<std::pair<int, int>> seen;
    bool ok = true;
    for (std::size_t p = 0; p + 1 < stubs.size() && ok; p += 2) {
      int a = stubs[p], b = stubs[p + 1];
      if (a == b) ok = false;
      auto key = std::minmax(a, b);
      if (!seen.insert({key.first, key.second}).second) ok = false;
    }
    if (!ok) continue;
    ConstraintGraph g;
    g.n = n;
    for (const auto& [a, b] : seen) g.edges.push_back({a, b, 1.0});
    g.validate();
    return g;
  }
  throw std::runtime_error("random_regular_graph: rejection sampling failed");
}

Csp2Instance disjoint_copies(const Csp2Instance& base, int t) {
  if (t < 1) throw input_error("disjoint_copies: t >= 1 required");
  std::vector<CspConstraint> cs;
  for (int copy = 0; copy < t; ++copy) {
    int off = copy * base.n();
    for (const auto& c : base.constraints())
      cs.push_back({c.i + off, c.j + off, c.rel, c.w});
  }
  return Csp2Instance(base.n() * t, base.k(), std::move(cs), is_unique_games(base));
}

Csp2Instance planted_ug_instance(const ConstraintGraph& graph, int k, double noise,
                                 std::mt19937_64& rng, Assignment* hidden) {
  ConstraintGraph g = graph;
  g.validate();
  std::uniform_int_distribution<int> pick_label(0, k - 1);
  Labels ell(static_cast<std::size_t>(g.n));
  for (auto& v : ell) v = pick_label(rng);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<int>> perms;
  std::vector<int> idmap(k);
  std::iota(idmap.begin(), idmap.end(), 0);
  for (const auto& e : g.edges) {
    std::vector<int> pi = idmap;
    std::shuffle(pi.begin(), pi.end(), rng);
    if (unif(rng) >= noise) {
      // swap values so the hidden labeling satisfies the edge: pi(ell_i) = ell_j
      int cur = pi[ell[e.i]];
      for (int a = 0; a < k; ++a)
        if (pi[a] == ell[e.j]) {
          pi[a] = cur;
          break;
        }
      pi[ell[e.i]] = ell[e.j];
    }
    perms.push_back(std::move(pi));
  }
  if (hidden) hidden->labels = ell;
  return unique_games_instance(g, perms);
}

}  // namespace lasround
