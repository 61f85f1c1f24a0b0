#include "lasround/csp.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace lasround {

double ConstraintGraph::total_weight() const {
  double t = 0;
  for (const auto& e : edges) t += e.w;
  return t;
}

std::vector<double> ConstraintGraph::weighted_degrees() const {
  std::vector<double> deg(n, 0.0);
  for (const auto& e : edges) {
    deg[e.i] += e.w;
    deg[e.j] += e.w;
  }
  return deg;
}

void ConstraintGraph::validate() {
  if (n <= 0) throw input_error("graph: vertex count must be positive");
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      throw input_error("graph: edge endpoint out of range");
    if (e.i == e.j) throw input_error("graph: self-loops are not supported");
    if (e.i > e.j) throw input_error("graph: edges must be stored with i < j");
    if (!(e.w >= 0)) throw input_error("graph: negative or NaN edge weight");
  }
  if (total_weight() <= 0) throw input_error("graph: total weight must be positive");
  auto deg = weighted_degrees();
  double dmax = *std::max_element(deg.begin(), deg.end());
  double dmin = *std::min_element(deg.begin(), deg.end());
  if (dmax - dmin > 1e-9 * std::max(1.0, dmax))
    throw input_error("graph: weighted degrees differ (non-regular); rejected");
  normalized = true;
}

Relation::Relation(int k, std::vector<uint8_t> table) : k_(k), table_(std::move(table)) {
  if (k_ <= 0 || table_.size() != static_cast<std::size_t>(k_) * k_)
    throw input_error("relation: table must be exactly k x k");
}

Relation Relation::from_bijection(const std::vector<int>& pi) {
  int k = static_cast<int>(pi.size());
  std::vector<uint8_t> seen(k, 0), table(static_cast<std::size_t>(k) * k, 0);
  for (int a = 0; a < k; ++a) {
    if (pi[a] < 0 || pi[a] >= k || seen[pi[a]]) throw input_error("relation: not a bijection");
    seen[pi[a]] = 1;
    table[static_cast<std::size_t>(a) * k + pi[a]] = 1;
  }
  return Relation(k, std::move(table));
}

Relation Relation::inequality(int k) {
  std::vector<uint8_t> table(static_cast<std::size_t>(k) * k, 1);
  for (int a = 0; a < k; ++a) table[static_cast<std::size_t>(a) * k + a] = 0;
  return Relation(k, std::move(table));
}

Relation Relation::full(int k) {
  return Relation(k, std::vector<uint8_t>(static_cast<std::size_t>(k) * k, 1));
}

std::optional<std::vector<int>> Relation::as_bijection() const {
  std::vector<int> pi(k_, -1), colcount(k_, 0);
  for (int a = 0; a < k_; ++a) {
    int rowcount = 0;
    for (int b = 0; b < k_; ++b) {
      if (contains(a, b)) {
        ++rowcount;
        ++colcount[b];
        pi[a] = b;
      }
    }
    if (rowcount != 1) return std::nullopt;
  }
  for (int b = 0; b < k_; ++b)
    if (colcount[b] != 1) return std::nullopt;
  return pi;
}

namespace {

ConstraintGraph derive_graph(int n, const std::vector<CspConstraint>& cs) {
  std::map<std::pair<int, int>, double> acc;
  for (const auto& c : cs) acc[{c.i, c.j}] += c.w;
  ConstraintGraph g;
  g.n = n;
  for (const auto& [pair, w] : acc) g.edges.push_back({pair.first, pair.second, w});
  return g;
}

}  // namespace

Csp2Instance::Csp2Instance(int n, int k, std::vector<CspConstraint> constraints, bool unique_games,
                           bool auto_regularize)
    : n_(n), k_(k), constraints_(std::move(constraints)), unique_games_(unique_games) {
  if (n_ <= 0 || k_ <= 0) throw input_error("instance: n and k must be positive");
  if (constraints_.empty()) throw input_error("instance: no constraints");
  for (auto& c : constraints_) {
    if (c.i < 0 || c.j < 0 || c.i >= n_ || c.j >= n_ || c.i == c.j)
      throw input_error("instance: constraint endpoints out of range");
    if (c.i > c.j) throw input_error("instance: constraints must be stored with i < j");
    if (c.rel.k() != k_) throw input_error("instance: relation alphabet mismatch");
    if (!(c.w >= 0)) throw input_error("instance: negative constraint weight");
    if (unique_games_ && !c.rel.is_bijection())
      throw input_error("instance: unique-games flag requires bijection relations");
  }
  graph_ = derive_graph(n_, constraints_);
  if (auto_regularize) {
    // pad under-weighted vertex pairs with always-satisfied constraints until
    // degrees match; padding never uses self-loops
    auto deg = graph_.weighted_degrees();
    double dmax = *std::max_element(deg.begin(), deg.end());
    for (int i = 0; i < n_; ++i) {
      while (dmax - deg[i] > 1e-12 * std::max(1.0, dmax)) {
        int j = static_cast<int>(std::min_element(deg.begin(), deg.end()) - deg.begin());
        if (j == i) {
          // pick the second-smallest
          double best = std::numeric_limits<double>::infinity();
          for (int t = 0; t < n_; ++t)
            if (t != i && deg[t] < best) {
              best = deg[t];
              j = t;
            }
        }
        double add = std::min(dmax - deg[i], dmax - deg[j]);
        if (add <= 0) add = dmax - deg[i];
        int a = std::min(i, j), b = std::max(i, j);
        constraints_.push_back({a, b, Relation::full(k_), add});
        deg[i] += add;
        deg[j] += add;
      }
    }
    graph_ = derive_graph(n_, constraints_);
  }
  graph_.validate();
}

double Csp2Instance::value(const Assignment& x) const {
  if (static_cast<int>(x.labels.size()) != n_) throw input_error("value: assignment length mismatch");
  for (int v : x.labels)
    if (v < 0 || v >= k_) throw input_error("value: label out of range");
  double sat = 0, total = 0;
  for (const auto& c : constraints_) {
    total += c.w;
    if (c.rel.contains(x.labels[c.i], x.labels[c.j])) sat += c.w;
  }
  return sat / total;
}

Csp2Instance max_cut_instance(const ConstraintGraph& graph) {
  ConstraintGraph g = graph;
  g.validate();
  std::vector<CspConstraint> cs;
  for (const auto& e : g.edges) cs.push_back({e.i, e.j, Relation::inequality(2), e.w});
  return Csp2Instance(g.n, 2, std::move(cs), /*unique_games=*/true);
}

Csp2Instance unique_games_instance(const ConstraintGraph& graph,
                                   const std::vector<std::vector<int>>& permutations) {
  ConstraintGraph g = graph;
  g.validate();
  if (permutations.size() != g.edges.size())
    throw input_error("unique_games_instance: one bijection per edge required");
  int k = permutations.empty() ? 0 : static_cast<int>(permutations.front().size());
  std::vector<CspConstraint> cs;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (static_cast<int>(permutations[e].size()) != k)
      throw input_error("unique_games_instance: inconsistent alphabet size");
    cs.push_back({g.edges[e].i, g.edges[e].j, Relation::from_bijection(permutations[e]),
                  g.edges[e].w});
  }
  return Csp2Instance(g.n, k, std::move(cs), /*unique_games=*/true);
}

bool is_unique_games(const Csp2Instance& inst) {
  for (const auto& c : inst.constraints())
    if (!c.rel.is_bijection()) return false;
  return true;
}

nlohmann::json Csp2Instance::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["k"] = k_;
  j["unique_games"] = unique_games_;
  j["constraints"] = nlohmann::json::array();
  for (const auto& c : constraints_) {
    nlohmann::json jc;
    jc["i"] = c.i;
    jc["j"] = c.j;
    jc["w"] = c.w;
    if (auto pi = c.rel.as_bijection()) {
      jc["pi"] = *pi;
    } else {
      std::vector<std::vector<bool>> table(k_, std::vector<bool>(k_));
      for (int a = 0; a < k_; ++a)
        for (int b = 0; b < k_; ++b) table[a][b] = c.rel.contains(a, b);
      jc["table"] = table;
    }
    j["constraints"].push_back(std::move(jc));
  }
  return j;
}

Csp2Instance Csp2Instance::from_json(const nlohmann::json& j) {
  int n = j.at("n").get<int>();
  int k = j.at("k").get<int>();
  bool ug = j.value("unique_games", false);
  std::vector<CspConstraint> cs;
  for (const auto& jc : j.at("constraints")) {
    CspConstraint c;
    c.i = jc.at("i").get<int>();
    c.j = jc.at("j").get<int>();
    c.w = jc.at("w").get<double>();
    if (jc.contains("pi")) {
      c.rel = Relation::from_bijection(jc.at("pi").get<std::vector<int>>());
    } else {
      auto table = jc.at("table").get<std::vector<std::vector<bool>>>();
      if (static_cast<int>(table.size()) != k) throw input_error("instance json: bad table");
      std::vector<uint8_t> flat;
      for (const auto& row : table) {
        if (static_cast<int>(row.size()) != k) throw input_error("instance json: bad table row");
        for (bool v : row) flat.push_back(v ? 1 : 0);
      }
      c.rel = Relation(k, std::move(flat));
    }
    cs.push_back(std::move(c));
  }
  return Csp2Instance(n, k, std::move(cs), ug);
}

}  // namespace lasround
