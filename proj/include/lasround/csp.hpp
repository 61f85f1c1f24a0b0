#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lasround/common.hpp"

#include <json.hpp>

namespace lasround {

/// Undirected weighted graph with equal weighted degrees. Each unordered pair
/// is stored once as (i, j) with i < j.
struct ConstraintGraph {
  int n = 0;
  struct Edge {
    int i, j;
    double w;
  };
  std::vector<Edge> edges;
  bool normalized = false;  // set once regularity has been verified

  double total_weight() const;
  std::vector<double> weighted_degrees() const;

  /// Validates shape, nonnegativity and regularity (relative tolerance 1e-9).
  /// Throws input_error on violation; sets `normalized` on success.
  void validate();
};

/// Binary relation Π ⊆ [k]×[k], stored as a dense k×k membership table.
class Relation {
 public:
  Relation() = default;
  Relation(int k, std::vector<uint8_t> table);

  static Relation from_bijection(const std::vector<int>& pi);
  static Relation inequality(int k);  // Max-Cut predicate: a != b
  static Relation full(int k);        // always satisfied

  int k() const { return k_; }
  bool contains(int a, int b) const { return table_[static_cast<std::size_t>(a) * k_ + b] != 0; }

  /// The permutation pi with table = graph(pi), if the relation is a bijection.
  std::optional<std::vector<int>> as_bijection() const;
  bool is_bijection() const { return as_bijection().has_value(); }

  bool operator==(const Relation& o) const { return k_ == o.k_ && table_ == o.table_; }

 private:
  int k_ = 0;
  std::vector<uint8_t> table_;  // row-major, table_[a*k+b] = [(a,b) ∈ Π]
};

/// Assignment of one label in [k] to every vertex.
struct Assignment {
  std::vector<int> labels;
};

struct CspConstraint {
  int i, j;  // i < j; stored relation maps the label of i to admissible labels of j
  Relation rel;
  double w;
};

/// Weighted 2-CSP instance over alphabet [k]. Immutable after construction.
class Csp2Instance {
 public:
  Csp2Instance(int n, int k, std::vector<CspConstraint> constraints, bool unique_games = false,
               bool auto_regularize = false);

  int n() const { return n_; }
  int k() const { return k_; }
  bool unique_games() const { return unique_games_; }
  const std::vector<CspConstraint>& constraints() const { return constraints_; }
  const ConstraintGraph& graph() const { return graph_; }

  /// Weighted fraction of satisfied constraints, in [0,1].
  double value(const Assignment& x) const;

  nlohmann::json to_json() const;
  static Csp2Instance from_json(const nlohmann::json& j);

 private:
  int n_, k_;
  std::vector<CspConstraint> constraints_;
  ConstraintGraph graph_;
  bool unique_games_;
};

Csp2Instance max_cut_instance(const ConstraintGraph& graph);

/// One bijection per edge of the graph, keyed by the canonical (i<j) pair. The
/// stored map sends the label of the lower-indexed endpoint to the label of
/// the higher-indexed one.
Csp2Instance unique_games_instance(const ConstraintGraph& graph,
                                   const std::vector<std::vector<int>>& permutations);

/// True iff every relation table is the graph of a bijection.
bool is_unique_games(const Csp2Instance& inst);

inline const ConstraintGraph& constraint_graph(const Csp2Instance& inst) { return inst.graph(); }

}  // namespace lasround
