#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lasround {

/// Thrown when caller-supplied data violates a precondition.
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a requested subset exceeds the conditioning budget (|T ∪ S| > order + 2).
struct budget_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when conditioning on an event of probability below the zero threshold.
struct zero_probability_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a marginal table is neither stored nor derivable.
struct unavailable_subset : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an enumeration or basis size exceeds its configured cap.
struct cap_exceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a numeric identity that must hold by construction fails.
struct check_failure : std::logic_error {
  using std::logic_error::logic_error;
};

using Subset = std::vector<int>;  // sorted, no duplicates
using Labels = std::vector<int>;  // one label per subset element, aligned

/// Sort + dedupe a vertex list into canonical subset form.
inline Subset canon_subset(Subset t) {
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

inline Subset subset_union(const Subset& a, const Subset& b) {
  Subset u;
  u.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  return u;
}

inline bool subset_contains(const Subset& big, const Subset& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

inline std::size_t pow_size(int k, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= static_cast<std::size_t>(k);
  return r;
}

/// Row-major odometer index of labels over a subset: first vertex is the most
/// significant digit. The same convention is used everywhere a table or a
/// global assignment is flattened.
inline std::size_t labels_to_index(const Labels& x, int k) {
  std::size_t idx = 0;
  for (int v : x) idx = idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(v);
  return idx;
}

inline Labels index_to_labels(std::size_t idx, int k, std::size_t len) {
  Labels x(len);
  for (std::size_t p = len; p-- > 0;) {
    x[p] = static_cast<int>(idx % static_cast<std::size_t>(k));
    idx /= static_cast<std::size_t>(k);
  }
  return x;
}

inline std::string subset_key(const Subset& t) {
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(t[i]);
  }
  return s;
}

/// Counter-based seed derivation so parallel runs draw from disjoint,
/// order-independent streams (splitmix64 over master ^ counter).
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t master) : master_(master) {}

  std::uint64_t derive(std::uint64_t counter) const {
    std::uint64_t z = master_ + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine(std::uint64_t counter) const { return std::mt19937_64(derive(counter)); }

 private:
  std::uint64_t master_;
};

/// Draw an index from a (sub)normalized probability vector by CDF walk.
inline int sample_index(const Eigen::VectorXd& p, std::mt19937_64& rng) {
  const double total = p.sum();
  if (total <= 0.0) throw zero_probability_error("sample_index: all-zero distribution");
  std::uniform_real_distribution<double> unif(0.0, total);
  double u = unif(rng);
  for (int i = 0; i < p.size(); ++i) {
    u -= p[i];
    if (u <= 0.0) return i;
  }
  for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i)
    if (p[i] > 0.0) return i;
  return static_cast<int>(p.size()) - 1;
}

}  // namespace lasround
