#pragma once

// Finite metric measure spaces: storage, axiom checks, canonical form and a
// seeded generator for test data.

#include "mmspace/rational.hpp"

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmspace {

class domain_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when an exact computation would exceed a configured size cap.
class size_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dense symmetric matrix in row-major order.
template <class Scalar>
class square_matrix {
public:
  square_matrix() = default;
  explicit square_matrix(std::size_t n, const Scalar& fill = Scalar(0)) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }
  Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const Scalar& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  friend bool operator==(const square_matrix& a, const square_matrix& b) {
    return a.n_ == b.n_ && a.data_ == b.data_;
  }

private:
  std::size_t n_ = 0;
  std::vector<Scalar> data_;
};

/// (X, d, mu) restricted to a finite support. Points are indexed 0..n-1;
/// labels are carried for reporting only.
template <class Scalar>
struct basic_mm_space {
  std::vector<std::string> labels;
  square_matrix<Scalar> dist;
  std::vector<Scalar> weights;

  std::size_t size() const { return weights.size(); }
  const Scalar& d(std::size_t i, std::size_t j) const { return dist(i, j); }

  friend bool operator==(const basic_mm_space& a, const basic_mm_space& b) {
    return a.labels == b.labels && a.dist == b.dist && a.weights == b.weights;
  }
};

using mm_space = basic_mm_space<Rational>;
using mm_space_f = basic_mm_space<double>;

inline std::vector<std::string> default_labels(std::size_t n, const std::string& prefix = "x") {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Builds a space from nested distance rows and weights. No validation.
template <class Scalar>
basic_mm_space<Scalar> make_space(const std::vector<std::vector<Scalar>>& rows, std::vector<Scalar> weights,
                                  std::vector<std::string> labels = {}) {
  basic_mm_space<Scalar> s;
  const std::size_t n = rows.size();
  s.dist = square_matrix<Scalar>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n && j < rows[i].size(); ++j) s.dist(i, j) = rows[i][j];
  s.weights = std::move(weights);
  s.labels = labels.empty() ? default_labels(n) : std::move(labels);
  return s;
}

/// The one-point probability space.
template <class Scalar = Rational>
basic_mm_space<Scalar> point_space() {
  return make_space<Scalar>({{Scalar(0)}}, {Scalar(1)});
}

/// n points at mutual distance `r` with uniform weights.
template <class Scalar = Rational>
basic_mm_space<Scalar> uniform_simplex(std::size_t n, const Scalar& r) {
  std::vector<std::vector<Scalar>> rows(n, std::vector<Scalar>(n, r));
  for (std::size_t i = 0; i < n; ++i) rows[i][i] = 0;
  Scalar w = Scalar(1);
  w /= Scalar(static_cast<long>(n));
  return make_space<Scalar>(rows, std::vector<Scalar>(n, w));
}

struct violation {
  std::string axiom;
  std::vector<std::size_t> indices;
  std::string detail;

  std::string describe() const {
    std::ostringstream os;
    os << axiom;
    if (!indices.empty()) {
      os << " at (";
      for (std::size_t k = 0; k < indices.size(); ++k) os << (k ? "," : "") << indices[k];
      os << ")";
    }
    if (!detail.empty()) os << ": " << detail;
    return os.str();
  }
};

/// Lists every violated mm-space axiom. Indices in the report are 0-based.
/// `tol` only matters for floating-point spaces.
template <class Scalar>
std::vector<violation> validate(const basic_mm_space<Scalar>& s, double tol = 1e-12) {
  using T = scalar_traits<Scalar>;
  std::vector<violation> out;
  const std::size_t n = s.weights.size();
  if (s.dist.size() != n) {
    out.push_back({"dimension", {}, "distance matrix is " + std::to_string(s.dist.size()) + "x" +
                                        std::to_string(s.dist.size()) + " but there are " + std::to_string(n) +
                                        " weights"});
    return out;
  }
  if (!s.labels.empty() && s.labels.size() != n)
    out.push_back({"dimension", {}, "label count " + std::to_string(s.labels.size()) + " differs from point count"});
  if (n == 0) {
    out.push_back({"nonempty", {}, "space has no points"});
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!T::is_zero(s.dist(i, i), tol)) out.push_back({"zero diagonal", {i, i}, T::str(s.dist(i, i))});
    for (std::size_t j = 0; j < n; ++j) {
      if (s.dist(i, j) < 0 && !T::is_zero(s.dist(i, j), tol))
        out.push_back({"nonnegativity", {i, j}, T::str(s.dist(i, j))});
      if (j > i && !T::equal(s.dist(i, j), s.dist(j, i), tol))
        out.push_back({"symmetry", {i, j}, T::str(s.dist(i, j)) + " != " + T::str(s.dist(j, i))});
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        if (i == k || j == i || j == k || k < i) continue;
        Scalar via = s.dist(i, j) + s.dist(j, k);
        if (!T::leq(s.dist(i, k), via, tol))
          out.push_back({"triangle", {i, j, k}, "d(" + std::to_string(i) + "," + std::to_string(k) + ") > d(" +
                                                    std::to_string(i) + "," + std::to_string(j) + ") + d(" +
                                                    std::to_string(j) + "," + std::to_string(k) + ")"});
      }
  Scalar total(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (s.weights[i] < 0 && !T::is_zero(s.weights[i], tol))
      out.push_back({"nonnegative weight", {i}, T::str(s.weights[i])});
    total += s.weights[i];
  }
  if (!T::equal(total, Scalar(1), tol)) out.push_back({"mass = 1", {}, "weights sum to " + T::str(total)});
  return out;
}

template <class Scalar>
void require_valid(const basic_mm_space<Scalar>& s, const std::string& what) {
  auto v = validate(s);
  if (!v.empty()) throw domain_error(what + ": " + v.front().describe());
}

/// Drops zero-weight points and merges points at distance 0 (weights summed,
/// first label kept). Float spaces merge below `tol`.
template <class Scalar>
basic_mm_space<Scalar> canonicalize(const basic_mm_space<Scalar>& s, double tol = 1e-12) {
  using T = scalar_traits<Scalar>;
  const std::size_t n = s.size();
  std::vector<std::size_t> keep;
  std::vector<Scalar> merged_weight;
  for (std::size_t i = 0; i < n; ++i) {
    if (T::is_zero(s.weights[i], tol)) continue;
    std::size_t target = n;
    for (std::size_t r = 0; r < keep.size(); ++r)
      if (T::is_zero(s.dist(i, keep[r]), tol)) {
        target = r;
        break;
      }
    if (target == n) {
      keep.push_back(i);
      merged_weight.push_back(s.weights[i]);
    } else {
      merged_weight[target] += s.weights[i];
    }
  }
  basic_mm_space<Scalar> out;
  out.dist = square_matrix<Scalar>(keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    out.labels.push_back(s.labels.size() == n ? s.labels[keep[a]] : "x" + std::to_string(keep[a]));
    for (std::size_t b = 0; b < keep.size(); ++b) out.dist(a, b) = s.dist(keep[a], keep[b]);
  }
  out.weights = std::move(merged_weight);
  return out;
}

template <class Scalar>
bool is_canonical(const basic_mm_space<Scalar>& s, double tol = 1e-12) {
  using T = scalar_traits<Scalar>;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (T::is_zero(s.weights[i], tol)) return false;
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (T::is_zero(s.dist(i, j), tol)) return false;
  }
  return true;
}

/// Replaces every distance by the shortest-path distance (Floyd-Warshall).
template <class Scalar>
void metric_closure(square_matrix<Scalar>& d) {
  const std::size_t n = d.size();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Scalar via = d(i, k) + d(k, j);
        if (via < d(i, j)) d(i, j) = via;
      }
}

/// Uniform integer in [0, bound) drawn directly from the engine so results do
/// not depend on the standard library's distribution implementations.
inline std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do v = rng(); while (v >= limit);
  return v % bound;
}

/// Random valid canonical space with at most `n_max` points. Distances are
/// multiples of 1/4 up to `diam_max`, closed under shortest paths; weights
/// are positive multiples of 1/(4n) summing to 1.
inline mm_space sample_mm_space(std::uint64_t seed, std::size_t n_max, const Rational& diam_max = Rational(2)) {
  if (n_max == 0) throw domain_error("sample_mm_space: n_max must be at least 1");
  std::mt19937_64 rng(seed);
  const std::size_t n = 1 + draw_below(rng, n_max);
  const Rational step(1, 4);
  Rational steps_r = diam_max / step;
  long max_steps = std::max<long>(1, mpz_class(steps_r.get_num() / steps_r.get_den()).get_si());

  square_matrix<Rational> d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      Rational v = step * Rational(static_cast<long>(1 + draw_below(rng, static_cast<std::uint64_t>(max_steps))));
      d(i, j) = v;
      d(j, i) = v;
    }
  metric_closure(d);

  const long units = static_cast<long>(4 * n);
  std::vector<long> parts(n, 1);
  for (long left = units - static_cast<long>(n); left > 0; --left) parts[draw_below(rng, n)] += 1;
  mm_space s;
  s.dist = std::move(d);
  for (std::size_t i = 0; i < n; ++i) s.weights.push_back(Rational(parts[i], units));
  for (auto& w : s.weights) w.canonicalize();
  s.labels = default_labels(n);
  return canonicalize(s);
}

/// Converts an exact space to floating point.
inline mm_space_f to_float(const mm_space& s) {
  mm_space_f out;
  out.labels = s.labels;
  out.dist = square_matrix<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) out.dist(i, j) = s.dist(i, j).get_d();
  for (const auto& w : s.weights) out.weights.push_back(w.get_d());
  return out;
}

}  // namespace mmspace
