#pragma once

// Polynomials on mm-spaces: expectations of a bounded test function of the
// distance matrix of n points sampled independently from the measure.

#include "mmspace/mm_space.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mmspace {

/// Sampled distance matrix (d(x_i, x_j))_{i,j<n}.
template <class Scalar>
using distance_sample = square_matrix<Scalar>;

/// Closed family of bounded test functions. Entry indices are 0-based
/// positions in the sampled matrix.
struct test_function {
  enum class kind {
    constant,            // phi = level
    truncated_entry,     // phi = min(r_ij, level)
    truncated_monomial,  // phi = min(prod r_ij, level)
    truncated_max,       // phi = min(max_ij r_ij, level)
    smoothed_indicator,  // phi = clamp((level - r_ij) / width, 0, 1)
  };

  kind type = kind::constant;
  Rational level{1};
  Rational width{1};
  std::vector<std::pair<std::size_t, std::size_t>> entries;

  static test_function constant(Rational c) { return {kind::constant, std::move(c), Rational(1), {}}; }
  static test_function truncated_entry(std::size_t i, std::size_t j, Rational m) {
    return {kind::truncated_entry, std::move(m), Rational(1), {{i, j}}};
  }
  static test_function truncated_monomial(std::vector<std::pair<std::size_t, std::size_t>> e, Rational m) {
    return {kind::truncated_monomial, std::move(m), Rational(1), std::move(e)};
  }
  static test_function truncated_max(Rational m) { return {kind::truncated_max, std::move(m), Rational(1), {}}; }
  static test_function smoothed_indicator(std::size_t i, std::size_t j, Rational m, Rational delta) {
    return {kind::smoothed_indicator, std::move(m), std::move(delta), {{i, j}}};
  }

  /// sup |phi|.
  Rational bound() const {
    if (type == kind::smoothed_indicator) return Rational(1);
    return abs(level);
  }

  /// Smallest sample order the function can be evaluated on.
  std::size_t min_order() const {
    std::size_t n = 1;
    for (auto [i, j] : entries) n = std::max({n, i + 1, j + 1});
    return n;
  }

  template <class Scalar>
  Scalar operator()(const distance_sample<Scalar>& r) const {
    const Scalar m = scalar_traits<Scalar>::from_rational(level);
    switch (type) {
      case kind::constant:
        return m;
      case kind::truncated_entry:
        return min_of<Scalar>(r(entries[0].first, entries[0].second), m);
      case kind::truncated_monomial: {
        Scalar p(1);
        for (auto [i, j] : entries) p *= r(i, j);
        return min_of<Scalar>(p, m);
      }
      case kind::truncated_max: {
        Scalar best(0);
        for (std::size_t i = 0; i < r.size(); ++i)
          for (std::size_t j = 0; j < r.size(); ++j) best = max_of<Scalar>(best, r(i, j));
        return min_of<Scalar>(best, m);
      }
      case kind::smoothed_indicator: {
        const Scalar w = scalar_traits<Scalar>::from_rational(width);
        Scalar v = m - r(entries[0].first, entries[0].second);
        v /= w;
        return max_of<Scalar>(Scalar(0), min_of<Scalar>(v, Scalar(1)));
      }
    }
    return Scalar(0);
  }
};

struct polynomial_options {
  std::uint64_t max_terms = 1'000'000;  // |X|^n cap for exact enumeration
};

/// Exact value of the polynomial: sum over all n-tuples of points of
/// (product of weights) * phi(sampled matrix).
template <class Scalar>
Scalar evaluate_polynomial(const basic_mm_space<Scalar>& s, std::size_t n, const test_function& phi,
                           const polynomial_options& opt = {}) {
  if (n == 0) throw domain_error("evaluate_polynomial: order n must be at least 1");
  if (phi.min_order() > n)
    throw domain_error("evaluate_polynomial: test function reads entry beyond order " + std::to_string(n));
  const std::size_t k = s.size();
  long double terms = std::pow(static_cast<long double>(k), static_cast<long double>(n));
  if (terms > static_cast<long double>(opt.max_terms))
    throw size_error("evaluate_polynomial: " + std::to_string(k) + "^" + std::to_string(n) +
                     " tuples exceed the exact cap of " + std::to_string(opt.max_terms) +
                     "; use the Monte Carlo estimator");

  std::vector<std::size_t> idx(n, 0);
  distance_sample<Scalar> r(n);
  Scalar total(0);
  for (;;) {
    Scalar w(1);
    for (std::size_t a = 0; a < n; ++a) {
      w *= s.weights[idx[a]];
      for (std::size_t b = 0; b < n; ++b) r(a, b) = s.dist(idx[a], idx[b]);
    }
    if (!scalar_traits<Scalar>::is_zero(w)) total += w * phi(r);
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == k) idx[pos++] = 0;
    if (pos == n) break;
  }
  return total;
}

struct monte_carlo_estimate {
  double mean = 0;
  double standard_error = 0;
  std::size_t samples = 0;
};

/// Monte Carlo estimate of the same integral from i.i.d. samples of mu^n.
template <class Scalar>
monte_carlo_estimate evaluate_polynomial_mc(const basic_mm_space<Scalar>& s, std::size_t n, const test_function& phi,
                                            std::size_t samples, std::uint64_t seed) {
  if (n == 0 || samples == 0) throw domain_error("evaluate_polynomial_mc: n and samples must be positive");
  std::vector<double> cdf;
  double acc = 0;
  for (const auto& w : s.weights) cdf.push_back(acc += to_double(w));
  std::mt19937_64 rng(seed);
  auto pick = [&] {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    std::size_t i = 0;
    while (i + 1 < cdf.size() && u >= cdf[i]) ++i;
    return i;
  };
  std::vector<std::size_t> idx(n);
  distance_sample<double> r(n);
  double sum = 0, sum_sq = 0;
  for (std::size_t t = 0; t < samples; ++t) {
    for (auto& v : idx) v = pick();
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) r(a, b) = to_double(s.dist(idx[a], idx[b]));
    double v = phi(r);
    sum += v;
    sum_sq += v * v;
  }
  monte_carlo_estimate e;
  e.samples = samples;
  e.mean = sum / static_cast<double>(samples);
  double var = samples > 1 ? (sum_sq - sum * e.mean) / static_cast<double>(samples - 1) : 0.0;
  e.standard_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(samples));
  return e;
}

}  // namespace mmspace
