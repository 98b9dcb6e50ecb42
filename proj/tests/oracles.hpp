#pragma once

// Independent reference computations for the tests. None of these share
// code paths with the library beyond the data types: subset enumeration
// instead of clique search, Hall deficiencies instead of max-flow, dense
// grids instead of exact geometry.

#include "mmspace/excursion.hpp"
#include "mmspace/gp_box.hpp"
#include "mmspace/mm_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using mmspace::Rational;

inline Rational R(const char* text) { return mmspace::parse_rational(text); }

/// Largest sub-coupling mass on K via Hall/Konig for transport:
/// 1 - max over A of (mu(A) - nu(N_K(A))).
inline Rational hall_mass(const mmspace::mm_space& a, const mmspace::mm_space& b,
                          const std::vector<mmspace::point_pair>& k) {
  const std::size_t n1 = a.size();
  Rational worst(0);
  for (std::uint64_t set = 1; set < (std::uint64_t{1} << n1); ++set) {
    Rational from(0);
    std::vector<bool> hit(b.size(), false);
    for (std::size_t i = 0; i < n1; ++i)
      if (set >> i & 1) {
        from += a.weights[i];
        for (auto [x, y] : k)
          if (x == i) hit[y] = true;
      }
    Rational to(0);
    for (std::size_t j = 0; j < b.size(); ++j)
      if (hit[j]) to += b.weights[j];
    Rational gap = from - to;
    if (worst < gap) worst = gap;
  }
  return Rational(1) - worst;
}

inline Rational distortion(const mmspace::mm_space& a, const mmspace::mm_space& b,
                           const std::vector<mmspace::point_pair>& k) {
  Rational worst(0);
  for (auto [x, y] : k)
    for (auto [x2, y2] : k) {
      Rational gap = abs(a.d(x, x2) - b.d(y, y2));
      if (worst < gap) worst = gap;
    }
  return worst;
}

/// min over every subset K of X1 x X2 of max(dis(K), (1 - mass(K)) / lambda).
inline Rational box_by_subsets(const mmspace::mm_space& a, const mmspace::mm_space& b, const Rational& lambda) {
  std::vector<mmspace::point_pair> all;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) all.emplace_back(i, j);
  Rational best = Rational(1) / lambda;
  for (std::uint64_t set = 1; set < (std::uint64_t{1} << all.size()); ++set) {
    std::vector<mmspace::point_pair> k;
    for (std::size_t p = 0; p < all.size(); ++p)
      if (set >> p & 1) k.push_back(all[p]);
    Rational dis = distortion(a, b, k);
    if (!(dis < best)) continue;
    Rational loss = (Rational(1) - hall_mass(a, b, k)) / lambda;
    Rational v = dis < loss ? loss : dis;
    if (v < best) best = v;
  }
  return best;
}

/// The Prohorov set condition at eps (open enlargements), both directions.
inline bool prohorov_condition(const mmspace::common_space_measures& cm, const Rational& eps) {
  const std::size_t n = cm.size();
  for (int dir = 0; dir < 2; ++dir) {
    const auto& from = dir == 0 ? cm.mu : cm.nu;
    const auto& to = dir == 0 ? cm.nu : cm.mu;
    for (std::uint64_t set = 1; set < (std::uint64_t{1} << n); ++set) {
      Rational m(0), e(0);
      for (std::size_t x = 0; x < n; ++x) {
        if (set >> x & 1) m += from[x];
        bool near = false;
        for (std::size_t y = 0; y < n && !near; ++y) near = (set >> y & 1) && cm.dist(x, y) < eps;
        if (near) e += to[x];
      }
      if (e + eps < m) return false;
    }
  }
  return true;
}

/// Lower envelope of g at t (the epigraph's bottom edge, closed).
inline double lower_value(const mmspace::excursion& g, double t) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.pieces(); ++k) {
    double a = g.breakpoints[k].get_d(), b = g.breakpoints[k + 1].get_d();
    if (t < a || t > b) continue;
    double ya = g.piece_start[k].get_d(), yb = g.piece_end[k].get_d();
    best = std::min(best, ya + (yb - ya) * (t - a) / (b - a));
  }
  for (std::size_t j = 0; j < g.breakpoints.size(); ++j)
    if (g.breakpoints[j].get_d() == t) best = std::min(best, g.point_values[j].get_d());
  return best;
}

/// sup over sampled bottom-edge points of epi(h) of the grid distance to
/// epi(g). Both grids have `n` cells plus all breakpoints.
inline double directed_gamma_grid(const mmspace::excursion& h, const mmspace::excursion& g, int n) {
  std::vector<double> ts;
  for (int i = 0; i <= n; ++i) ts.push_back(static_cast<double>(i) / n);
  for (const auto& b : h.breakpoints) ts.push_back(b.get_d());
  for (const auto& b : g.breakpoints) ts.push_back(b.get_d());
  std::sort(ts.begin(), ts.end());
  std::vector<double> gy;
  for (double t : ts) gy.push_back(lower_value(g, t));
  double worst = 0;
  auto probe = [&](double px, double py) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      double dy = std::max(0.0, gy[i] - py);
      best = std::min(best, std::hypot(ts[i] - px, dy));
    }
    worst = std::max(worst, best);
  };
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double t = ts[i];
    probe(t, lower_value(h, t));
    // one-sided limits at breakpoints of h
    for (std::size_t k = 0; k < h.pieces(); ++k) {
      if (h.breakpoints[k].get_d() == t) probe(t, h.piece_start[k].get_d());
      if (h.breakpoints[k + 1].get_d() == t) probe(t, h.piece_end[k].get_d());
    }
  }
  return worst;
}

inline double gamma_grid(const mmspace::excursion& h, const mmspace::excursion& g, int n = 4000) {
  return std::max(directed_gamma_grid(h, g, n), directed_gamma_grid(g, h, n));
}

/// inf{eps > 0 : Leb{|h - g| > eps} < eps} on a midpoint grid of `n` cells
/// and an eps grid of step 1/m.
inline double lambda_grid(const mmspace::excursion& h, const mmspace::excursion& g, int n = 20000, int m = 4000) {
  std::vector<double> diff;
  for (int i = 0; i < n; ++i) {
    Rational t(2 * i + 1, 2 * n);
    t.canonicalize();
    Rational gap = abs(mmspace::eval(h, t) - mmspace::eval(g, t));
    diff.push_back(gap.get_d());
  }
  std::sort(diff.begin(), diff.end());
  for (int j = 1; j <= m; ++j) {
    double eps = static_cast<double>(j) / m;
    auto above = diff.end() - std::upper_bound(diff.begin(), diff.end(), eps);
    if (static_cast<double>(above) / n < eps) return eps;
  }
  return 1.0;
}

/// True when some weight-preserving bijection maps d1 onto d2.
inline bool isomorphic(const mmspace::mm_space& a, const mmspace::mm_space& b) {
  if (a.size() != b.size()) return false;
  std::vector<std::size_t> perm(a.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  do {
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      ok = a.weights[i] == b.weights[perm[i]];
      for (std::size_t j = 0; j < a.size() && ok; ++j) ok = a.d(i, j) == b.d(perm[i], perm[j]);
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

/// Random probability vector with entries k / (4n), some possibly 0.
inline std::vector<Rational> random_measure(std::mt19937_64& rng, std::size_t n) {
  const long units = static_cast<long>(4 * n);
  std::vector<long> parts(n, 0);
  for (long u = 0; u < units; ++u) parts[mmspace::draw_below(rng, n)] += 1;
  std::vector<Rational> w;
  for (long p : parts) w.push_back(mmspace::ratio(p, units));
  return w;
}

}  // namespace oracle
