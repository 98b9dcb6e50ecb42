#pragma once

// Piecewise excursions on [0,1], the trees they code, and the excursion
// metrics (convergence in measure plus epigraph distance).
//
// Every excursion is stored as breakpoints 0 = t_0 < ... < t_m = 1, the
// values h(t_j) at the breakpoints, and for each open piece (t_k, t_{k+1})
// the two one-sided limits; h is affine on each open piece. Piecewise-linear
// excursions have both limits equal to the neighbouring breakpoint values;
// piecewise-constant ones have equal limits on each piece and breakpoint
// values no larger than the adjacent pieces (lower semi-continuity).

#include "mmspace/mm_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace mmspace {

enum class excursion_kind { piecewise_linear, piecewise_constant };

struct excursion {
  excursion_kind kind = excursion_kind::piecewise_linear;
  std::vector<Rational> breakpoints;
  std::vector<Rational> point_values;  // h(t_j)
  std::vector<Rational> piece_start;   // lim_{t -> t_k+} h(t)
  std::vector<Rational> piece_end;     // lim_{t -> t_{k+1}-} h(t)

  std::size_t pieces() const { return piece_start.size(); }

  /// Continuous interpolation of (t_j, v_j).
  static excursion piecewise_linear(std::vector<Rational> breaks, std::vector<Rational> values) {
    excursion h;
    h.kind = excursion_kind::piecewise_linear;
    h.breakpoints = std::move(breaks);
    h.point_values = std::move(values);
    for (std::size_t k = 0; k + 1 < h.point_values.size(); ++k) {
      h.piece_start.push_back(h.point_values[k]);
      h.piece_end.push_back(h.point_values[k + 1]);
    }
    return h;
  }

  /// Constant `levels[k]` on (t_k, t_{k+1}). Missing breakpoint values
  /// default to the minimum of the adjacent pieces (0 at t = 0).
  static excursion piecewise_constant(std::vector<Rational> breaks, std::vector<Rational> levels,
                                      std::vector<Rational> values = {}) {
    excursion h;
    h.kind = excursion_kind::piecewise_constant;
    h.breakpoints = std::move(breaks);
    h.piece_start = levels;
    h.piece_end = levels;
    if (values.empty()) {
      const std::size_t m = levels.size();
      for (std::size_t j = 0; j <= m; ++j) {
        if (j == 0) {
          values.emplace_back(0);
        } else if (j == m) {
          values.push_back(levels[m - 1]);
        } else {
          values.push_back(min_of(levels[j - 1], levels[j]));
        }
      }
    }
    h.point_values = std::move(values);
    return h;
  }

  friend bool operator==(const excursion&, const excursion&) = default;
};

/// Problems with the excursion axioms, in order of discovery.
inline std::vector<std::string> validate(const excursion& h) {
  std::vector<std::string> out;
  const std::size_t m = h.breakpoints.size();
  if (m < 2) {
    out.push_back("breakpoints: need at least 0 and 1");
    return out;
  }
  if (h.point_values.size() != m) {
    out.push_back("breakpoint values: expected " + std::to_string(m) + ", got " + std::to_string(h.point_values.size()));
    return out;
  }
  if (h.piece_start.size() != m - 1 || h.piece_end.size() != m - 1) {
    out.push_back("pieces: expected " + std::to_string(m - 1) + " piece values");
    return out;
  }
  if (h.breakpoints.front() != 0 || h.breakpoints.back() != 1) out.push_back("breakpoints: must start at 0 and end at 1");
  for (std::size_t j = 0; j + 1 < m; ++j)
    if (!(h.breakpoints[j] < h.breakpoints[j + 1]))
      out.push_back("breakpoints: not strictly increasing at index " + std::to_string(j + 1));
  if (h.point_values.front() != 0) out.push_back("h(0) = " + to_string(h.point_values.front()) + ", must be 0");
  for (std::size_t j = 0; j < m; ++j)
    if (h.point_values[j] < 0) out.push_back("breakpoint value " + std::to_string(j) + " is negative");
  for (std::size_t k = 0; k + 1 < m; ++k) {
    if (h.piece_start[k] < 0 || h.piece_end[k] < 0) out.push_back("piece " + std::to_string(k) + " is negative");
    if (h.kind == excursion_kind::piecewise_constant && h.piece_start[k] != h.piece_end[k])
      out.push_back("piece " + std::to_string(k) + " is not constant");
    if (h.kind == excursion_kind::piecewise_linear &&
        (h.piece_start[k] != h.point_values[k] || h.piece_end[k] != h.point_values[k + 1]))
      out.push_back("piece " + std::to_string(k) + " is not continuous at its ends");
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (j > 0 && h.piece_end[j - 1] < h.point_values[j])
      out.push_back("lower semi-continuity fails at breakpoint " + std::to_string(j) + " (left limit " +
                    to_string(h.piece_end[j - 1]) + " < value " + to_string(h.point_values[j]) + ")");
    if (j + 1 < m && h.piece_start[j] < h.point_values[j])
      out.push_back("lower semi-continuity fails at breakpoint " + std::to_string(j) + " (right limit " +
                    to_string(h.piece_start[j]) + " < value " + to_string(h.point_values[j]) + ")");
  }
  return out;
}

inline void require_valid(const excursion& h, const std::string& what) {
  if (auto v = validate(h); !v.empty()) throw domain_error(what + ": " + v.front());
}

namespace detail {

/// Index k of the piece with t in [t_k, t_{k+1}); t = 1 maps to the last.
inline std::size_t piece_of(const excursion& h, const Rational& t) {
  auto it = std::upper_bound(h.breakpoints.begin(), h.breakpoints.end(), t);
  std::size_t k = static_cast<std::size_t>(it - h.breakpoints.begin());
  k = k == 0 ? 0 : k - 1;
  return std::min(k, h.pieces() - 1);
}

/// Affine value of piece k at t (t in the closed piece; ends give limits).
inline Rational on_piece(const excursion& h, std::size_t k, const Rational& t) {
  const Rational& a = h.breakpoints[k];
  const Rational& b = h.breakpoints[k + 1];
  Rational v = h.piece_end[k] - h.piece_start[k];
  v *= t - a;
  v /= b - a;
  v += h.piece_start[k];
  return v;
}

inline std::optional<std::size_t> breakpoint_index(const excursion& h, const Rational& t) {
  auto it = std::lower_bound(h.breakpoints.begin(), h.breakpoints.end(), t);
  if (it != h.breakpoints.end() && *it == t) return static_cast<std::size_t>(it - h.breakpoints.begin());
  return std::nullopt;
}

inline std::vector<Rational> merge_breaks(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  std::vector<Rational> out;
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

inline Rational eval(const excursion& h, const Rational& t) {
  if (t < 0 || t > 1) throw domain_error("eval: t = " + to_string(t) + " outside [0,1]");
  if (auto j = detail::breakpoint_index(h, t)) return h.point_values[*j];
  return detail::on_piece(h, detail::piece_of(h, t), t);
}

/// lim_{u -> t+} h(u), for t in [0, 1).
inline Rational right_limit(const excursion& h, const Rational& t) {
  return detail::on_piece(h, detail::piece_of(h, t), t);
}

/// lim_{u -> t-} h(u), for t in (0, 1].
inline Rational left_limit(const excursion& h, const Rational& t) {
  auto it = std::lower_bound(h.breakpoints.begin(), h.breakpoints.end(), t);
  std::size_t k = static_cast<std::size_t>(it - h.breakpoints.begin());
  return detail::on_piece(h, k == 0 ? 0 : k - 1, t);
}

/// inf of h over the closed interval between s and t.
inline Rational infimum(const excursion& h, const Rational& s, const Rational& t) {
  Rational lo = min_of(s, t), hi = max_of(s, t);
  Rational best = min_of(eval(h, lo), eval(h, hi));
  if (lo == hi) return best;
  for (std::size_t j = 0; j < h.breakpoints.size(); ++j)
    if (lo < h.breakpoints[j] && h.breakpoints[j] < hi) best = min_of(best, h.point_values[j]);
  for (std::size_t k = 0; k < h.pieces(); ++k) {
    Rational a = max_of(h.breakpoints[k], lo), b = min_of(h.breakpoints[k + 1], hi);
    if (!(a < b)) continue;
    best = min_of(best, detail::on_piece(h, k, a));
    best = min_of(best, detail::on_piece(h, k, b));
  }
  return best;
}

/// Tree pseudometric h(s) + h(t) - 2 inf_{[s,t]} h.
inline Rational dh(const excursion& h, const Rational& s, const Rational& t) {
  if (s < 0 || s > 1 || t < 0 || t > 1) throw domain_error("dh: argument outside [0,1]");
  Rational v = eval(h, s) + eval(h, t);
  v -= 2 * infimum(h, s, t);
  return v;
}

/// sup_t |h(t) - g(t)|; on each open piece of the common refinement the
/// difference is affine, so its supremum is at the one-sided limits.
inline Rational sup_distance(const excursion& h, const excursion& g) {
  auto breaks = detail::merge_breaks(h.breakpoints, g.breakpoints);
  Rational best(0);
  for (const auto& t : breaks) best = max_of(best, Rational(abs(eval(h, t) - eval(g, t))));
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    best = max_of(best, Rational(abs(right_limit(h, breaks[k]) - right_limit(g, breaks[k]))));
    best = max_of(best, Rational(abs(left_limit(h, breaks[k + 1]) - left_limit(g, breaks[k + 1]))));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Coding

struct coded_tree {
  mm_space space;                          // canonical, points = tree classes
  std::vector<Rational> cuts;              // segment boundaries
  std::vector<Rational> representatives;   // one time per segment
  std::vector<std::size_t> segment_point;  // segment -> point of `space`
  Rational approximation_bound{0};         // d_GP(space, T_h) <= this
};

/// Segment boundaries used to code a piecewise-linear excursion: the ends,
/// the breakpoints where the slope changes sign, the resolution points, and
/// every crossing of a level h(c) taken at those cuts. Each resulting
/// segment is monotone and no cut level lies strictly inside its range.
/// Breakpoints that do not change the direction of h are ignored, so the
/// result depends on h only, not on how it is presented.
inline std::vector<Rational> coding_partition(const excursion& h, const std::vector<Rational>& resolution = {}) {
  std::vector<Rational> cuts{Rational(0), Rational(1)};
  for (const auto& r : resolution)
    if (0 < r && r < 1) cuts.push_back(r);
  if (h.kind == excursion_kind::piecewise_constant) {
    cuts.insert(cuts.end(), h.breakpoints.begin(), h.breakpoints.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
  }
  auto direction = [&](std::size_t k) { return sgn(h.piece_end[k] - h.piece_start[k]); };
  for (std::size_t j = 1; j + 1 < h.breakpoints.size(); ++j)
    if (direction(j - 1) != direction(j)) cuts.push_back(h.breakpoints[j]);
  std::vector<Rational> levels;
  for (const auto& c : cuts) levels.push_back(eval(h, c));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  // crossings that land exactly on a breakpoint
  for (std::size_t j = 1; j + 1 < h.breakpoints.size(); ++j)
    if (direction(j) != 0 && std::binary_search(levels.begin(), levels.end(), h.point_values[j]))
      cuts.push_back(h.breakpoints[j]);
  for (std::size_t k = 0; k < h.pieces(); ++k) {
    const Rational& va = h.piece_start[k];
    const Rational& vb = h.piece_end[k];
    if (va == vb) continue;
    Rational lo = min_of(va, vb), hi = max_of(va, vb);
    for (const auto& l : levels) {
      if (!(lo < l && l < hi)) continue;
      Rational t = l - va;
      t *= h.breakpoints[k + 1] - h.breakpoints[k];
      t /= vb - va;
      t += h.breakpoints[k];
      cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

/// Codes h on a given partition: each segment collapses to the tree point
/// of its midpoint, carrying the segment's Lebesgue mass; segments at
/// d_h-distance 0 merge (leftmost representative). `cuts` must refine the
/// coding partition of h for the approximation bound to hold.
inline coded_tree code_on_partition(const excursion& h, std::vector<Rational> cuts) {
  require_valid(h, "code_excursion");
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  if (cuts.size() < 2 || cuts.front() != 0 || cuts.back() != 1)
    throw domain_error("code_excursion: partition must start at 0 and end at 1");

  coded_tree out;
  const std::size_t segs = cuts.size() - 1;
  for (std::size_t k = 0; k < segs; ++k) {
    Rational mid = cuts[k] + cuts[k + 1];
    mid /= 2;
    out.representatives.push_back(mid);
  }
  std::vector<std::size_t> parent(segs);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < segs; ++i)
    for (std::size_t j = i + 1; j < segs; ++j) {
      if (find(i) == find(j)) continue;
      if (sgn(dh(h, out.representatives[i], out.representatives[j])) == 0) parent[find(j)] = find(i);
    }

  std::vector<std::size_t> roots;
  out.segment_point.assign(segs, 0);
  std::vector<Rational> weights;
  for (std::size_t k = 0; k < segs; ++k) {
    std::size_t r = find(k);
    auto it = std::find(roots.begin(), roots.end(), r);
    std::size_t idx = static_cast<std::size_t>(it - roots.begin());
    if (it == roots.end()) {
      roots.push_back(r);
      weights.emplace_back(0);
    }
    out.segment_point[k] = idx;
    weights[idx] += cuts[k + 1] - cuts[k];
  }
  const std::size_t n = roots.size();
  out.space.dist = square_matrix<Rational>(n);
  for (std::size_t a = 0; a < n; ++a) {
    out.space.labels.push_back("t=" + to_string(out.representatives[roots[a]]));
    for (std::size_t b = a + 1; b < n; ++b) {
      Rational d = dh(h, out.representatives[roots[a]], out.representatives[roots[b]]);
      out.space.dist(a, b) = d;
      out.space.dist(b, a) = d;
    }
  }
  out.space.weights = std::move(weights);

  // Within a monotone segment d_h(s, mid) = |h(s) - h(mid)|, largest at an end.
  Rational bound(0);
  if (h.kind == excursion_kind::piecewise_linear)
    for (std::size_t k = 0; k < segs; ++k) {
      Rational centre = eval(h, out.representatives[k]);
      bound = max_of(bound, Rational(abs(eval(h, cuts[k]) - centre)));
      bound = max_of(bound, Rational(abs(eval(h, cuts[k + 1]) - centre)));
    }
  out.approximation_bound = bound;
  out.cuts = std::move(cuts);
  return out;
}

/// The coded tree (T_h, d_h, mu_h) as a finite mm-space. Exact for
/// piecewise-constant h; for piecewise-linear h a finite subspace of T_h
/// whose d_GP-distance to T_h is at most `approximation_bound`.
inline coded_tree code_excursion(const excursion& h, const std::vector<Rational>& resolution = {}) {
  require_valid(h, "code_excursion");
  return code_on_partition(h, coding_partition(h, resolution));
}

/// Codes h and g on the union of their coding partitions, so both trees
/// are parametrized by the same segments.
inline std::pair<coded_tree, coded_tree> code_excursion_pair(const excursion& h, const excursion& g,
                                                             const std::vector<Rational>& resolution = {}) {
  auto cuts = detail::merge_breaks(coding_partition(h, resolution), coding_partition(g, resolution));
  return {code_on_partition(h, cuts), code_on_partition(g, cuts)};
}

/// Quadruples of distinct points (i < j < k < l) where the two largest of
/// d_ij + d_kl, d_ik + d_jl, d_il + d_jk differ.
template <class Scalar>
std::vector<std::array<std::size_t, 4>> four_point_check(const basic_mm_space<Scalar>& s) {
  std::vector<std::array<std::size_t, 4>> bad;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          std::array<Scalar, 3> sums{s.d(i, j) + s.d(k, l), s.d(i, k) + s.d(j, l), s.d(i, l) + s.d(j, k)};
          std::sort(sums.begin(), sums.end());
          if (!scalar_traits<Scalar>::equal(sums[1], sums[2])) bad.push_back({i, j, k, l});
        }
  return bad;
}

// ---------------------------------------------------------------------------
// Convergence in measure

/// inf{eps > 0 : Leb{t : |h(t) - g(t)| > eps} < eps}. The measure m(eps)
/// is piecewise affine in eps between the values |h - g| takes at the ends
/// of the linear pieces of the difference, so the crossing m(eps) = eps is
/// found exactly on one of those intervals.
inline Rational d_lambda(const excursion& h, const excursion& g) {
  require_valid(h, "d_lambda (first)");
  require_valid(g, "d_lambda (second)");
  struct piece {
    Rational lo, hi, length;
  };
  std::vector<piece> pieces;
  auto breaks = detail::merge_breaks(h.breakpoints, g.breakpoints);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const Rational& a = breaks[k];
    const Rational& b = breaks[k + 1];
    Rational fa = right_limit(h, a) - right_limit(g, a);
    Rational fb = left_limit(h, b) - left_limit(g, b);
    if (sgn(fa) * sgn(fb) < 0) {
      Rational root = fa / (fa - fb);
      root *= b - a;
      root += a;
      pieces.push_back({Rational(0), Rational(abs(fa)), Rational(root - a)});
      pieces.push_back({Rational(0), Rational(abs(fb)), Rational(b - root)});
    } else {
      Rational x = abs(fa), y = abs(fb);
      pieces.push_back({min_of(x, y), max_of(x, y), Rational(b - a)});
    }
  }
  std::vector<Rational> levels{Rational(0)};
  for (const auto& p : pieces) {
    levels.push_back(p.lo);
    levels.push_back(p.hi);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  for (std::size_t e = 0; e < levels.size(); ++e) {
    const Rational& start = levels[e];
    // m(eps) = alpha + beta * eps on [start, next)
    Rational alpha(0), beta(0);
    for (const auto& p : pieces) {
      if (start < p.lo) {
        alpha += p.length;
      } else if (start < p.hi) {
        Rational span = p.hi - p.lo;
        alpha += p.length * p.hi / span;
        beta -= p.length / span;
      }
    }
    Rational crossing = alpha / (1 - beta);
    Rational candidate = max_of(start, crossing);
    if (e + 1 == levels.size() || candidate < levels[e + 1]) return candidate;
  }
  return levels.back();
}

// ---------------------------------------------------------------------------
// Epigraph distance

/// A distance known to lie in [lo, hi]. `exact` is set when the value is a
/// known rational.
struct certified_distance {
  double lo = 0;
  double hi = 0;
  std::optional<Rational> exact;
  std::optional<Rational> exact_square;
  bool converged = true;

  double midpoint() const { return exact ? exact->get_d() : 0.5 * (lo + hi); }
};

struct gamma_options {
  double tolerance = 1e-9;
  std::size_t max_evaluations = 400'000;
};

namespace detail {

struct point2 {
  Rational x, y;
};

/// Closed pieces of the epigraph: the region above each closed affine piece
/// and the vertical ray above each breakpoint value.
struct epigraph {
  struct region {
    Rational a, b, ya, yb;  // ray when a == b
  };
  std::vector<region> parts;
  bool flat = true;

  explicit epigraph(const excursion& g) {
    for (std::size_t k = 0; k < g.pieces(); ++k) {
      parts.push_back({g.breakpoints[k], g.breakpoints[k + 1], g.piece_start[k], g.piece_end[k]});
      if (g.piece_start[k] != g.piece_end[k]) flat = false;
    }
    for (std::size_t j = 0; j < g.breakpoints.size(); ++j)
      parts.push_back({g.breakpoints[j], g.breakpoints[j], g.point_values[j], g.point_values[j]});
  }
};

inline Rational sq(const Rational& v) { return v * v; }

inline Rational dist2_to_segment(const point2& p, const point2& s0, const point2& s1) {
  Rational dx = s1.x - s0.x, dy = s1.y - s0.y;
  Rational len2 = dx * dx + dy * dy;
  if (sgn(len2) == 0) return sq(p.x - s0.x) + sq(p.y - s0.y);
  Rational tau = ((p.x - s0.x) * dx + (p.y - s0.y) * dy) / len2;
  if (tau < 0) tau = 0;
  if (tau > 1) tau = 1;
  Rational qx = s0.x + tau * dx, qy = s0.y + tau * dy;
  return sq(p.x - qx) + sq(p.y - qy);
}

inline Rational dist2_to_ray(const point2& p, const Rational& x0, const Rational& y0) {
  Rational d = sq(p.x - x0);
  if (p.y < y0) d += sq(y0 - p.y);
  return d;
}

inline Rational dist2_to_region(const point2& p, const epigraph::region& r) {
  if (r.a == r.b) return dist2_to_ray(p, r.a, min_of(r.ya, r.yb));
  if (!(p.x < r.a) && !(r.b < p.x)) {
    Rational floor = r.yb - r.ya;
    floor *= p.x - r.a;
    floor /= r.b - r.a;
    floor += r.ya;
    if (!(p.y < floor)) return Rational(0);
  }
  Rational best = dist2_to_segment(p, {r.a, r.ya}, {r.b, r.yb});
  best = min_of(best, dist2_to_ray(p, r.a, r.ya));
  best = min_of(best, dist2_to_ray(p, r.b, r.yb));
  return best;
}

inline Rational dist2_to_epigraph(const point2& p, const epigraph& e) {
  Rational best = dist2_to_region(p, e.parts.front());
  for (std::size_t k = 1; k < e.parts.size(); ++k) {
    if (sgn(best) == 0) break;
    best = min_of(best, dist2_to_region(p, e.parts[k]));
  }
  return best;
}

/// Graph pieces of h: closed segments of the affine pieces and the isolated
/// breakpoint points. The directed distance from epi(h) to epi(g) is the
/// supremum over these, since moving a point up never increases its
/// distance to an upward-closed set.
inline std::vector<std::pair<point2, point2>> graph_segments(const excursion& h) {
  std::vector<std::pair<point2, point2>> out;
  for (std::size_t k = 0; k < h.pieces(); ++k)
    out.push_back({{h.breakpoints[k], h.piece_start[k]}, {h.breakpoints[k + 1], h.piece_end[k]}});
  for (std::size_t j = 0; j < h.breakpoints.size(); ++j)
    out.push_back({{h.breakpoints[j], h.point_values[j]}, {h.breakpoints[j], h.point_values[j]}});
  return out;
}

/// Exact squared directed distance when both functions are piecewise
/// constant. Along a horizontal graph segment the distance to each region
/// is flat over the region's x-range and rises (falls) like
/// sqrt((x - b)^2 + dy^2) to the right (left). The maximum of the lower
/// envelope of such functions is attained at a segment end, a region end,
/// or where a rising branch meets a falling one; those crossings solve a
/// linear equation, so every candidate is rational.
inline Rational directed_flat_sq(const excursion& h, const epigraph& e) {
  Rational best(0);
  for (const auto& [p0, p1] : graph_segments(h)) {
    const Rational& y = p0.y;
    std::vector<Rational> xs{p0.x, p1.x};
    struct branch {
      Rational a, b, dy2;
    };
    std::vector<branch> br;
    for (const auto& r : e.parts) {
      Rational c = min_of(r.ya, r.yb);
      Rational dy = c - y;
      if (dy < 0) dy = 0;
      br.push_back({r.a, r.b, dy * dy});
      if (p0.x < r.a && r.a < p1.x) xs.push_back(r.a);
      if (p0.x < r.b && r.b < p1.x) xs.push_back(r.b);
    }
    if (p0.x < p1.x)
      for (const auto& rising : br)
        for (const auto& falling : br) {
          if (!(rising.b < falling.a)) continue;
          Rational x = sq(falling.a) - sq(rising.b) + falling.dy2 - rising.dy2;
          x /= 2 * (falling.a - rising.b);
          if (x < rising.b || falling.a < x || x < p0.x || p1.x < x) continue;
          xs.push_back(x);
        }
    for (const auto& x : xs) best = max_of(best, dist2_to_epigraph({x, y}, e));
  }
  return best;
}

struct double_region {
  double a, b, ya, yb;
};

/// Squared distance from (px, py) to each closed region.
inline void region_dist2_d(double px, double py, const std::vector<double_region>& parts, std::vector<double>& out) {
  auto seg = [](double x, double y, double x0, double y0, double x1, double y1) {
    double dx = x1 - x0, dy = y1 - y0, len2 = dx * dx + dy * dy;
    double tau = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
    tau = std::clamp(tau, 0.0, 1.0);
    double qx = x0 + tau * dx - x, qy = y0 + tau * dy - y;
    return qx * qx + qy * qy;
  };
  auto ray = [](double x, double y, double x0, double y0) {
    double d = (x - x0) * (x - x0);
    if (y < y0) d += (y0 - y) * (y0 - y);
    return d;
  };
  out.resize(parts.size());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& r = parts[k];
    if (r.a == r.b) {
      out[k] = ray(px, py, r.a, std::min(r.ya, r.yb));
    } else if (px >= r.a && px <= r.b && py >= r.ya + (r.yb - r.ya) * (px - r.a) / (r.b - r.a)) {
      out[k] = 0.0;
    } else {
      out[k] = std::min({seg(px, py, r.a, r.ya, r.b, r.yb), ray(px, py, r.a, r.ya), ray(px, py, r.b, r.yb)});
    }
  }
}

/// Certified bounds on sup over the graph of h of dist(., epi g) by
/// branch and bound. On a sub-segment of length L with end values f0, f1
/// the maximum is at most (f0 + f1 + L) / 2, since dist to a set is
/// 1-Lipschitz; it is also at most max(d_R(p0), d_R(p1)) for every convex
/// region R of the epigraph, since dist to a convex set is convex.
inline std::pair<double, double> directed_certified(const excursion& h, const excursion& g, const gamma_options& opt,
                                                    bool& converged) {
  epigraph e(g);
  std::vector<double_region> parts;
  for (const auto& r : e.parts) parts.push_back({r.a.get_d(), r.b.get_d(), r.ya.get_d(), r.yb.get_d()});
  const double slack = 1e-12;

  struct vertex {
    double x, y, f;
    std::vector<double> d;  // distance to each region
  };
  std::vector<vertex> vertices;
  struct cell {
    double ub;
    std::size_t v0, v1;
    bool operator<(const cell& o) const { return ub < o.ub; }
  };
  std::priority_queue<cell> queue;
  double lower = 0;
  std::size_t evaluations = 0;
  auto add_vertex = [&](double x, double y) {
    ++evaluations;
    vertex v{x, y, 0.0, {}};
    region_dist2_d(x, y, parts, v.d);
    for (auto& d : v.d) d = std::sqrt(d);
    v.f = *std::min_element(v.d.begin(), v.d.end());
    lower = std::max(lower, v.f - slack);
    vertices.push_back(std::move(v));
    return vertices.size() - 1;
  };
  auto push = [&](std::size_t i0, std::size_t i1) {
    const vertex& a = vertices[i0];
    const vertex& b = vertices[i1];
    double len = std::hypot(b.x - a.x, b.y - a.y) * (1 + 1e-15);
    double ub = 0.5 * (a.f + b.f + len);
    for (std::size_t k = 0; k < parts.size(); ++k) ub = std::min(ub, std::max(a.d[k], b.d[k]));
    queue.push({ub + slack, i0, i1});
  };
  for (const auto& [p0, p1] : graph_segments(h)) {
    std::size_t a = add_vertex(p0.x.get_d(), p0.y.get_d());
    std::size_t b = add_vertex(p1.x.get_d(), p1.y.get_d());
    push(a, b);
  }
  lower = std::max(lower, 0.0);
  while (!queue.empty()) {
    cell c = queue.top();
    if (c.ub - lower <= opt.tolerance) break;
    if (evaluations >= opt.max_evaluations) {
      converged = false;
      break;
    }
    queue.pop();
    std::size_t m = add_vertex(0.5 * (vertices[c.v0].x + vertices[c.v1].x), 0.5 * (vertices[c.v0].y + vertices[c.v1].y));
    push(c.v0, m);
    push(m, c.v1);
  }
  double upper = queue.empty() ? lower : std::max(lower, queue.top().ub);
  return {lower, upper};
}

}  // namespace detail

/// Hausdorff distance between the epigraphs of h and g in the plane.
/// Exact (as a squared rational) when both are piecewise constant,
/// otherwise certified to `tolerance` by branch and bound.
inline certified_distance d_gamma(const excursion& h, const excursion& g, const gamma_options& opt = {}) {
  require_valid(h, "d_gamma (first)");
  require_valid(g, "d_gamma (second)");
  certified_distance out;
  detail::epigraph eh(h), eg(g);
  if (eh.flat && eg.flat) {
    Rational d2 = max_of(detail::directed_flat_sq(h, eg), detail::directed_flat_sq(g, eh));
    out.exact_square = d2;
    double v = std::sqrt(d2.get_d());
    out.lo = std::nextafter(v, 0.0);
    out.hi = std::nextafter(v, 2.0 * v + 1.0);
    Rational root;
    if (exact_sqrt(d2, root)) {
      out.exact = root;
      out.lo = out.hi = root.get_d();
    }
    return out;
  }
  if (sgn(sup_distance(h, g)) == 0) {
    out.exact = Rational(0);
    return out;
  }
  bool converged = true;
  auto [lo1, hi1] = detail::directed_certified(h, g, opt, converged);
  auto [lo2, hi2] = detail::directed_certified(g, h, opt, converged);
  out.lo = std::max(lo1, lo2);
  out.hi = std::max(hi1, hi2);
  out.converged = converged;
  return out;
}

/// d_Gamma + d_lambda.
inline certified_distance d_excursion(const excursion& h, const excursion& g, const gamma_options& opt = {}) {
  certified_distance gamma = d_gamma(h, g, opt);
  Rational lambda = d_lambda(h, g);
  certified_distance out = gamma;
  double l = lambda.get_d();
  out.lo = gamma.lo + l;
  out.hi = gamma.hi + l;
  if (gamma.exact) {
    out.exact = *gamma.exact + lambda;
    out.lo = out.hi = out.exact->get_d();
  }
  out.exact_square.reset();
  return out;
}

// ---------------------------------------------------------------------------
// Standard excursions and generators

/// Tent through (0,0), (1/2, height), (1,0).
inline excursion tent(const Rational& height = Rational(1)) {
  return excursion::piecewise_linear({Rational(0), Rational(1, 2), Rational(1)}, {Rational(0), height, Rational(0)});
}

/// h_n(t) = 1 - 1{nt is an integer}: height 1 off the grid k/n, 0 on it.
inline excursion grid_indicator(std::size_t n) {
  if (n == 0) throw domain_error("grid_indicator: n must be positive");
  std::vector<Rational> breaks, levels, values;
  for (std::size_t k = 0; k <= n; ++k) {
    breaks.push_back(ratio(static_cast<long>(k), static_cast<long>(n)));
    values.emplace_back(0);
  }
  levels.assign(n, Rational(1));
  return excursion::piecewise_constant(std::move(breaks), std::move(levels), std::move(values));
}

/// 0 at t = 0 and 1 elsewhere.
inline excursion unit_step() {
  return excursion::piecewise_constant({Rational(0), Rational(1)}, {Rational(1)}, {Rational(0), Rational(1)});
}

inline excursion zero_excursion() {
  return excursion::piecewise_linear({Rational(0), Rational(1)}, {Rational(0), Rational(0)});
}

/// Random excursion on the grid k / grid: `interior` distinct interior
/// breakpoints, heights j / height_den with j < height_levels.
inline excursion random_excursion(std::mt19937_64& rng, excursion_kind kind, std::size_t interior = 3,
                                  long grid = 8, long height_levels = 9, long height_den = 4) {
  std::vector<long> slots;
  for (long k = 1; k < grid; ++k) slots.push_back(k);
  for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[draw_below(rng, i)]);
  slots.resize(std::min<std::size_t>(interior, slots.size()));
  std::sort(slots.begin(), slots.end());
  std::vector<Rational> breaks{Rational(0)};
  for (long s : slots) {
    breaks.push_back(ratio(s, grid));
  }
  breaks.emplace_back(1);
  auto height = [&] {
    return ratio(static_cast<long>(draw_below(rng, static_cast<std::uint64_t>(height_levels))), height_den);
  };
  if (kind == excursion_kind::piecewise_linear) {
    std::vector<Rational> values{Rational(0)};
    for (std::size_t j = 1; j < breaks.size(); ++j) values.push_back(height());
    return excursion::piecewise_linear(std::move(breaks), std::move(values));
  }
  std::vector<Rational> levels;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) levels.push_back(height());
  auto h = excursion::piecewise_constant(breaks, levels);
  // Occasionally dip a breakpoint value below its neighbours.
  for (std::size_t j = 1; j + 1 < h.point_values.size(); ++j)
    if (draw_below(rng, 4) == 0) h.point_values[j] = ratio(static_cast<long>(draw_below(rng, 2)), 2) * h.point_values[j];
  return h;
}

}  // namespace mmspace
