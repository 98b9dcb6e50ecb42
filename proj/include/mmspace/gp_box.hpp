#pragma once

// Gromov's box distance and the Gromov-Prohorov distance of finite mm-spaces.
//
// For finite spaces every pair of parametrizations (phi1, phi2) of [0,1]
// induces a coupling xi of the two weight vectors, and both pullback
// distances are constant on the cells {(phi1, phi2) = (a, b)}. A kept set
// S touching a cell imposes the same constraints as the whole cell, so the
// optimal S is a union of cells, i.e. a correspondence K in the support of
// xi, and
//
//     Box_lambda(xi) = min_K max(dis(K), (1 - xi(K)) / lambda).
//
// Optimizing over xi turns xi(K) into the largest sub-coupling mass on K
// (a max-flow), which gives the finite formula used by box_lambda. The
// derivation is written out in docs/box_reduction.md.
//
// The minimum over K is organized by distortion threshold: for each
// distinct value delta of |d1(a,a') - d2(b,b')| only the maximal cliques of
// the graph "pairs compatible at delta" matter, because the mass term is
// monotone in K. Cliques are enumerated with Bron-Kerbosch and pruned with
// the max-flow of the clique plus all remaining candidates.

#include "mmspace/coupling.hpp"
#include "mmspace/max_flow.hpp"
#include "mmspace/mm_space.hpp"
#include "mmspace/prohorov.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmspace {

using point_pair = std::pair<std::size_t, std::size_t>;

template <class Scalar>
struct basic_correspondence {
  std::vector<point_pair> pairs;  // sorted
  Scalar distortion{0};
  Scalar maxmass{0};
};

using correspondence = basic_correspondence<Rational>;

/// max |d1(a,a') - d2(b,b')| over members of K; 0 when |K| <= 1.
template <class Scalar>
Scalar distortion(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                  const std::vector<point_pair>& pairs) {
  Scalar worst(0);
  for (std::size_t u = 0; u < pairs.size(); ++u)
    for (std::size_t v = u + 1; v < pairs.size(); ++v) {
      Scalar gap = a.d(pairs[u].first, pairs[v].first) - b.d(pairs[u].second, pairs[v].second);
      gap = scalar_traits<Scalar>::abs(gap);
      if (worst < gap) worst = gap;
    }
  return worst;
}

/// Largest sub-coupling of the two weight vectors supported on K.
template <class Scalar>
transport_flow<Scalar> max_submass(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                   const std::vector<point_pair>& pairs) {
  std::vector<std::vector<char>> on(a.size(), std::vector<char>(b.size(), 0));
  for (auto [i, j] : pairs) on.at(i).at(j) = 1;
  return bipartite_max_flow(a.weights, b.weights, [&](std::size_t i, std::size_t j) { return on[i][j] != 0; });
}

template <class Scalar>
basic_correspondence<Scalar> make_correspondence(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                                 std::vector<point_pair> pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (auto [i, j] : pairs)
    if (i >= a.size() || j >= b.size())
      throw domain_error("correspondence: pair (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
  basic_correspondence<Scalar> k;
  k.distortion = distortion(a, b, pairs);
  k.maxmass = max_submass(a, b, pairs).value;
  k.pairs = std::move(pairs);
  return k;
}

struct box_options {
  std::size_t max_pairs = 20;  // exact mode: positive-mass pairs n1*n2
  bool allow_heuristic = true;  // over the cap: upper bound instead of size_error
  std::uint64_t seed = 0;       // local search in heuristic mode
};

template <class Scalar>
struct basic_box_result {
  Scalar value{0};
  basic_correspondence<Scalar> optimal;
  bool exact = true;  // false: value is only an upper bound
};

using box_result = basic_box_result<Rational>;

namespace detail {

using mask_t = std::uint64_t;

template <class Scalar>
struct pair_universe {
  std::vector<point_pair> pairs;
  std::vector<Scalar> thresholds;  // sorted distinct pair distortions, incl. 0
  std::vector<std::vector<Scalar>> gap;  // gap[u][v] = |d1 - d2|

  std::vector<point_pair> unpack(mask_t m) const {
    std::vector<point_pair> out;
    for (; m; m &= m - 1) out.push_back(pairs[static_cast<std::size_t>(__builtin_ctzll(m))]);
    return out;
  }

  mask_t compatible(std::size_t u, const Scalar& delta) const {
    mask_t m = 0;
    for (std::size_t v = 0; v < pairs.size(); ++v)
      if (v != u && !(delta < gap[u][v])) m |= mask_t{1} << v;
    return m;
  }

  Scalar distortion_of(mask_t m) const {
    Scalar worst(0);
    for (mask_t x = m; x; x &= x - 1) {
      std::size_t u = static_cast<std::size_t>(__builtin_ctzll(x));
      for (mask_t y = x & (x - 1); y; y &= y - 1) {
        std::size_t v = static_cast<std::size_t>(__builtin_ctzll(y));
        if (worst < gap[u][v]) worst = gap[u][v];
      }
    }
    return worst;
  }
};

template <class Scalar>
pair_universe<Scalar> make_universe(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                    const std::function<bool(std::size_t, std::size_t)>& usable) {
  pair_universe<Scalar> u;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (usable(i, j)) u.pairs.emplace_back(i, j);
  const std::size_t p = u.pairs.size();
  u.gap.assign(p, std::vector<Scalar>(p, Scalar(0)));
  u.thresholds.push_back(Scalar(0));
  for (std::size_t x = 0; x < p; ++x)
    for (std::size_t y = x + 1; y < p; ++y) {
      Scalar g = a.d(u.pairs[x].first, u.pairs[y].first) - b.d(u.pairs[x].second, u.pairs[y].second);
      g = scalar_traits<Scalar>::abs(g);
      u.gap[x][y] = g;
      u.gap[y][x] = g;
      u.thresholds.push_back(g);
    }
  std::sort(u.thresholds.begin(), u.thresholds.end());
  u.thresholds.erase(std::unique(u.thresholds.begin(), u.thresholds.end()), u.thresholds.end());
  return u;
}

/// Bron-Kerbosch with pivoting over the compatibility graph at one
/// threshold. `visit(R)` is called for each maximal clique; `prune(R|P)`
/// may cut a branch whose best completion cannot help.
template <class Visit, class Prune>
void enumerate_maximal_cliques(const std::vector<mask_t>& adj, mask_t r, mask_t p, mask_t x, Visit& visit,
                               Prune& prune) {
  if (p == 0 && x == 0) {
    visit(r);
    return;
  }
  if (prune(r | p)) return;
  mask_t px = p | x;
  std::size_t pivot = static_cast<std::size_t>(__builtin_ctzll(px));
  int best_cover = -1;
  for (mask_t s = px; s; s &= s - 1) {
    std::size_t u = static_cast<std::size_t>(__builtin_ctzll(s));
    int cover = __builtin_popcountll(p & adj[u]);
    if (cover > best_cover) {
      best_cover = cover;
      pivot = u;
    }
  }
  for (mask_t cand = p & ~adj[pivot]; cand; cand &= cand - 1) {
    std::size_t v = static_cast<std::size_t>(__builtin_ctzll(cand));
    mask_t bit = mask_t{1} << v;
    enumerate_maximal_cliques(adj, r | bit, p & adj[v], x & adj[v], visit, prune);
    p &= ~bit;
    x |= bit;
  }
}

template <class Scalar>
std::vector<mask_t> adjacency(const pair_universe<Scalar>& u, const Scalar& delta) {
  std::vector<mask_t> adj(u.pairs.size());
  for (std::size_t v = 0; v < u.pairs.size(); ++v) adj[v] = u.compatible(v, delta);
  return adj;
}

inline mask_t full_mask(std::size_t p) { return p >= 64 ? ~mask_t{0} : ((mask_t{1} << p) - 1); }

/// min over cliques K of max(dis(K), (1 - mass(K)) / lambda), where mass is
/// monotone under inclusion.
template <class Scalar, class Mass>
std::pair<Scalar, mask_t> minimize_box_objective(const pair_universe<Scalar>& u, const Scalar& lambda, Mass&& mass) {
  const std::size_t p = u.pairs.size();
  const mask_t all = full_mask(p);
  Scalar best(0);
  mask_t best_mask = 0;
  bool have = false;
  auto objective = [&](const Scalar& dis, const Scalar& m) {
    Scalar loss = Scalar(1) - m;
    loss /= lambda;
    return max_of(dis, loss);
  };
  // The empty correspondence: keep nothing, pay 1/lambda.
  {
    best = Scalar(1);
    best /= lambda;
    best_mask = 0;
    have = true;
  }
  auto lex_less = [&](mask_t a, mask_t b) { return u.unpack(a) < u.unpack(b); };

  for (const Scalar& delta : u.thresholds) {
    if (have && !(delta < best)) break;
    auto adj = adjacency(u, delta);
    Scalar best_here_mass(-1);
    bool saturated = false;
    auto prune = [&](mask_t reach) {
      if (saturated) return true;
      Scalar m = mass(reach);
      if (!(best_here_mass < m)) return true;
      Scalar bound = Scalar(1) - m;
      bound /= lambda;
      return !(bound < best);
    };
    auto visit = [&](mask_t clique) {
      Scalar m = mass(clique);
      if (best_here_mass < m) best_here_mass = m;
      Scalar value = objective(u.distortion_of(clique), m);
      if (value < best || (value == best && clique != best_mask && lex_less(clique, best_mask))) {
        best = value;
        best_mask = clique;
      }
      if (!(Scalar(1) - m > Scalar(0))) saturated = true;
    };
    enumerate_maximal_cliques(adj, 0, all, 0, visit, prune);
  }
  return {best, best_mask};
}

/// Every maximal clique at every threshold, with its distortion and mass.
template <class Scalar, class Mass>
std::vector<std::pair<Scalar, mask_t>> all_maximal_cliques(const pair_universe<Scalar>& u, const Scalar& delta,
                                                           Mass&& mass) {
  std::vector<std::pair<Scalar, mask_t>> out;
  auto adj = adjacency(u, delta);
  auto visit = [&](mask_t c) { out.emplace_back(mass(c), c); };
  auto never = [](mask_t) { return false; };
  enumerate_maximal_cliques(adj, 0, full_mask(u.pairs.size()), 0, visit, never);
  return out;
}

template <class Scalar>
auto flow_mass(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b, const pair_universe<Scalar>& u) {
  return [&a, &b, &u](mask_t m) { return max_submass(a, b, u.unpack(m)).value; };
}

template <class Scalar>
void require_positive_lambda(const Scalar& lambda, const char* op) {
  if (!(Scalar(0) < lambda)) throw domain_error(std::string(op) + ": lambda must be positive");
}

/// Upper bound for spaces over the exact cap: greedy removal of the pair
/// with the largest distortion contribution, followed by single-pair
/// add/remove local search.
template <class Scalar>
std::pair<Scalar, std::vector<point_pair>> heuristic_box(const basic_mm_space<Scalar>& a,
                                                         const basic_mm_space<Scalar>& b, const Scalar& lambda,
                                                         std::uint64_t seed) {
  std::vector<point_pair> all;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (Scalar(0) < a.weights[i] && Scalar(0) < b.weights[j]) all.emplace_back(i, j);
  auto value_of = [&](const std::vector<point_pair>& k) {
    Scalar loss = Scalar(1) - max_submass(a, b, k).value;
    loss /= lambda;
    return max_of(distortion(a, b, k), loss);
  };
  std::vector<point_pair> current = all;
  Scalar best_value = value_of(current);
  std::vector<point_pair> best = current;
  while (current.size() > 1) {
    std::size_t worst = 0;
    Scalar worst_gap(-1);
    for (std::size_t u = 0; u < current.size(); ++u) {
      Scalar g(0);
      for (std::size_t v = 0; v < current.size(); ++v) {
        if (u == v) continue;
        Scalar gap = a.d(current[u].first, current[v].first) - b.d(current[u].second, current[v].second);
        g = max_of(g, scalar_traits<Scalar>::abs(gap));
      }
      if (worst_gap < g) {
        worst_gap = g;
        worst = u;
      }
    }
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(worst));
    Scalar v = value_of(current);
    if (v < best_value) {
      best_value = v;
      best = current;
    }
  }
  std::mt19937_64 rng(seed);
  for (bool improved = true; improved;) {
    improved = false;
    std::vector<std::size_t> order(all.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draw_below(rng, i)]);
    for (std::size_t idx : order) {
      std::vector<point_pair> trial = best;
      auto it = std::find(trial.begin(), trial.end(), all[idx]);
      if (it == trial.end()) {
        trial.push_back(all[idx]);
        std::sort(trial.begin(), trial.end());
      } else {
        trial.erase(it);
      }
      Scalar v = value_of(trial);
      if (v < best_value) {
        best_value = v;
        best = std::move(trial);
        improved = true;
      }
    }
  }
  return {best_value, best};
}

}  // namespace detail

/// Gromov's box distance between two finite mm-spaces:
/// min over correspondences K of max(dis(K), (1 - maxmass(K)) / lambda).
template <class Scalar>
basic_box_result<Scalar> box_lambda(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                    const Scalar& lambda, const box_options& opt = {}) {
  require_valid(a, "box_lambda (first space)");
  require_valid(b, "box_lambda (second space)");
  detail::require_positive_lambda(lambda, "box_lambda");

  basic_box_result<Scalar> out;
  if (a.dist == b.dist && a.weights == b.weights) {
    std::vector<point_pair> diag;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (Scalar(0) < a.weights[i]) diag.emplace_back(i, i);
    out.value = Scalar(0);
    out.optimal = make_correspondence(a, b, std::move(diag));
    return out;
  }

  auto usable = [&](std::size_t i, std::size_t j) { return Scalar(0) < a.weights[i] && Scalar(0) < b.weights[j]; };
  std::size_t positive_pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) positive_pairs += usable(i, j) ? 1 : 0;

  if (positive_pairs > opt.max_pairs || positive_pairs > 64) {
    if (!opt.allow_heuristic)
      throw size_error("box_lambda: " + std::to_string(positive_pairs) + " positive-mass pairs exceed the exact cap of " +
                       std::to_string(opt.max_pairs));
    auto [value, pairs] = detail::heuristic_box(a, b, lambda, opt.seed);
    out.value = value;
    out.optimal = make_correspondence(a, b, std::move(pairs));
    out.exact = false;
    return out;
  }

  auto universe = detail::make_universe<Scalar>(a, b, usable);
  auto mass = detail::flow_mass(a, b, universe);
  auto [value, mask] = detail::minimize_box_objective(universe, lambda, mass);
  out.value = value;
  out.optimal = make_correspondence(a, b, universe.unpack(mask));
  out.exact = true;
  return out;
}

/// d_GP = box_{1/2} / 2 = min_K max(dis(K)/2, 1 - maxmass(K)).
template <class Scalar>
basic_box_result<Scalar> gromov_prohorov(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                         const box_options& opt = {}) {
  Scalar half(1);
  half /= Scalar(2);
  auto r = box_lambda(a, b, half, opt);
  r.value /= Scalar(2);
  return r;
}

/// A full coupling realizing maxmass(K) on K (sub-coupling from the
/// max-flow, defects spread as a product).
template <class Scalar>
basic_coupling<Scalar> optimal_coupling(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                        const basic_correspondence<Scalar>& k) {
  auto flow = max_submass(a, b, k.pairs);
  return complete_coupling(make_coupling(std::move(flow.plan)), a.weights, b.weights);
}

// ---------------------------------------------------------------------------
// Parametrizations

/// Measure-preserving step map [0,1] -> X: interval [breaks[k], breaks[k+1])
/// goes to point assignment[k].
struct interval_parametrization {
  std::vector<Rational> breaks;
  std::vector<std::size_t> assignment;
};

template <class Scalar>
std::vector<std::string> validate(const interval_parametrization& p, const basic_mm_space<Scalar>& s) {
  std::vector<std::string> out;
  if (p.breaks.size() != p.assignment.size() + 1) {
    out.push_back("breaks must have one more entry than assignment");
    return out;
  }
  if (p.breaks.front() != 0 || p.breaks.back() != 1) out.push_back("breaks must run from 0 to 1");
  for (std::size_t k = 0; k + 1 < p.breaks.size(); ++k)
    if (!(p.breaks[k] < p.breaks[k + 1])) out.push_back("breaks not strictly increasing at " + std::to_string(k));
  std::vector<Rational> mass(s.size(), Rational(0));
  for (std::size_t k = 0; k < p.assignment.size(); ++k) {
    if (p.assignment[k] >= s.size()) {
      out.push_back("interval " + std::to_string(k) + " maps outside the space");
      continue;
    }
    mass[p.assignment[k]] += p.breaks[k + 1] - p.breaks[k];
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!scalar_traits<Scalar>::equal(scalar_traits<Scalar>::from_rational(mass[i]), s.weights[i]))
      out.push_back("point " + std::to_string(i) + " receives mass " + to_string(mass[i]));
  return out;
}

/// Lays the positive cells of a full coupling consecutively on [0,1]
/// (row-major) and projects to each factor.
inline std::pair<interval_parametrization, interval_parametrization> coupling_to_parametrizations(
    const coupling& xi, const mm_space& a, const mm_space& b) {
  if (auto v = coupling_violations(xi, a.weights, b.weights, true); !v.empty())
    throw domain_error("coupling_to_parametrizations: not a coupling: " + v.front());
  interval_parametrization p1, p2;
  Rational at(0);
  p1.breaks.push_back(at);
  p2.breaks.push_back(at);
  for (std::size_t i = 0; i < xi.rows(); ++i)
    for (std::size_t j = 0; j < xi.cols(); ++j) {
      if (!(xi.matrix[i][j] > 0)) continue;
      at += xi.matrix[i][j];
      p1.breaks.push_back(at);
      p2.breaks.push_back(at);
      p1.assignment.push_back(i);
      p2.assignment.push_back(j);
    }
  return {std::move(p1), std::move(p2)};
}

/// The coupling xi = Leb o (phi1, phi2)^{-1} induced by two parametrizations.
inline coupling induced_coupling(const interval_parametrization& p1, const interval_parametrization& p2,
                                 std::size_t n1, std::size_t n2) {
  std::vector<std::vector<Rational>> m(n1, std::vector<Rational>(n2, Rational(0)));
  std::size_t u = 0, v = 0;
  Rational at(0);
  while (u < p1.assignment.size() && v < p2.assignment.size()) {
    Rational end = min_of(p1.breaks[u + 1], p2.breaks[v + 1]);
    m[p1.assignment[u]][p2.assignment[v]] += end - at;
    at = end;
    if (p1.breaks[u + 1] == end) ++u;
    if (p2.breaks[v + 1] == end) ++v;
  }
  return make_coupling(std::move(m));
}

/// Exact Box_lambda of the pullbacks d1(phi1(s), phi1(t)) and
/// d2(phi2(s), phi2(t)): minimum over unions K of induced cells of
/// max(dis(K), (1 - xi(K)) / lambda).
inline box_result box_of_parametrizations(const interval_parametrization& p1, const interval_parametrization& p2,
                                          const mm_space& a, const mm_space& b, const Rational& lambda,
                                          const box_options& opt = {}) {
  detail::require_positive_lambda(lambda, "box_of_parametrizations");
  if (auto v = validate(p1, a); !v.empty()) throw domain_error("box_of_parametrizations: first: " + v.front());
  if (auto v = validate(p2, b); !v.empty()) throw domain_error("box_of_parametrizations: second: " + v.front());
  coupling xi = induced_coupling(p1, p2, a.size(), b.size());
  auto usable = [&](std::size_t i, std::size_t j) { return xi.matrix[i][j] > 0; };
  auto universe = detail::make_universe<Rational>(a, b, usable);
  box_result out;
  if (universe.pairs.size() > opt.max_pairs || universe.pairs.size() > 64) {
    // Certified upper bound: keep everything, or drop to the heaviest cell.
    std::vector<point_pair> cells = universe.pairs;
    Rational keep_all = distortion(a, b, cells);
    out.value = keep_all;
    out.optimal = make_correspondence(a, b, cells);
    out.optimal.maxmass = 1;
    out.exact = false;
    return out;
  }
  auto mass = [&](detail::mask_t m) {
    Rational s(0);
    for (auto [i, j] : universe.unpack(m)) s += xi.matrix[i][j];
    return s;
  };
  auto [value, mask] = detail::minimize_box_objective(universe, lambda, mass);
  out.value = value;
  out.optimal.pairs = universe.unpack(mask);
  out.optimal.distortion = distortion(a, b, out.optimal.pairs);
  out.optimal.maxmass = mass(mask);
  return out;
}

// ---------------------------------------------------------------------------
// Gluing

/// Metric on the disjoint union: indices [0, n1) are the first space,
/// [n1, n1 + n2) the second.
template <class Scalar>
struct basic_glued_space {
  std::size_t n1 = 0, n2 = 0;
  square_matrix<Scalar> dist;

  const Scalar& cross(std::size_t x, std::size_t y) const { return dist(x, n1 + y); }
};

using glued_space = basic_glued_space<Rational>;

/// Triples (i, j, k) with d(i, k) > d(i, j) + d(j, k).
template <class Scalar>
std::vector<std::array<std::size_t, 3>> check_triangle(const square_matrix<Scalar>& d) {
  std::vector<std::array<std::size_t, 3>> bad;
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        Scalar via = d(i, j) + d(j, k);
        if (!scalar_traits<Scalar>::leq(d(i, k), via)) bad.push_back({i, j, k});
      }
  return bad;
}

template <class Scalar>
std::vector<std::array<std::size_t, 3>> check_triangle(const basic_glued_space<Scalar>& g) {
  return check_triangle(g.dist);
}

template <class Scalar>
basic_glued_space<Scalar> glue_with_cross(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                          const std::vector<std::vector<Scalar>>& w) {
  basic_glued_space<Scalar> g;
  g.n1 = a.size();
  g.n2 = b.size();
  g.dist = square_matrix<Scalar>(g.n1 + g.n2);
  for (std::size_t i = 0; i < g.n1; ++i)
    for (std::size_t j = 0; j < g.n1; ++j) g.dist(i, j) = a.d(i, j);
  for (std::size_t i = 0; i < g.n2; ++i)
    for (std::size_t j = 0; j < g.n2; ++j) g.dist(g.n1 + i, g.n1 + j) = b.d(i, j);
  for (std::size_t x = 0; x < g.n1; ++x)
    for (std::size_t y = 0; y < g.n2; ++y) {
      g.dist(x, g.n1 + y) = w[x][y];
      g.dist(g.n1 + y, x) = w[x][y];
    }
  return g;
}

/// Glues along K: w(x, y) = min over (a, b) in K of d1(x, a) + eps + d2(b, y).
/// Requires K nonempty and dis(K) <= 2 eps, under which the result is a
/// (pseudo)metric; a failed triangle check is reported as a logic_error.
template <class Scalar>
basic_glued_space<Scalar> build_glued_space(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                            const std::vector<point_pair>& k, const Scalar& eps) {
  if (k.empty()) throw domain_error("build_glued_space: correspondence K is empty");
  if (eps < 0) throw domain_error("build_glued_space: eps must be nonnegative");
  for (auto [i, j] : k)
    if (i >= a.size() || j >= b.size()) throw domain_error("build_glued_space: pair out of range");
  Scalar dis = distortion(a, b, k);
  if (Scalar(2) * eps < dis)
    throw domain_error("build_glued_space: distortion " + scalar_traits<Scalar>::str(dis) + " exceeds 2*eps = " +
                       scalar_traits<Scalar>::str(Scalar(2) * eps));
  std::vector<std::vector<Scalar>> w(a.size(), std::vector<Scalar>(b.size()));
  for (std::size_t x = 0; x < a.size(); ++x)
    for (std::size_t y = 0; y < b.size(); ++y) {
      bool first = true;
      for (auto [p, q] : k) {
        Scalar v = a.d(x, p) + eps + b.d(q, y);
        if (first || v < w[x][y]) w[x][y] = v;
        first = false;
      }
    }
  auto g = glue_with_cross(a, b, w);
  if (auto bad = check_triangle(g); !bad.empty())
    throw std::logic_error("build_glued_space: glued metric violates the triangle inequality at (" +
                           std::to_string(bad[0][0]) + "," + std::to_string(bad[0][1]) + "," +
                           std::to_string(bad[0][2]) + ")");
  return g;
}

/// mu1 and mu2 pushed into the glued space.
template <class Scalar>
basic_common_space_measures<Scalar> glued_measures(const basic_glued_space<Scalar>& g,
                                                   const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b) {
  basic_common_space_measures<Scalar> cm;
  cm.dist = g.dist;
  cm.mu.assign(g.n1 + g.n2, Scalar(0));
  cm.nu.assign(g.n1 + g.n2, Scalar(0));
  for (std::size_t i = 0; i < g.n1; ++i) cm.mu[i] = a.weights[i];
  for (std::size_t j = 0; j < g.n2; ++j) cm.nu[g.n1 + j] = b.weights[j];
  return cm;
}

/// Repairs an arbitrary nonnegative cross block into a valid gluing: close
/// it under paths through either block, then add the smallest constant
/// that restores d_i(x, x') <= w(x, y) + w(x', y).
template <class Scalar>
std::vector<std::vector<Scalar>> repair_cross_block(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                                    const std::vector<std::vector<Scalar>>& w) {
  const std::size_t n1 = a.size(), n2 = b.size();
  std::vector<std::vector<Scalar>> c(n1, std::vector<Scalar>(n2));
  for (std::size_t x = 0; x < n1; ++x)
    for (std::size_t y = 0; y < n2; ++y) {
      bool first = true;
      for (std::size_t p = 0; p < n1; ++p)
        for (std::size_t q = 0; q < n2; ++q) {
          Scalar v = a.d(x, p) + w[p][q] + b.d(q, y);
          if (first || v < c[x][y]) c[x][y] = v;
          first = false;
        }
    }
  Scalar raise(0);
  for (std::size_t y = 0; y < n2; ++y)
    for (std::size_t x = 0; x < n1; ++x)
      for (std::size_t x2 = 0; x2 < n1; ++x2) {
        Scalar need = a.d(x, x2) - c[x][y] - c[x2][y];
        need /= Scalar(2);
        raise = max_of(raise, need);
      }
  for (std::size_t x = 0; x < n1; ++x)
    for (std::size_t y = 0; y < n2; ++y)
      for (std::size_t y2 = 0; y2 < n2; ++y2) {
        Scalar need = b.d(y, y2) - c[x][y] - c[x][y2];
        need /= Scalar(2);
        raise = max_of(raise, need);
      }
  for (auto& row : c)
    for (auto& v : row) v += raise;
  return c;
}

struct glue_search {
  bool full = true;                  // all maximal correspondences on the eps grid
  std::size_t random_gluings = 16;   // extra random cross blocks
  std::uint64_t seed = 0;
  std::size_t max_pairs = 20;
};

template <class Scalar>
struct basic_glue_bound {
  Scalar value{1};
  std::vector<point_pair> pairs;  // empty when the best gluing was random
  Scalar eps{0};
  std::size_t gluings_tried = 0;
};

using glue_bound = basic_glue_bound<Rational>;

/// Upper bound on d_GP: the smallest Prohorov distance of mu1, mu2 over the
/// searched gluings. With `full`, every eps in
/// {dis(K)/2} u {1 - maxmass(K)} is combined with every maximal
/// correspondence K satisfying dis(K) <= 2 eps. Prohorov distance is
/// monotone in the metric and the glued metric increases with eps, so a
/// correspondence already glued at a smaller eps is skipped.
template <class Scalar>
basic_glue_bound<Scalar> glued_upper_bound(const basic_mm_space<Scalar>& a, const basic_mm_space<Scalar>& b,
                                           const glue_search& search = {}) {
  require_valid(a, "glued_upper_bound (first space)");
  require_valid(b, "glued_upper_bound (second space)");
  basic_glue_bound<Scalar> out;
  auto consider = [&](const basic_glued_space<Scalar>& g, const std::vector<point_pair>& k, const Scalar& eps) {
    ++out.gluings_tried;
    Scalar v = prohorov_flow(glued_measures(g, a, b));
    if (out.gluings_tried == 1 || v < out.value) {
      out.value = v;
      out.pairs = k;
      out.eps = eps;
    }
  };

  if (search.full) {
    auto usable = [&](std::size_t i, std::size_t j) { return Scalar(0) < a.weights[i] && Scalar(0) < b.weights[j]; };
    auto universe = detail::make_universe<Scalar>(a, b, usable);
    if (universe.pairs.size() > search.max_pairs || universe.pairs.size() > 64)
      throw size_error("glued_upper_bound: " + std::to_string(universe.pairs.size()) +
                       " pairs exceed the full-search cap of " + std::to_string(search.max_pairs));
    auto mass = detail::flow_mass(a, b, universe);

    std::vector<std::vector<std::pair<Scalar, detail::mask_t>>> cliques_at;
    std::vector<Scalar> grid;
    for (const Scalar& delta : universe.thresholds) {
      cliques_at.push_back(detail::all_maximal_cliques(universe, delta, mass));
      Scalar half = delta;
      half /= Scalar(2);
      grid.push_back(half);
      for (const auto& [m, c] : cliques_at.back()) {
        Scalar deficit = Scalar(1) - m;
        grid.push_back(deficit);
      }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<detail::mask_t> glued;
    for (const Scalar& eps : grid) {
      Scalar twice = Scalar(2) * eps;
      std::size_t level = 0;
      bool any = false;
      for (std::size_t t = 0; t < universe.thresholds.size(); ++t)
        if (!(twice < universe.thresholds[t])) {
          level = t;
          any = true;
        }
      if (!any) continue;
      for (const auto& [m, c] : cliques_at[level]) {
        if (c == 0 || std::find(glued.begin(), glued.end(), c) != glued.end()) continue;
        glued.push_back(c);
        auto k = universe.unpack(c);
        consider(build_glued_space(a, b, k, eps), k, eps);
      }
    }
  }

  std::mt19937_64 rng(search.seed);
  Scalar diam(0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) diam = max_of(diam, a.d(i, j));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) diam = max_of(diam, b.d(i, j));
  const std::uint64_t steps = 8;
  for (std::size_t t = 0; t < search.random_gluings; ++t) {
    std::vector<std::vector<Scalar>> w(a.size(), std::vector<Scalar>(b.size()));
    for (auto& row : w)
      for (auto& v : row) {
        v = diam + Scalar(1);
        v *= Scalar(static_cast<long>(draw_below(rng, steps + 1)));
        v /= Scalar(static_cast<long>(steps));
      }
    auto g = glue_with_cross(a, b, repair_cross_block(a, b, w));
    if (!check_triangle(g).empty()) throw std::logic_error("glued_upper_bound: repaired gluing is not a metric");
    consider(g, {}, Scalar(0));
  }
  if (out.gluings_tried == 0) throw domain_error("glued_upper_bound: empty search (no gluings requested)");
  return out;
}

}  // namespace mmspace
