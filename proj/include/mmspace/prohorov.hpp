#pragma once

// Prohorov distance between two probability vectors on one finite metric
// space, by two independent routes:
//
//  * the set definition, enumerating all subsets A and the enlargements
//    A^eps = {x : d(A, x) < eps};
//  * the coupling characterization, via max-flow on the bipartite graph of
//    pairs closer than eps.
//
// Both sides are step functions of eps that only change just after a
// distance value r_k: for eps in (r_k, r_{k+1}] the open enlargement is the
// closed r_k-neighbourhood. The infimum over each such interval is therefore
// max(r_k, gap_k), and the distance is the minimum of these over k. The
// returned value is the exact infimum; the defining condition may fail at
// it (e.g. for two point masses at distance 1 the value is 1, while the
// condition needs eps > 1).

#include "mmspace/coupling.hpp"
#include "mmspace/max_flow.hpp"
#include "mmspace/mm_space.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace mmspace {

template <class Scalar>
struct basic_common_space_measures {
  square_matrix<Scalar> dist;
  std::vector<Scalar> mu;
  std::vector<Scalar> nu;

  std::size_t size() const { return mu.size(); }
};

using common_space_measures = basic_common_space_measures<Rational>;

template <class Scalar>
basic_common_space_measures<Scalar> measures_on(const basic_mm_space<Scalar>& space, std::vector<Scalar> mu,
                                                std::vector<Scalar> nu) {
  return {space.dist, std::move(mu), std::move(nu)};
}

template <class Scalar>
std::vector<std::string> validate(const basic_common_space_measures<Scalar>& cm, double tol = 1e-12) {
  std::vector<std::string> out;
  if (cm.mu.size() != cm.dist.size() || cm.nu.size() != cm.dist.size()) {
    out.push_back("measure length does not match the " + std::to_string(cm.dist.size()) + "-point space");
    return out;
  }
  basic_mm_space<Scalar> probe;
  probe.dist = cm.dist;
  for (const char* which : {"mu", "nu"}) {
    probe.weights = std::string(which) == "mu" ? cm.mu : cm.nu;
    for (const auto& v : validate(probe, tol)) out.push_back(std::string(which) + ": " + v.describe());
  }
  return out;
}

/// Sorted distinct entries of a distance matrix, always starting at 0.
template <class Scalar>
std::vector<Scalar> distance_levels(const square_matrix<Scalar>& d) {
  std::vector<Scalar> levels{Scalar(0)};
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) levels.push_back(d(i, j));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

struct prohorov_options {
  std::size_t bruteforce_cap = 12;  // 2^n subsets
};

namespace detail {

/// min_k max(r_k, max_A (from(A) - to(closed r_k-neighbourhood of A))).
template <class Scalar>
Scalar directed_set_prohorov(const basic_common_space_measures<Scalar>& cm, const std::vector<Scalar>& from,
                             const std::vector<Scalar>& to, const std::vector<Scalar>& levels) {
  const std::size_t n = cm.size();
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::vector<std::uint64_t> ball(n);
  std::vector<std::uint64_t> hood(subsets);
  std::vector<Scalar> from_mass(subsets, Scalar(0));
  for (std::uint64_t a = 1; a < subsets; ++a) {
    std::size_t low = static_cast<std::size_t>(__builtin_ctzll(a));
    from_mass[a] = from_mass[a & (a - 1)] + from[low];
  }

  Scalar best(0);
  bool have = false;
  for (const Scalar& r : levels) {
    if (have && !(r < best)) break;
    for (std::size_t x = 0; x < n; ++x) {
      ball[x] = 0;
      for (std::size_t y = 0; y < n; ++y)
        if (!(r < cm.dist(x, y))) ball[x] |= std::uint64_t{1} << y;
    }
    Scalar gap(0);
    hood[0] = 0;
    for (std::uint64_t a = 1; a < subsets; ++a) {
      std::size_t low = static_cast<std::size_t>(__builtin_ctzll(a));
      hood[a] = hood[a & (a - 1)] | ball[low];
      Scalar covered(0);
      for (std::uint64_t rest = hood[a]; rest; rest &= rest - 1)
        covered += to[static_cast<std::size_t>(__builtin_ctzll(rest))];
      Scalar g = from_mass[a] - covered;
      if (gap < g) gap = g;
    }
    Scalar value = max_of(r, gap);
    if (!have || value < best) best = value;
    have = true;
  }
  return best;
}

}  // namespace detail

/// Prohorov distance from the set definition, enumerating all 2^n subsets
/// in both directions. Exponential; guarded by `bruteforce_cap`.
template <class Scalar>
Scalar prohorov_bruteforce(const basic_common_space_measures<Scalar>& cm, const prohorov_options& opt = {}) {
  if (auto v = validate(cm); !v.empty()) throw domain_error("prohorov_bruteforce: " + v.front());
  if (cm.size() > opt.bruteforce_cap || cm.size() > 62)
    throw size_error("prohorov_bruteforce: " + std::to_string(cm.size()) + " points exceed the subset cap of " +
                     std::to_string(opt.bruteforce_cap));
  const auto levels = distance_levels(cm.dist);
  Scalar forward = detail::directed_set_prohorov(cm, cm.mu, cm.nu, levels);
  Scalar backward = detail::directed_set_prohorov(cm, cm.nu, cm.mu, levels);
  return max_of(forward, backward);
}

/// Largest sub-coupling mass of (mu, nu) on pairs with d(x, y) <= radius.
template <class Scalar>
transport_flow<Scalar> mass_within(const basic_common_space_measures<Scalar>& cm, const Scalar& radius) {
  return bipartite_max_flow(cm.mu, cm.nu, [&](std::size_t i, std::size_t j) { return !(radius < cm.dist(i, j)); });
}

/// Prohorov distance from the coupling characterization:
/// min_k max(r_k, 1 - maxflow on pairs with d <= r_k).
template <class Scalar>
Scalar prohorov_flow(const basic_common_space_measures<Scalar>& cm) {
  if (auto v = validate(cm); !v.empty()) throw domain_error("prohorov_flow: " + v.front());
  Scalar best(1);
  for (const Scalar& r : distance_levels(cm.dist)) {
    if (!(r < best)) break;
    Scalar deficit = Scalar(1) - mass_within(cm, r).value;
    Scalar value = max_of(r, deficit);
    if (value < best) best = value;
  }
  return best;
}

/// A full coupling that places the largest possible mass on pairs with
/// d < eps (strict, as in the coupling characterization).
template <class Scalar>
basic_coupling<Scalar> prohorov_coupling(const basic_common_space_measures<Scalar>& cm, const Scalar& eps) {
  auto flow = bipartite_max_flow(cm.mu, cm.nu, [&](std::size_t i, std::size_t j) { return cm.dist(i, j) < eps; });
  return complete_coupling(make_coupling(std::move(flow.plan)), cm.mu, cm.nu);
}

/// Mass the coupling puts on pairs at distance >= eps.
template <class Scalar>
Scalar mass_at_least(const basic_coupling<Scalar>& c, const square_matrix<Scalar>& dist, const Scalar& eps) {
  Scalar m(0);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j)
      if (!(dist(i, j) < eps)) m += c.matrix[i][j];
  return m;
}

/// Total variation distance, max_A |mu(A) - nu(A)|.
template <class Scalar>
Scalar total_variation(const std::vector<Scalar>& mu, const std::vector<Scalar>& nu) {
  Scalar s(0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    Scalar diff = mu[i] - nu[i];
    if (diff > 0) s += diff;
  }
  return s;
}

}  // namespace mmspace
