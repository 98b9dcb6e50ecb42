#pragma once

// Seeded experiments with machine-readable reports. Every instance derives
// its own seed from (seed, index), so instances can run on any number of
// threads and the report, assembled in instance order, is identical.

#include "mmspace/excursion.hpp"
#include "mmspace/gp_box.hpp"
#include "mmspace/io.hpp"
#include "mmspace/mm_space.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace mmspace {

struct instance_record {
  std::string description;
  io::json values = io::json::object();
  std::vector<std::pair<std::string, bool>> assertions;

  void check(const std::string& name, bool ok) { assertions.emplace_back(name, ok); }
  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const auto& a) { return a.second; });
  }
};

struct experiment_report {
  std::string experiment;
  std::uint64_t seed = 0;
  io::json parameters = io::json::object();
  std::vector<instance_record> instances;
  io::json summary = io::json::object();
  std::vector<std::pair<std::string, bool>> assertions;  // report-level
  std::string csv;

  bool passed() const {
    auto ok = [](const auto& a) { return a.second; };
    return std::all_of(assertions.begin(), assertions.end(), ok) &&
           std::all_of(instances.begin(), instances.end(), [](const auto& i) { return i.passed(); });
  }

  std::size_t failures() const {
    std::size_t f = 0;
    for (const auto& a : assertions) f += a.second ? 0 : 1;
    for (const auto& i : instances)
      for (const auto& a : i.assertions) f += a.second ? 0 : 1;
    return f;
  }

  /// The experiment's own table if it has one, otherwise one row per
  /// instance with its scalar and exact values.
  std::string table_csv() const {
    if (!csv.empty()) return csv;
    std::vector<std::string> keys;
    for (const auto& r : instances)
      for (const auto& [k, v] : r.values.items())
        if ((v.is_primitive() || v.contains("exact")) && std::find(keys.begin(), keys.end(), k) == keys.end())
          keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::ostringstream out;
    out << "index,passed";
    for (const auto& k : keys) out << ',' << k;
    out << '\n';
    for (std::size_t i = 0; i < instances.size(); ++i) {
      out << i << ',' << (instances[i].passed() ? "true" : "false");
      for (const auto& k : keys) {
        out << ',';
        if (!instances[i].values.contains(k)) continue;
        const auto& v = instances[i].values[k];
        if (v.is_string())
          out << v.get<std::string>();
        else if (v.is_primitive())
          out << v.dump();
        else
          out << v["exact"].get<std::string>();
      }
      out << '\n';
    }
    return out.str();
  }

  io::json to_json() const {
    io::json inst = io::json::array();
    io::json totals = io::json::object();
    auto tally = [&](const std::string& name, bool ok) {
      auto& t = totals[name];
      if (t.is_null()) t = {{"passed", 0}, {"failed", 0}};
      t[ok ? "passed" : "failed"] = t[ok ? "passed" : "failed"].get<std::size_t>() + 1;
    };
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& r = instances[i];
      io::json a = io::json::object();
      for (const auto& [name, ok] : r.assertions) {
        a[name] = ok;
        tally(name, ok);
      }
      inst.push_back({{"index", i}, {"description", r.description}, {"values", r.values}, {"assertions", a}});
    }
    io::json top = io::json::object();
    for (const auto& [name, ok] : assertions) {
      top[name] = ok;
      tally(name, ok);
    }
    return {{"experiment", experiment},
            {"seed", seed},
            {"parameters", parameters},
            {"instances", inst},
            {"assertions", top},
            {"summary", summary},
            {"totals", totals},
            {"failures", failures()},
            {"passed", passed()}};
  }
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Runs body(i) for i in [0, count) on up to `threads` workers.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline Rational pow2_inverse(unsigned k) {
  mpz_class den(1);
  den <<= k;
  return Rational(mpz_class(1), den);
}

inline std::string shape(const mm_space& s) { return std::to_string(s.size()) + "-point"; }

}  // namespace detail

// ---------------------------------------------------------------------------

struct theorem_check_options {
  std::uint64_t seed = 42;
  std::size_t count = 200;
  std::size_t n_max = 3;
  bool pinned = true;     // add the point vs (3/4, 1/4) closed form as instance 0
  bool glue = true;       // run the full gluing search (theorem equality)
  std::size_t threads = 1;
};

/// Random pairs: d_GP against the full gluing search, the chain
/// d_GP <= box_1 <= 2 d_GP, and box_lambda monotonicity in lambda.
inline experiment_report run_theorem_check(const theorem_check_options& opt = {}) {
  experiment_report rep;
  rep.experiment = "theorem-check";
  rep.seed = opt.seed;
  rep.parameters = {{"count", opt.count}, {"n_max", opt.n_max}, {"pinned", opt.pinned}, {"glue", opt.glue}};
  const std::size_t offset = opt.pinned ? 1 : 0;
  rep.instances.resize(opt.count + offset);
  const std::vector<Rational> lambdas{Rational(1, 4), Rational(1, 2), Rational(1), Rational(2)};

  auto run_pair = [&](const mm_space& a, const mm_space& b, std::uint64_t seed, instance_record& rec) {
    auto gp = gromov_prohorov(a, b);
    rec.values["d_gp"] = io::value_json(gp.value);
    rec.values["optimal_pairs"] = io::pairs_json(gp.optimal.pairs);
    rec.check("box search is exact", gp.exact);
    std::vector<Rational> box;
    for (const auto& l : lambdas) {
      box.push_back(box_lambda(a, b, l).value);
      rec.values["box_" + to_string(l)] = io::value_json(box.back());
    }
    rec.check("d_GP equals half of box_1/2", gp.value * 2 == box[1]);
    rec.check("corollary: d_GP <= box_1 <= 2 d_GP", gp.value <= box[2] && box[2] <= 2 * gp.value);
    bool monotone = true;
    for (std::size_t hi = 0; hi < lambdas.size(); ++hi)
      for (std::size_t lo = 0; lo < hi; ++lo) {
        // lambda[hi] > lambda[lo]
        Rational scaled = lambdas[hi] / lambdas[lo] * box[hi];
        monotone = monotone && box[hi] <= box[lo] && box[lo] <= scaled;
      }
    rec.check("box_lambda monotone in lambda", monotone);
    if (opt.glue) {
      glue_search search;
      search.seed = seed;
      search.random_gluings = 4;
      auto glued = glued_upper_bound(a, b, search);
      rec.values["glued_upper_bound"] = io::value_json(glued.value);
      rec.values["gluings_tried"] = glued.gluings_tried;
      rec.check("glued bound >= d_GP", gp.value <= glued.value);
      rec.check("theorem: d_GP equals the best gluing", gp.value == glued.value);
    }
  };

  if (opt.pinned) {
    auto& rec = rep.instances[0];
    rec.description = "pinned: 1 point vs {3/4, 1/4} at distance 1";
    auto a = point_space<Rational>();
    auto b = make_space<Rational>({{Rational(0), Rational(1)}, {Rational(1), Rational(0)}},
                                  {Rational(3, 4), Rational(1, 4)});
    run_pair(a, b, detail::mix_seed(opt.seed, 0), rec);
    rec.check("closed form: d_GP = 1/4", gromov_prohorov(a, b).value == Rational(1, 4));
    rec.check("closed form: box_1/2 = 1/2", box_lambda(a, b, Rational(1, 2)).value == Rational(1, 2));
  }
  detail::parallel_for(opt.count, opt.threads, [&](std::size_t i) {
    std::uint64_t s = detail::mix_seed(opt.seed, i + 1);
    auto a = sample_mm_space(s, opt.n_max);
    auto b = sample_mm_space(detail::mix_seed(s, 1), opt.n_max);
    auto& rec = rep.instances[i + offset];
    rec.description = "random pair " + std::to_string(i) + ": " + detail::shape(a) + " vs " + detail::shape(b);
    rec.values["a"] = io::to_json(a);
    rec.values["b"] = io::to_json(b);
    run_pair(a, b, s, rec);
  });
  std::size_t failed = 0;
  for (const auto& r : rep.instances) failed += r.passed() ? 0 : 1;
  rep.summary = {{"instances", rep.instances.size()}, {"instances_failed", failed}};
  return rep;
}

// ---------------------------------------------------------------------------

struct lipschitz_options {
  std::uint64_t seed = 42;
  std::size_t count = 100;
  std::size_t max_pairs = 64;  // exact box cap; larger draws are redrawn
  bool pinned = true;          // g = h and the tent vs 9/10 tent
  std::size_t threads = 1;
};

namespace detail {

/// Shared-breakpoint PL pair: h random on the 1/8 grid, g with every
/// height moved by a multiple of 1/8 in [-1/4, 1/4] (kept nonnegative).
inline std::pair<excursion, excursion> lipschitz_pair(std::mt19937_64& rng) {
  std::size_t interior = 1 + draw_below(rng, 3);
  excursion h = random_excursion(rng, excursion_kind::piecewise_linear, interior, 8, 5, 4);
  std::vector<Rational> values = h.point_values;
  for (std::size_t j = 1; j < values.size(); ++j) {
    values[j] += ratio(static_cast<long>(draw_below(rng, 5)) - 2, 8);
    if (values[j] < 0) values[j] = 0;
  }
  return {h, excursion::piecewise_linear(h.breakpoints, values)};
}

inline void lipschitz_instance(const excursion& h, const excursion& g, std::size_t max_pairs, instance_record& rec) {
  auto [ch, cg] = code_excursion_pair(h, g);
  box_options bo;
  bo.max_pairs = max_pairs;
  auto gp = gromov_prohorov(ch.space, cg.space, bo);
  Rational sup = sup_distance(h, g);
  rec.values["h"] = io::to_json(h);
  rec.values["g"] = io::to_json(g);
  rec.values["tree_sizes"] = io::json::array({ch.space.size(), cg.space.size()});
  rec.values["d_gp"] = io::value_json(gp.value);
  rec.values["sup_distance"] = io::value_json(sup);
  if (sgn(sup) > 0) rec.values["ratio"] = io::value_json(Rational(gp.value / sup));
  rec.check("box search is exact", gp.exact);
  rec.check("Lipschitz: d_GP(code h, code g) <= 2 sup|h - g|", gp.value <= 2 * sup);
}

}  // namespace detail

/// d_GP of the coded trees against 2 sup|h - g| on random PL pairs that
/// share their breakpoints, coded on a common partition.
inline experiment_report run_lipschitz_check(const lipschitz_options& opt = {}) {
  experiment_report rep;
  rep.experiment = "lipschitz";
  rep.seed = opt.seed;
  rep.parameters = {{"count", opt.count}, {"max_pairs", opt.max_pairs}, {"pinned", opt.pinned}};
  const std::size_t offset = opt.pinned ? 2 : 0;
  rep.instances.resize(opt.count + offset);
  if (opt.pinned) {
    rep.instances[0].description = "pinned: g = h (tent)";
    detail::lipschitz_instance(tent(), tent(), opt.max_pairs, rep.instances[0]);
    rep.instances[0].check("identical excursions give 0", rep.instances[0].values["d_gp"]["exact"] == "0");
    rep.instances[1].description = "pinned: tent vs tent scaled by 9/10";
    detail::lipschitz_instance(tent(), tent(Rational(9, 10)), opt.max_pairs, rep.instances[1]);
  }
  std::vector<std::size_t> redraws(opt.count, 0);
  detail::parallel_for(opt.count, opt.threads, [&](std::size_t i) {
    std::mt19937_64 rng(detail::mix_seed(opt.seed, i));
    for (;;) {
      auto [h, g] = detail::lipschitz_pair(rng);
      auto [ch, cg] = code_excursion_pair(h, g);
      if (ch.space.size() * cg.space.size() > opt.max_pairs) {
        ++redraws[i];
        continue;
      }
      auto& rec = rep.instances[i + offset];
      rec.description = "random PL pair " + std::to_string(i);
      detail::lipschitz_instance(h, g, opt.max_pairs, rec);
      rec.values["redraws"] = redraws[i];
      break;
    }
  });
  std::vector<double> ratios;
  for (const auto& r : rep.instances)
    if (r.values.contains("ratio")) ratios.push_back(parse_rational(r.values["ratio"]["exact"].get<std::string>()).get_d());
  std::sort(ratios.begin(), ratios.end());
  io::json dist = io::json::object();
  if (!ratios.empty()) {
    auto q = [&](double p) { return ratios[static_cast<std::size_t>(p * static_cast<double>(ratios.size() - 1))]; };
    dist = {{"min", ratios.front()}, {"median", q(0.5)}, {"p90", q(0.9)}, {"max", ratios.back()}};
  }
  std::size_t total_redraws = 0;
  for (auto r : redraws) total_redraws += r;
  std::size_t failed = 0;
  for (const auto& r : rep.instances) failed += r.passed() ? 0 : 1;
  rep.summary = {{"instances", rep.instances.size()},
                 {"instances_failed", failed},
                 {"ratio_d_gp_over_sup", dist},
                 {"redraws_over_cap", total_redraws}};
  return rep;
}

// ---------------------------------------------------------------------------

struct counterexample_options {
  std::vector<std::size_t> n_list{2, 3, 4, 6, 8};
  std::size_t max_pairs = 64;
  std::size_t threads = 1;
};

/// The grid indicators h_n: a table of d_E(h_n, h_m) and d_GP of their
/// coded trees (uniform n-point stars).
inline experiment_report run_counterexample(const counterexample_options& opt = {}) {
  experiment_report rep;
  rep.experiment = "counterexample";
  rep.parameters = {{"n_list", opt.n_list}, {"max_pairs", opt.max_pairs}};
  std::vector<std::size_t> ns = opt.n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.empty() || ns.front() == 0) throw domain_error("run_counterexample: n_list must hold positive integers");

  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (std::size_t j = i; j < ns.size(); ++j) cells.emplace_back(ns[i], ns[j]);
  rep.instances.resize(cells.size());
  std::vector<Rational> d_e(cells.size()), d_gp(cells.size()), d_g(cells.size()), d_l(cells.size());
  box_options bo;
  bo.max_pairs = opt.max_pairs;

  detail::parallel_for(cells.size(), opt.threads, [&](std::size_t c) {
    auto [n, m] = cells[c];
    auto& rec = rep.instances[c];
    rec.description = "h_" + std::to_string(n) + " vs h_" + std::to_string(m);
    excursion hn = grid_indicator(n), hm = grid_indicator(m);
    auto gamma = d_gamma(hn, hm);
    d_l[c] = d_lambda(hn, hm);
    rec.check("d_Gamma exact for step functions", gamma.exact.has_value());
    d_g[c] = gamma.exact.value_or(Rational(gamma.hi));
    d_e[c] = d_g[c] + d_l[c];
    auto gp = gromov_prohorov(code_excursion(hn).space, code_excursion(hm).space, bo);
    d_gp[c] = gp.value;
    rec.values["n"] = n;
    rec.values["m"] = m;
    rec.values["d_lambda"] = io::value_json(d_l[c]);
    rec.values["d_gamma"] = io::value_json(d_g[c]);
    rec.values["d_excursion"] = io::value_json(d_e[c]);
    rec.values["d_gp"] = io::value_json(d_gp[c]);
    rec.check("box search is exact", gp.exact);
    rec.check("d_lambda(h_n, h_m) = 0", sgn(d_l[c]) == 0);
    Rational expected = Rational(1) - ratio(static_cast<long>(n), static_cast<long>(m));
    rec.check("d_GP of the stars = 1 - n/m", d_gp[c] == expected);
  });

  // Per-n checks against the zero excursion and the unit step.
  io::json per_n = io::json::array();
  bool gamma_zero_ok = true, step_ok = true;
  for (std::size_t n : ns) {
    auto g0 = d_gamma(grid_indicator(n), zero_excursion());
    Rational want(1, static_cast<long>(2 * n));
    bool ok = g0.exact && *g0.exact == want;
    gamma_zero_ok = gamma_zero_ok && ok;
    Rational to_step = d_lambda(grid_indicator(n), unit_step());
    step_ok = step_ok && sgn(to_step) == 0;
    per_n.push_back({{"n", n},
                     {"d_gamma_to_zero", io::value_json(g0.exact.value_or(Rational(g0.hi)))},
                     {"d_lambda_to_unit_step", io::value_json(to_step)}});
  }
  rep.assertions.emplace_back("d_Gamma(h_n, 0) = 1/(2n)", gamma_zero_ok);
  rep.assertions.emplace_back("d_lambda(h_n, unit step) = 0", step_ok);

  std::optional<Rational> min_positive;
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (cells[c].first != cells[c].second && sgn(d_gp[c]) > 0)
      if (!min_positive || d_gp[c] < *min_positive) min_positive = d_gp[c];
  bool bounded_below = min_positive.has_value();
  bool small_far_out = true;
  bool diagonal_zero = true;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto [n, m] = cells[c];
    if (n == m) {
      diagonal_zero = diagonal_zero && sgn(d_e[c]) == 0 && sgn(d_gp[c]) == 0;
      continue;
    }
    bounded_below = bounded_below && !(d_gp[c] < *min_positive);
    if (n >= 6 && m >= 6) small_far_out = small_far_out && d_e[c] < Rational(1, 5);
  }
  // Consecutive entries of the list: d_E(h_{n_i}, h_{n_{i+1}}) must not grow.
  bool shrinking = true;
  io::json consecutive = io::json::array();
  std::optional<Rational> previous;
  for (std::size_t i = 0; i + 1 < ns.size(); ++i)
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c] == std::make_pair(ns[i], ns[i + 1])) {
        consecutive.push_back(io::value_json(d_e[c]));
        if (previous && *previous < d_e[c]) shrinking = false;
        previous = d_e[c];
      }
  rep.assertions.emplace_back("n = m gives zero in both columns", diagonal_zero);
  rep.assertions.emplace_back("d_E(h_n, h_m) < 1/5 for n, m >= 6", small_far_out);
  rep.assertions.emplace_back("d_E along consecutive n does not increase", shrinking);
  rep.assertions.emplace_back("d_GP bounded below by the smallest positive value", bounded_below);

  std::ostringstream csv;
  csv << "n,m,d_lambda,d_gamma,d_excursion,d_gp,d_excursion_decimal,d_gp_decimal\n";
  for (std::size_t c = 0; c < cells.size(); ++c)
    csv << cells[c].first << ',' << cells[c].second << ',' << to_string(d_l[c]) << ',' << to_string(d_g[c]) << ','
        << to_string(d_e[c]) << ',' << to_string(d_gp[c]) << ',' << to_decimal(d_e[c], 6) << ','
        << to_decimal(d_gp[c], 6) << '\n';
  rep.csv = csv.str();
  rep.summary = {{"per_n", per_n},
                 {"consecutive_d_excursion", consecutive},
                 {"min_positive_d_gp", min_positive ? io::value_json(*min_positive) : io::json(nullptr)}};
  return rep;
}

// ---------------------------------------------------------------------------

enum class jitter_kind { none, value, breakpoint };

struct continuity_options {
  std::uint64_t seed = 42;
  jitter_kind schedule = jitter_kind::value;
  unsigned k_min = 1, k_max = 10;
  long mesh = 4;          // resolution points j / mesh for piecewise-linear h
  double gamma_tol = 1e-9;
  std::size_t max_pairs = 64;
  std::size_t threads = 1;
};

namespace detail {

/// g_k for value jitter: every height of h at its breakpoints (and every
/// piece level when h is piecewise constant) moves by amp * u with
/// u in {-1, -1/2, 0, 1/2, 1}, clamped at 0.
inline std::pair<excursion, Rational> value_jitter(const excursion& h, const Rational& amp, std::mt19937_64& rng) {
  auto step = [&] {
    Rational u = ratio(static_cast<long>(draw_below(rng, 5)) - 2, 2);
    return Rational(amp * u);
  };
  if (h.kind == excursion_kind::piecewise_linear) {
    std::vector<Rational> values{Rational(0)};
    for (std::size_t j = 1; j < h.breakpoints.size(); ++j)
      values.push_back(max_of(Rational(h.point_values[j] + step()), Rational(0)));
    return {excursion::piecewise_linear(h.breakpoints, values), amp};
  }
  std::vector<Rational> levels = h.piece_start;
  for (auto& l : levels) l = max_of(Rational(l + step()), Rational(0));
  std::vector<Rational> at = h.point_values;
  for (std::size_t j = 1; j < at.size(); ++j) {
    Rational v = max_of(Rational(at[j] + step()), Rational(0));
    v = min_of(v, levels[j - 1]);
    if (j < levels.size()) v = min_of(v, levels[j]);
    at[j] = v;
  }
  return {excursion::piecewise_constant(h.breakpoints, levels, at), amp};
}

/// g_k for breakpoint jitter: every interior breakpoint moves by
/// +-scale * (smallest gap / 4), scale in {1/2, 1}; values are kept.
/// Returns the total displacement.
inline std::pair<excursion, Rational> breakpoint_jitter(const excursion& h, const Rational& scale,
                                                        std::mt19937_64& rng) {
  Rational gap(1);
  for (std::size_t j = 0; j + 1 < h.breakpoints.size(); ++j) gap = min_of(gap, Rational(h.breakpoints[j + 1] - h.breakpoints[j]));
  excursion g = h;
  Rational moved(0);
  for (std::size_t j = 1; j + 1 < g.breakpoints.size(); ++j) {
    Rational s = gap / 4 * scale * ratio(1 + static_cast<long>(draw_below(rng, 2)), 2);
    if (draw_below(rng, 2) == 0) s = -s;
    g.breakpoints[j] += s;
    moved += abs(s);
  }
  return {g, moved};
}

}  // namespace detail

/// Perturbation sequence g_k (k = k_min..k_max) with d_E(h, g_k) -> 0 and
/// an envelope for d_GP(code h, code g_k) that tends to 0:
///  * none: g_k = h, envelope 0;
///  * value jitter of size 2^-k: 2 sup|h - g_k| <= 2^(1-k);
///  * breakpoint jitter, piecewise-constant h: total displacement (the
///    pullbacks agree off the displaced intervals);
///  * breakpoint jitter, piecewise-linear h: 2 sup|h - g_k|.
inline experiment_report run_continuity_check(const excursion& h, const continuity_options& opt = {}) {
  require_valid(h, "run_continuity_check");
  experiment_report rep;
  rep.experiment = "continuity";
  rep.seed = opt.seed;
  const char* schedule_name = opt.schedule == jitter_kind::none    ? "none"
                              : opt.schedule == jitter_kind::value ? "value"
                                                                   : "breakpoint";
  rep.parameters = {{"schedule", schedule_name},
                    {"k_min", opt.k_min},
                    {"k_max", opt.k_max},
                    {"mesh", opt.mesh},
                    {"gamma_tol", opt.gamma_tol},
                    {"h", io::to_json(h)}};
  if (opt.k_max < opt.k_min) throw domain_error("run_continuity_check: k_max < k_min");
  const std::size_t steps = opt.k_max - opt.k_min + 1;
  rep.instances.resize(steps);
  std::vector<Rational> gp(steps), envelope(steps);
  std::vector<Rational> resolution;
  if (h.kind == excursion_kind::piecewise_linear)
    for (long j = 1; j < opt.mesh; ++j) resolution.push_back(ratio(j, opt.mesh));
  box_options bo;
  bo.max_pairs = opt.max_pairs;
  gamma_options go;
  go.tolerance = opt.gamma_tol;

  detail::parallel_for(steps, opt.threads, [&](std::size_t s) {
    unsigned k = opt.k_min + static_cast<unsigned>(s);
    std::mt19937_64 rng(detail::mix_seed(opt.seed, k));
    Rational size = detail::pow2_inverse(k);
    auto& rec = rep.instances[s];
    rec.description = "k = " + std::to_string(k);
    excursion g;
    Rational bound;
    if (opt.schedule == jitter_kind::none) {
      g = h;
      bound = 0;
    } else if (opt.schedule == jitter_kind::value) {
      auto [gk, amp] = detail::value_jitter(h, size, rng);
      g = gk;
      bound = 2 * sup_distance(h, g);
      rec.check("2 sup|h - g_k| <= 2^(1-k)", bound <= 2 * amp);
    } else {
      auto [gk, moved] = detail::breakpoint_jitter(h, size, rng);
      g = gk;
      bound = h.kind == excursion_kind::piecewise_constant ? moved : Rational(2 * sup_distance(h, g));
      rec.values["displacement"] = io::value_json(moved);
    }
    auto [ch, cg] = code_excursion_pair(h, g, resolution);
    auto r = gromov_prohorov(ch.space, cg.space, bo);
    auto de = d_excursion(h, g, go);
    gp[s] = r.value;
    envelope[s] = bound;
    rec.values["k"] = k;
    rec.values["g"] = io::to_json(g);
    rec.values["d_gp"] = io::value_json(r.value);
    rec.values["envelope"] = io::value_json(bound);
    rec.values["sup_distance"] = io::value_json(sup_distance(h, g));
    rec.values["d_lambda"] = io::value_json(d_lambda(h, g));
    rec.values["d_excursion"] = de.exact ? io::value_json(*de.exact)
                                         : io::json{{"lo", de.lo}, {"hi", de.hi}, {"converged", de.converged}};
    rec.values["tree_sizes"] = io::json::array({ch.space.size(), cg.space.size()});
    rec.check("box search is exact", r.exact);
    rec.check("d_GP(code h, code g_k) <= envelope", r.value <= bound);
  });

  // Running envelope e_k = max_{j >= k} d_GP_j is nonincreasing; it must
  // stay under the largest remaining schedule bound.
  io::json running = io::json::array();
  bool under = true;
  Rational e(0), b(0);
  std::vector<Rational> e_k(steps), b_k(steps);
  for (std::size_t s = steps; s-- > 0;) {
    e = max_of(e, gp[s]);
    b = max_of(b, envelope[s]);
    e_k[s] = e;
    b_k[s] = b;
    under = under && e <= b;
  }
  for (std::size_t s = 0; s < steps; ++s) running.push_back(io::value_json(e_k[s]));
  rep.assertions.emplace_back("running max of d_GP stays under the running max envelope", under);
  // Envelope <= C * 2^-k with C fixed by the schedule: 2 for value jitter,
  // (interior breakpoints) * gap / 4 for displaced steps, and
  // 2 * Lip(h) * gap / 4 for displaced PL breakpoints (|h - g| <= Lip * shift).
  Rational gap(1), lip(0);
  for (std::size_t j = 0; j + 1 < h.breakpoints.size(); ++j) {
    Rational w = h.breakpoints[j + 1] - h.breakpoints[j];
    gap = min_of(gap, w);
    lip = max_of(lip, Rational(abs(h.piece_end[j] - h.piece_start[j]) / w));
  }
  Rational c(2);
  if (opt.schedule == jitter_kind::breakpoint) {
    Rational interior(static_cast<long>(h.breakpoints.size() - 2));
    c = h.kind == excursion_kind::piecewise_constant ? Rational(interior * gap / 4) : Rational(2 * lip * gap / 4);
  }
  bool scaled = true;
  for (std::size_t s = 0; s < steps; ++s)
    scaled = scaled && envelope[s] <= c * detail::pow2_inverse(opt.k_min + static_cast<unsigned>(s));
  rep.assertions.emplace_back("envelope <= C 2^-k", scaled);
  rep.parameters["envelope_constant"] = io::value_json(c);
  rep.summary = {{"running_max_d_gp", running}};
  return rep;
}

}  // namespace mmspace
