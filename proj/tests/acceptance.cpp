// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "mmspace/harness.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace mmspace;
using oracle::R;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

struct tally {
  std::size_t passed = 0, total = 0;
  void add(bool ok) {
    ++total;
    passed += ok ? 1 : 0;
  }
  bool all() const { return passed == total; }
  std::string str() const { return std::to_string(passed) + "/" + std::to_string(total); }
};

/// Counts instances whose assertions named `name` all hold.
tally count_assertion(const experiment_report& rep, const std::string& name) {
  tally t;
  for (const auto& inst : rep.instances)
    for (const auto& [n, ok] : inst.assertions)
      if (n == name) t.add(ok);
  return t;
}

int failures = 0;

void line(int id, bool ok, const std::string& title, const std::string& detail) {
  std::printf("%s  %2d  %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

void guarded(int id, const std::string& title, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    line(id, false, title, std::string("exception: ") + e.what());
  }
}

mm_space two_point(const Rational& r, const Rational& p) {
  return make_space<Rational>({{Rational(0), r}, {r, Rational(0)}}, {p, Rational(1) - p});
}

}  // namespace

int main() {
  theorem_check_options base;
  base.seed = 42;
  base.count = 200;
  base.n_max = 3;
  base.pinned = false;
  experiment_report theorem;

  guarded(1, "theorem equality on 200 pairs with <= 3 points", [&] {
    auto start = clock_type::now();
    theorem = run_theorem_check(base);
    double secs = seconds_since(start);
    auto eq = count_assertion(theorem, "theorem: d_GP equals the best gluing");
    auto exact = count_assertion(theorem, "box search is exact");
    std::ostringstream d;
    d << eq.str() << " equal, " << exact.str() << " exact, " << secs << " s";
    line(1, eq.all() && exact.all() && eq.total == 200 && secs < 120, "theorem equality on 200 pairs with <= 3 points",
         d.str());
  });

  guarded(2, "corollary chain", [&] {
    theorem_check_options more = base;
    more.seed = 43;
    more.count = 100;
    more.n_max = 4;
    more.glue = false;
    auto rep = run_theorem_check(more);
    auto small = count_assertion(theorem, "corollary: d_GP <= box_1 <= 2 d_GP");
    auto large = count_assertion(rep, "corollary: d_GP <= box_1 <= 2 d_GP");
    auto mono = count_assertion(rep, "box_lambda monotone in lambda");
    auto exact = count_assertion(rep, "box search is exact");
    std::ostringstream d;
    d << small.str() << " (<= 3 points), " << large.str() << " (<= 4 points), monotone " << mono.str();
    line(2, small.all() && large.all() && mono.all() && exact.all() && small.total == 200 && large.total == 100,
         "corollary chain", d.str());
  });

  guarded(3, "closed forms", [&] {
    auto a = point_space<Rational>();
    auto b = two_point(R("1"), R("3/4"));
    Rational gp = gromov_prohorov(a, b).value;
    Rational box = box_lambda(a, b, R("1/2")).value;
    Rational subsets = oracle::box_by_subsets(a, b, R("1/2"));
    Rational glued = glued_upper_bound(a, b).value;
    bool ok = gp == R("1/4") && box == R("1/2") && subsets == R("1/2") && glued == R("1/4");
    line(3, ok, "closed forms",
         "d_GP = " + to_string(gp) + ", box_1/2 = " + to_string(box) + ", subsets " + to_string(subsets) +
             ", gluing " + to_string(glued));
  });

  guarded(4, "Prohorov flow equals brute force", [&] {
    auto start = clock_type::now();
    std::mt19937_64 rng(4242);
    tally t;
    for (std::uint64_t i = 0; i < 500; ++i) {
      auto s = sample_mm_space(detail::mix_seed(4242, i), 6);
      auto cm = measures_on(s, oracle::random_measure(rng, s.size()), oracle::random_measure(rng, s.size()));
      t.add(prohorov_flow(cm) == prohorov_bruteforce(cm));
    }
    double secs = seconds_since(start);
    std::ostringstream d;
    d << t.str() << " equal, " << secs << " s";
    line(4, t.all() && secs < 60, "Prohorov flow equals brute force", d.str());
  });

  guarded(5, "Lipschitz bound", [&] {
    lipschitz_options o;
    o.seed = 42;
    o.count = 100;
    o.pinned = false;
    auto rep = run_lipschitz_check(o);
    auto bound = count_assertion(rep, "Lipschitz: d_GP(code h, code g) <= 2 sup|h - g|");
    auto exact = count_assertion(rep, "box search is exact");
    line(5, bound.all() && exact.all() && bound.total == 100, "Lipschitz bound",
         bound.str() + " within 2 sup|h - g|, " + exact.str() + " exact");
  });

  guarded(6, "four point condition on coded trees", [&] {
    std::mt19937_64 rng(606);
    tally t;
    for (int i = 0; i < 200; ++i) {
      auto kind = i % 2 ? excursion_kind::piecewise_linear : excursion_kind::piecewise_constant;
      auto h = random_excursion(rng, kind, 1 + draw_below(rng, 5));
      t.add(four_point_check(code_excursion(h).space).empty());
    }
    line(6, t.all(), "four point condition on coded trees", t.str() + " trees pass");
  });

  guarded(7, "counterexample table", [&] {
    counterexample_options o;
    o.n_list = {2, 3, 4, 6, 8};
    auto rep = run_counterexample(o);
    bool ok = rep.passed();
    std::string min_positive = rep.summary.contains("min_positive_d_gp")
                                   ? rep.summary["min_positive_d_gp"]["exact"].get<std::string>()
                                   : "?";
    line(7, ok, "counterexample table",
         std::string(ok ? "all assertions hold" : "assertion failed") + ", min positive d_GP = " + min_positive);
  });

  guarded(8, "continuity of the coding", [&] {
    continuity_options value;
    value.seed = 42;
    value.schedule = jitter_kind::value;
    value.k_max = 10;
    auto v = run_continuity_check(tent(), value);
    bool under = true;
    for (std::size_t s = 0; s < v.instances.size(); ++s) {
      Rational gp = parse_rational(v.instances[s].values["d_gp"]["exact"].get<std::string>());
      under = under && gp <= detail::pow2_inverse(static_cast<unsigned>(s));  // 2^(1-k), k = s + 1
    }
    continuity_options shift = value;
    shift.schedule = jitter_kind::breakpoint;
    auto b_tent = run_continuity_check(tent(), shift);
    auto step = excursion::piecewise_constant({R("0"), R("1/4"), R("1/2"), R("3/4"), R("1")},
                                              {R("1"), R("2"), R("1/2"), R("1")});
    auto b_step = run_continuity_check(step, shift);
    bool ok = under && v.passed() && b_tent.passed() && b_step.passed();
    line(8, ok, "continuity of the coding",
         std::string("value jitter ") + (under && v.passed() ? "within 2^(1-k)" : "breach") + ", breakpoint jitter " +
             (b_tent.passed() && b_step.passed() ? "enveloped" : "breach"));
  });

  guarded(9, "metric axioms", [&] {
    std::mt19937_64 rng(909);
    tally pr, gp, ex;
    for (std::uint64_t i = 0; i < 50; ++i) {
      auto s = sample_mm_space(detail::mix_seed(909, i), 5);
      auto p = oracle::random_measure(rng, s.size());
      auto q = oracle::random_measure(rng, s.size());
      auto r = oracle::random_measure(rng, s.size());
      Rational pq = prohorov_flow(measures_on(s, p, q)), qp = prohorov_flow(measures_on(s, q, p));
      Rational qr = prohorov_flow(measures_on(s, q, r)), pr_ = prohorov_flow(measures_on(s, p, r));
      pr.add(pq == qp && prohorov_flow(measures_on(s, p, p)) == 0 && (pq == 0) == (p == q) && pr_ <= pq + qr);
    }
    for (std::uint64_t i = 0; i < 50; ++i) {
      std::uint64_t seed = detail::mix_seed(919, i);
      auto a = sample_mm_space(seed, 3);
      auto b = sample_mm_space(detail::mix_seed(seed, 1), 3);
      auto c = sample_mm_space(detail::mix_seed(seed, 2), 3);
      Rational ab = gromov_prohorov(a, b).value, ba = gromov_prohorov(b, a).value;
      Rational bc = gromov_prohorov(b, c).value, ac = gromov_prohorov(a, c).value;
      gp.add(ab == ba && gromov_prohorov(a, a).value == 0 && (ab == 0) == oracle::isomorphic(a, b) && ac <= ab + bc);
    }
    gamma_options go;
    const double tol = 2 * go.tolerance;
    for (int i = 0; i < 50; ++i) {
      auto a = random_excursion(rng, excursion_kind::piecewise_linear);
      auto b = random_excursion(rng, excursion_kind::piecewise_linear);
      auto c = random_excursion(rng, excursion_kind::piecewise_linear);
      bool lam = d_lambda(a, c) <= d_lambda(a, b) + d_lambda(b, c) && d_lambda(a, b) == d_lambda(b, a);
      auto g = [&](const excursion& x, const excursion& y) { return d_gamma(x, y, go); };
      auto e = [&](const excursion& x, const excursion& y) { return d_excursion(x, y, go); };
      bool gam = g(a, c).lo <= g(a, b).hi + g(b, c).hi + tol && std::abs(g(a, b).midpoint() - g(b, a).midpoint()) <= tol;
      bool exc = e(a, c).lo <= e(a, b).hi + e(b, c).hi + tol;
      ex.add(lam && gam && exc);
    }
    line(9, pr.all() && gp.all() && ex.all(), "metric axioms",
         "Prohorov " + pr.str() + ", d_GP " + gp.str() + ", excursion metrics " + ex.str());
  });

  guarded(10, "determinism", [&] {
    theorem_check_options t;
    t.count = 20;
    auto t1 = io::dump(run_theorem_check(t).to_json());
    t.threads = 3;
    auto t2 = io::dump(run_theorem_check(t).to_json());
    lipschitz_options l;
    l.count = 10;
    auto l1 = io::dump(run_lipschitz_check(l).to_json());
    l.threads = 2;
    auto l2 = io::dump(run_lipschitz_check(l).to_json());
    counterexample_options c;
    c.n_list = {2, 3, 4};
    auto c1 = io::dump(run_counterexample(c).to_json());
    c.threads = 2;
    auto c2 = io::dump(run_counterexample(c).to_json());
    continuity_options k;
    k.k_max = 4;
    auto k1 = io::dump(run_continuity_check(tent(), k).to_json());
    k.threads = 2;
    auto k2 = io::dump(run_continuity_check(tent(), k).to_json());
    int same = (t1 == t2) + (l1 == l2) + (c1 == c2) + (k1 == k2);
    line(10, same == 4, "determinism", std::to_string(same) + "/4 experiments byte-identical across reruns");
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
