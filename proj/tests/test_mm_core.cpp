#include "mmspace/mm_space.hpp"
#include "mmspace/polynomial.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mmspace;
using oracle::R;

namespace {

mm_space two_point(const char* r, const char* p, const char* q) {
  return make_space<Rational>({{R("0"), R(r)}, {R(r), R("0")}}, {R(p), R(q)});
}

std::vector<test_function> family() {
  return {test_function::constant(R("3/2")),
          test_function::truncated_entry(0, 1, R("10")),
          test_function::truncated_entry(0, 1, R("1/2")),
          test_function::truncated_monomial({{0, 1}, {1, 2}}, R("3")),
          test_function::truncated_max(R("5/4")),
          test_function::smoothed_indicator(0, 2, R("1"), R("1/2"))};
}

}  // namespace

TEST(Rational, ParsesFractionsIntegersAndDecimalsExactly) {
  EXPECT_EQ(parse_rational("3/6"), ratio(1, 2));
  EXPECT_EQ(parse_rational(" -7 "), Rational(-7));
  EXPECT_EQ(parse_rational("0.1"), ratio(1, 10));
  EXPECT_EQ(parse_rational("1.25e-1"), ratio(1, 8));
  EXPECT_EQ(parse_rational("2E2"), Rational(200));
  EXPECT_THROW(parse_rational("1/0"), parse_error);
  EXPECT_THROW(parse_rational("abc"), parse_error);
  EXPECT_THROW(parse_rational(""), parse_error);
}

TEST(Rational, DecimalRoundsHalfToEven) {
  EXPECT_EQ(to_decimal(ratio(1, 8), 2), "0.12");
  EXPECT_EQ(to_decimal(ratio(3, 8), 2), "0.38");
  EXPECT_EQ(to_decimal(ratio(-1, 3), 3), "-0.333");
  EXPECT_EQ(to_decimal(Rational(2), 1), "2.0");
  EXPECT_EQ(to_string(ratio(4, 6)), "2/3");
  EXPECT_EQ(to_string(Rational(5)), "5");
}

TEST(Validate, AcceptsOnePointSpace) { EXPECT_TRUE(validate(point_space<Rational>()).empty()); }

TEST(Validate, ReportsTriangleViolationWithIndices) {
  auto s = make_space<Rational>({{R("0"), R("1"), R("3")}, {R("1"), R("0"), R("1")}, {R("3"), R("1"), R("0")}},
                                {R("1/3"), R("1/3"), R("1/3")});
  auto v = validate(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].axiom, "triangle");
  EXPECT_EQ(v[0].indices, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Validate, ReportsMassNotOne) {
  auto v = validate(two_point("1", "0.5", "0.6"));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].axiom, "mass = 1");
}

TEST(Validate, DimensionMismatchIsAViolation) {
  mm_space s = two_point("1", "1/2", "1/2");
  s.weights.push_back(Rational(0));
  auto v = validate(s);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].axiom, "dimension");
}

TEST(Validate, AsymmetryAndDiagonal) {
  auto s = make_space<Rational>({{R("1"), R("1")}, {R("2"), R("0")}}, {R("1/2"), R("1/2")});
  auto v = validate(s);
  std::vector<std::string> axioms;
  for (const auto& x : v) axioms.push_back(x.axiom);
  EXPECT_NE(std::find(axioms.begin(), axioms.end(), "zero diagonal"), axioms.end());
  EXPECT_NE(std::find(axioms.begin(), axioms.end(), "symmetry"), axioms.end());
}

TEST(Canonicalize, MergesPointsAtDistanceZero) {
  auto c = canonicalize(two_point("0", "0.3", "0.7"));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.weights[0], Rational(1));
}

TEST(Canonicalize, RestrictsToSupport) {
  auto s = make_space<Rational>({{R("0"), R("1"), R("2")}, {R("1"), R("0"), R("1")}, {R("2"), R("1"), R("0")}},
                                {R("1/2"), R("1/2"), R("0")});
  auto c = canonicalize(s);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.d(0, 1), Rational(1));
}

TEST(Canonicalize, IsIdempotent) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto s = sample_mm_space(seed, 5);
    EXPECT_EQ(canonicalize(s), s);
    EXPECT_EQ(canonicalize(canonicalize(s)), canonicalize(s));
  }
}

TEST(Sample, OnePointWhenCapIsOne) {
  auto s = sample_mm_space(0, 1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.weights[0], Rational(1));
}

TEST(Sample, IsDeterministic) { EXPECT_EQ(sample_mm_space(99, 6), sample_mm_space(99, 6)); }

TEST(Sample, Seed7PassesValidation) { EXPECT_TRUE(validate(sample_mm_space(7, 4)).empty()); }

TEST(Sample, ThousandSeedsAreValidAndCanonical) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto s = sample_mm_space(seed, 6);
    ASSERT_TRUE(validate(s).empty()) << "seed " << seed;
    ASSERT_TRUE(is_canonical(s)) << "seed " << seed;
    ASSERT_LE(s.size(), 6u);
  }
}

TEST(Polynomial, TwoPointTruncatedEntry) {
  // 4 tuples, weight 1/4 each; r_12 = 1 on the two off-diagonal tuples.
  auto s = two_point("1", "1/2", "1/2");
  EXPECT_EQ(evaluate_polynomial(s, 2, test_function::truncated_entry(0, 1, R("10"))), R("1/2"));
}

TEST(Polynomial, ConstantOrderOne) {
  auto s = sample_mm_space(3, 4);
  EXPECT_EQ(evaluate_polynomial(s, 1, test_function::constant(R("7/3"))), R("7/3"));
}

TEST(Polynomial, OnePointMaxEntryIsZero) {
  for (std::size_t n = 1; n <= 4; ++n)
    EXPECT_EQ(evaluate_polynomial(point_space<Rational>(), n, test_function::truncated_max(R("9"))), Rational(0));
}

TEST(Polynomial, RejectsOrderZeroAndEntriesBeyondOrder) {
  auto s = point_space<Rational>();
  EXPECT_THROW(evaluate_polynomial(s, 0, test_function::constant(R("1"))), domain_error);
  EXPECT_THROW(evaluate_polynomial(s, 1, test_function::truncated_entry(0, 1, R("1"))), domain_error);
}

TEST(Polynomial, SizeCapSuggestsMonteCarlo) {
  auto s = uniform_simplex<Rational>(10, R("1"));
  polynomial_options o;
  o.max_terms = 1000;
  try {
    evaluate_polynomial(s, 4, test_function::constant(R("1")), o);
    FAIL() << "expected size_error";
  } catch (const size_error& e) {
    EXPECT_NE(std::string(e.what()).find("Monte Carlo"), std::string::npos);
  }
}

TEST(Polynomial, InvariantUnderCanonicalization) {
  // Split a point into two copies at distance 0 and add a null point.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = sample_mm_space(seed, 3);
    const std::size_t n = s.size();
    std::vector<std::vector<Rational>> rows(n + 2, std::vector<Rational>(n + 2));
    auto src = [&](std::size_t i) { return i < n ? i : (i == n ? 0 : n - 1); };
    for (std::size_t i = 0; i < n + 2; ++i)
      for (std::size_t j = 0; j < n + 2; ++j) rows[i][j] = i == j ? Rational(0) : s.d(src(i), src(j));
    if (n == 1) rows[n + 1][0] = rows[0][n + 1] = rows[n + 1][n] = rows[n][n + 1] = R("1");
    std::vector<Rational> w = s.weights;
    w[0] /= 2;
    w.push_back(w[0]);
    w.push_back(Rational(0));
    auto big = make_space<Rational>(rows, w);
    ASSERT_TRUE(validate(big).empty());
    for (const auto& phi : family())
      for (std::size_t order = std::max<std::size_t>(1, phi.min_order()); order <= 3; ++order)
        EXPECT_EQ(evaluate_polynomial(big, order, phi), evaluate_polynomial(canonicalize(big), order, phi))
            << "seed " << seed << " order " << order;
  }
}

TEST(Polynomial, BoundedByTestFunctionBound) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = sample_mm_space(seed, 4);
    for (const auto& phi : family()) {
      std::size_t order = std::max<std::size_t>(3, phi.min_order());
      Rational v = evaluate_polynomial(s, order, phi);
      EXPECT_LE(abs(v), phi.bound());
    }
  }
}

TEST(Polynomial, MonteCarloAgreesWithinThreeStandardErrors) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto s = sample_mm_space(seed + 11, 5);
    auto phi = test_function::truncated_entry(0, 1, R("3/2"));
    double exact = evaluate_polynomial(s, 2, phi).get_d();
    auto mc = evaluate_polynomial_mc(s, 2, phi, 100000, seed);
    EXPECT_LE(std::abs(mc.mean - exact), 3 * mc.standard_error + 1e-12) << "seed " << seed;
  }
}

TEST(FloatMode, ConversionKeepsValidity) {
  auto s = sample_mm_space(5, 5);
  auto f = to_float(s);
  EXPECT_TRUE(validate(f).empty());
  EXPECT_NEAR(evaluate_polynomial(f, 2, test_function::truncated_max(R("2"))),
                   evaluate_polynomial(s, 2, test_function::truncated_max(R("2"))).get_d(), 1e-12);
}

TEST(FloatMode, MergesBelowTolerance) {
  auto s = make_space<double>({{0.0, 1e-14}, {1e-14, 0.0}}, {0.5, 0.5});
  EXPECT_EQ(canonicalize(s).size(), 1u);
  EXPECT_EQ(canonicalize(s, 1e-16).size(), 2u);
}
