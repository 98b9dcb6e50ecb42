#include "mmspace/prohorov.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mmspace;
using oracle::R;

namespace {

common_space_measures two_points(const char* r, std::vector<Rational> mu, std::vector<Rational> nu) {
  auto s = make_space<Rational>({{R("0"), R(r)}, {R(r), R("0")}}, {R("1/2"), R("1/2")});
  return measures_on(s, std::move(mu), std::move(nu));
}

common_space_measures random_instance(std::mt19937_64& rng, std::uint64_t seed, std::size_t n_max) {
  auto s = sample_mm_space(seed, n_max);
  return measures_on(s, oracle::random_measure(rng, s.size()), oracle::random_measure(rng, s.size()));
}

}  // namespace

TEST(Prohorov, EqualMeasuresGiveZero) {
  auto cm = two_points("1", {R("1/3"), R("2/3")}, {R("1/3"), R("2/3")});
  EXPECT_EQ(prohorov_bruteforce(cm), Rational(0));
  EXPECT_EQ(prohorov_flow(cm), Rational(0));
}

TEST(Prohorov, DiracsAtDistanceOne) {
  auto cm = two_points("1", {R("1"), R("0")}, {R("0"), R("1")});
  EXPECT_EQ(prohorov_bruteforce(cm), Rational(1));
  EXPECT_EQ(prohorov_flow(cm), Rational(1));
}

TEST(Prohorov, NinetyTenAgainstDirac) {
  auto cm = two_points("1", {R("0.9"), R("0.1")}, {R("1"), R("0")});
  EXPECT_EQ(prohorov_bruteforce(cm), R("1/10"));
  EXPECT_EQ(prohorov_flow(cm), R("1/10"));
}

TEST(Prohorov, DiracsAtSmallDistance) {
  // distance 1/4 < 1: moving all the mass costs only the distance
  auto cm = two_points("1/4", {R("1"), R("0")}, {R("0"), R("1")});
  EXPECT_EQ(prohorov_flow(cm), R("1/4"));
}

TEST(Prohorov, BruteforceOverCapIsSizeError) {
  auto s = uniform_simplex<Rational>(5, R("1"));
  auto cm = measures_on(s, s.weights, s.weights);
  prohorov_options o;
  o.bruteforce_cap = 4;
  EXPECT_THROW(prohorov_bruteforce(cm, o), size_error);
}

TEST(Prohorov, RejectsInvalidMeasures) {
  auto cm = two_points("1", {R("1/2"), R("1/4")}, {R("1"), R("0")});
  EXPECT_THROW(prohorov_flow(cm), domain_error);
  auto short_mu = two_points("1", {R("1")}, {R("1"), R("0")});
  EXPECT_THROW(prohorov_bruteforce(short_mu), domain_error);
}

TEST(Prohorov, FlowEqualsBruteforceOnRandomInstances) {
  std::mt19937_64 rng(2024);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto cm = random_instance(rng, seed, 6);
    ASSERT_EQ(prohorov_flow(cm), prohorov_bruteforce(cm)) << "seed " << seed;
  }
}

TEST(Prohorov, MatchesSetDefinitionOnEpsGrid) {
  // The infimum d: the open-enlargement condition fails below d and holds above.
  std::mt19937_64 rng(7);
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto cm = random_instance(rng, seed, 5);
    Rational d = prohorov_flow(cm);
    for (long k = 1; k <= 40; ++k) {
      Rational eps = ratio(k, 32);
      if (eps == d) continue;
      EXPECT_EQ(oracle::prohorov_condition(cm, eps), d < eps) << "seed " << seed << " eps " << to_string(eps);
    }
    Rational tiny = ratio(1, 1000);
    EXPECT_TRUE(oracle::prohorov_condition(cm, d + tiny)) << "seed " << seed;
    if (d > tiny) {
      EXPECT_FALSE(oracle::prohorov_condition(cm, d - tiny)) << "seed " << seed;
    }
  }
}

TEST(Prohorov, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto s = sample_mm_space(seed, 5);
    auto p = oracle::random_measure(rng, s.size());
    auto q = oracle::random_measure(rng, s.size());
    auto r = oracle::random_measure(rng, s.size());
    Rational pq = prohorov_flow(measures_on(s, p, q));
    Rational qp = prohorov_flow(measures_on(s, q, p));
    Rational qr = prohorov_flow(measures_on(s, q, r));
    Rational pr = prohorov_flow(measures_on(s, p, r));
    EXPECT_EQ(pq, qp);
    EXPECT_EQ(prohorov_flow(measures_on(s, p, p)), Rational(0));
    EXPECT_EQ(pq == 0, p == q);
    EXPECT_LE(pr, pq + qr) << "seed " << seed;
  }
}

TEST(Prohorov, UpperBounds) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto cm = random_instance(rng, seed, 6);
    Rational d = prohorov_flow(cm);
    EXPECT_LE(d, Rational(1));
    EXPECT_LE(d, total_variation(cm.mu, cm.nu));
    Rational reach(0);
    for (std::size_t i = 0; i < cm.size(); ++i)
      for (std::size_t j = 0; j < cm.size(); ++j)
        if (cm.mu[i] > 0 && cm.nu[j] > 0 && reach < cm.dist(i, j)) reach = cm.dist(i, j);
    EXPECT_LE(d, reach);
  }
}

TEST(Prohorov, CouplingWitnessIsGood) {
  // At any eps above the distance there is a coupling with mass <= eps on d >= eps.
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto cm = random_instance(rng, seed, 5);
    Rational eps = prohorov_flow(cm) + ratio(1, 64);
    auto xi = prohorov_coupling(cm, eps);
    EXPECT_TRUE(coupling_violations(xi, cm.mu, cm.nu, true).empty());
    EXPECT_LE(mass_at_least(xi, cm.dist, eps), eps) << "seed " << seed;
  }
}

TEST(Prohorov, UnchangedByRefiningTheSpace) {
  // Adding a null point far away changes neither the value nor the candidate set's infimum.
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto cm = random_instance(rng, seed, 4);
    const std::size_t n = cm.size();
    common_space_measures big;
    big.dist = square_matrix<Rational>(n + 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) big.dist(i, j) = cm.dist(i, j);
    for (std::size_t i = 0; i < n; ++i) big.dist(i, n) = big.dist(n, i) = R("5");
    big.mu = cm.mu;
    big.nu = cm.nu;
    big.mu.push_back(Rational(0));
    big.nu.push_back(Rational(0));
    EXPECT_EQ(prohorov_flow(big), prohorov_flow(cm));
    EXPECT_EQ(prohorov_bruteforce(big), prohorov_bruteforce(cm));
  }
}

TEST(Prohorov, FloatModeAgrees) {
  std::mt19937_64 rng(13);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto cm = random_instance(rng, seed, 5);
    basic_common_space_measures<double> f;
    f.dist = square_matrix<double>(cm.size());
    for (std::size_t i = 0; i < cm.size(); ++i) {
      for (std::size_t j = 0; j < cm.size(); ++j) f.dist(i, j) = cm.dist(i, j).get_d();
      f.mu.push_back(cm.mu[i].get_d());
      f.nu.push_back(cm.nu[i].get_d());
    }
    EXPECT_NEAR(prohorov_flow(f), prohorov_flow(cm).get_d(), 1e-9);
  }
}
