#include <cmath>
#include <random>

#include "doctest.h"
#include "mhgmm/errors.hpp"
#include "mhgmm/eval.hpp"
#include "support/oracles.hpp"

using namespace mhgmm;

TEST_CASE("ARI reference values") {
  CHECK(ari(std::vector<int>{0, 0, 1, 1}, std::vector<int>{5, 5, 3, 3}) == 1.0);
  CHECK(ari(std::vector<int>{1, 1, 2, 2}, std::vector<int>{1, 2, 1, 2}) == doctest::Approx(-0.5));
  // Single cluster against a real partition scores 0.
  CHECK(ari(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 0, 1, 1}) == 0.0);
  // Both trivial: identical or not.
  CHECK(ari(std::vector<int>{0, 0, 0}, std::vector<int>{4, 4, 4}) == 1.0);
  CHECK(ari(std::vector<int>{0, 1, 2}, std::vector<int>{2, 0, 1}) == 1.0);
  CHECK_THROWS_AS(ari(std::vector<int>{0, 1}, std::vector<int>{0}), DataError);
}

TEST_CASE("ARI equals brute-force pair counting on all partition pairs, n <= 5") {
  for (int n = 1; n <= 5; ++n) {
    const auto parts = oracle::all_partitions(n);
    for (const auto& a : parts)
      for (const auto& b : parts) CHECK(ari(a, b) == oracle::ari_pair_counting(a, b));
  }
}

TEST_CASE("ARI is symmetric, permutation invariant and at most one") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<int> a(30), b(30);
    for (auto& v : a) v = lab(rng);
    for (auto& v : b) v = lab(rng);
    const double v = ari(a, b);
    CHECK(v == doctest::Approx(ari(b, a)).epsilon(1e-15));
    CHECK(v <= 1.0);
    std::vector<int> perm{2, 0, 3, 1};
    std::vector<int> a2(a);
    for (auto& x : a2) x = perm[x] + 10;
    CHECK(ari(a2, b) == doctest::Approx(v).epsilon(1e-15));
  }
}

namespace {

HellingerEstimate unit_gaussian_vs_shift(double mu, int n_mc, std::uint64_t seed) {
  GmmModel m;
  m.d = 1;
  m.config = {1, {0}};
  m.proportions = Eigen::VectorXd::Ones(1);
  m.means = Eigen::MatrixXd::Constant(1, 1, mu);
  m.variances = Eigen::VectorXd::Ones(1);
  return mc_hellinger_sq(
      m,
      [](Rng& rng) {
        Eigen::VectorXd x(1);
        x(0) = std::normal_distribution<double>(0.0, 1.0)(rng);
        return x;
      },
      [](const Eigen::VectorXd& x) { return standard_normal_log_density(x); }, n_mc, seed);
}

}  // namespace

TEST_CASE("Monte-Carlo squared Hellinger against the Gaussian closed form") {
  const auto same = unit_gaussian_vs_shift(0.0, 5000, 1);
  CHECK(same.estimate <= 3.0 * same.std_error + 1e-15);
  const auto one = unit_gaussian_vs_shift(1.0, 20000, 2);
  CHECK(std::abs(one.estimate - (1.0 - std::exp(-1.0 / 8.0))) < 3.0 * one.std_error);
  const auto two = unit_gaussian_vs_shift(2.0, 20000, 3);
  CHECK(two.estimate > one.estimate);
  CHECK(two.estimate >= 0.0);
  CHECK(two.estimate <= 1.0);
  CHECK_THROWS_AS(unit_gaussian_vs_shift(1.0, 50, 1), ConfigError);
}

TEST_CASE("Hellinger standard error shrinks like 1/sqrt(n_mc)") {
  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    small += unit_gaussian_vs_shift(1.0, 1000, s).std_error;
    large += unit_gaussian_vs_shift(1.0, 16000, s + 100).std_error;
  }
  CHECK(small / large == doctest::Approx(4.0).epsilon(0.15));
}
