#include "assay/metrics.hpp"

#include <boost/math/distributions/beta.hpp>
#include <doctest.h>

#include <cmath>
#include <vector>

using namespace assay;

namespace {

// P(theta_A - theta_B < -eps) by Simpson's rule on the density of A.
double rope_lower_quadrature(double a1, double b1, double a2, double b2, double eps) {
  boost::math::beta_distribution<> A(a1, b1);
  boost::math::beta_distribution<> B(a2, b2);
  const int n = 20000;
  const double h = 1.0 / n;
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double upper = x + eps >= 1.0 ? 0.0 : boost::math::cdf(boost::math::complement(B, x + eps));
    const double density = (i == 0 || i == n) ? 0.0 : boost::math::pdf(A, x);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    total += w * density * upper;
  }
  return total * h / 3.0;
}

BetaPosterior point_mass(double theta) {
  const double n = 1e9;
  return BetaPosterior{theta * n, (1.0 - theta) * n, 0, 0};
}

}  // namespace

TEST_CASE("exact ECE") {
  VectorXd p(2), theta(2), s(2);
  p << 0.5, 0.5;
  theta << 0.6, 0.9;
  s << 0.7, 0.7;
  CHECK(ece_exact(p, theta, s) == doctest::Approx(0.15).epsilon(1e-15));
  VectorXd shorter(1);
  shorter << 1.0;
  CHECK_THROWS_AS(ece_exact(shorter, theta, s), std::invalid_argument);
}

TEST_CASE("posterior ECE under a flat belief") {
  // E|theta - 0.5| for theta ~ U(0,1) is 0.25.
  std::vector<BetaPosterior> bins{BetaPosterior{}};
  VectorXd w = VectorXd::Ones(1);
  VectorXd s = VectorXd::Constant(1, 0.5);
  Rng rng = make_rng(1);
  const auto e = ece_posterior(bins, w, s, 100000, rng);
  CHECK(std::abs(e.summary.mean - 0.25) < 0.003);
  CHECK(e.summary.ci_low < e.summary.mean);
}

TEST_CASE("posterior ECE under point masses matches the exact value") {
  Rng rng = make_rng(2);
  for (int t = 0; t < 20; ++t) {
    const int B = 10;
    VectorXd w(B), theta(B), s(B);
    std::vector<BetaPosterior> bins;
    for (int b = 0; b < B; ++b) {
      w[b] = uniform01(rng) + 0.01;
      theta[b] = 0.05 + 0.9 * uniform01(rng);
      s[b] = (b + 0.5) / B;
      bins.push_back(point_mass(theta[b]));
    }
    w /= w.sum();
    const auto e = ece_posterior(bins, w, s, 2000, rng);
    CHECK(std::abs(e.summary.mean - ece_exact(w, theta, s)) < 1e-3);
  }
}

TEST_CASE("classwise ECE uses the class cells") {
  GroupIndex idx;
  idx.spec = {PartitionKind::class_and_bin, 2, {}};
  idx.members = {{0, 1, 2}, {3}, {4}, {}};
  idx.mean_confidence.resize(4);
  idx.mean_confidence << 0.3, 0.8, 0.4, 0.0;
  const auto cb = class_bins(idx, 0);
  CHECK(cb.weights[0] == doctest::Approx(0.75));
  CHECK(cb.confidence[1] == doctest::Approx(0.8));
  std::vector<BetaPosterior> cells{point_mass(0.5), point_mass(0.6), point_mass(0.9), BetaPosterior{}};
  Rng rng = make_rng(3);
  const auto e0 = groupwise_ece_posterior(idx, cells, 0, 500, rng);
  CHECK(std::abs(e0.summary.mean - (0.75 * 0.2 + 0.25 * 0.2)) < 1e-3);
  const auto e1 = groupwise_ece_posterior(idx, cells, 1, 500, rng);
  CHECK(std::abs(e1.summary.mean - 0.5) < 1e-3);
  CHECK_THROWS_AS(groupwise_ece_posterior(idx, std::span(cells).first(3), 1, 10, rng), std::invalid_argument);
}

TEST_CASE("expected cost") {
  VectorXd c(3), theta(3);
  c << 0.0, 1.0, 5.0;
  theta << 0.5, 0.3, 0.18;
  CHECK(expected_cost(c, theta) == doctest::Approx(1.2));

  CostMatrix costs = CostMatrix::zero_one(3);
  DirichletPosterior post(VectorXd::Constant(3, 1e9));
  Rng rng = make_rng(4);
  const auto draws = expected_cost_posterior(post, costs, 1, 100, rng);
  for (double d : draws) CHECK(std::abs(d - 2.0 / 3.0) < 1e-3);
}

TEST_CASE("ROPE anchor against quadrature") {
  const BetaPosterior a{1, 1, 279, 481};
  const BetaPosterior b{1, 1, 350, 511};
  const double oracle = rope_lower_quadrature(a.a(), a.b(), b.a(), b.b(), 0.05);
  CHECK(oracle == doctest::Approx(0.9632).epsilon(5e-3));
  Rng rng = make_rng(5);
  const auto r = rope_compare(a, b, 0.05, 10000, rng);
  CHECK(std::abs(r.mu[0] - 0.96) <= 0.02);
  CHECK(std::abs(r.mu[0] - oracle) < 4 * std::sqrt(oracle * (1 - oracle) / 10000));
  CHECK(r.eta == 0);
  CHECK(r.lambda == r.mu[0]);
  CHECK(r.mu[0] + r.mu[1] + r.mu[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("ROPE is antisymmetric in its arguments") {
  Rng rng = make_rng(6);
  for (int t = 0; t < 20; ++t) {
    const BetaPosterior a{1.0 + 20 * uniform01(rng), 1.0 + 20 * uniform01(rng), 0, 0};
    const BetaPosterior b{1.0 + 20 * uniform01(rng), 1.0 + 20 * uniform01(rng), 0, 0};
    Rng r1 = make_rng(100 + t);
    Rng r2 = make_rng(200 + t);
    const auto ab = rope_compare(a, b, 0.05, 20000, r1);
    const auto ba = rope_compare(b, a, 0.05, 20000, r2);
    CHECK(std::abs(ab.mu[0] - ba.mu[2]) < 0.025);
    CHECK(std::abs(ab.mu[1] - ba.mu[1]) < 0.025);
  }
  CHECK(rope_region({0.3, 0.3, 0.3}) == 0);
  CHECK(rope_region({0.2, 0.4, 0.4}) == 1);
  Rng rng2 = make_rng(0);
  CHECK_THROWS_AS(rope_compare({}, {}, 0.0, 10, rng2), std::invalid_argument);
}

TEST_CASE("rank distribution") {
  SUBCASE("exchangeable pair") {
    std::vector<BetaPosterior> posts(2);
    Rng rng = make_rng(7);
    const auto r = rank_distribution(posts, 20000, rng, Direction::min);
    CHECK(std::abs(r.extreme_probability[0] - 0.5) < 0.015);
    CHECK(r.mean_rank[0] == doctest::Approx(1.5).epsilon(0.02));
  }
  SUBCASE("extreme probabilities sum to one") {
    std::vector<BetaPosterior> posts{{2, 5, 0, 0}, {5, 2, 0, 0}, {3, 3, 1, 4}, {1, 1, 0, 0}};
    Rng rng = make_rng(8);
    for (auto dir : {Direction::min, Direction::max}) {
      const auto r = rank_distribution(posts, 5000, rng, dir);
      CHECK(r.extreme_probability.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(r.mean_rank.sum() == doctest::Approx(10.0).epsilon(1e-12));
      for (int g = 0; g < 4; ++g) CHECK(r.rank_low[g] <= r.rank_high[g]);
    }
    const auto lo = rank_distribution(posts, 5000, rng, Direction::min);
    CHECK(lo.extreme_probability[0] > lo.extreme_probability[1]);
  }
  SUBCASE("ties break by index") {
    VectorXd v(4);
    v << 0.2, 0.1, 0.2, 0.1;
    CHECK(rank_values(v, Direction::min) == std::vector<int>{3, 1, 4, 2});
    CHECK(rank_values(v, Direction::max) == std::vector<int>{1, 3, 2, 4});
  }
}

TEST_CASE("overconfident bins sit below the diagonal") {
  std::vector<BetaPosterior> bins{{1, 1, 30, 100}, {1, 1, 40, 100}};
  VectorXd w(2), s(2);
  w << 0.5, 0.5;
  s << 0.75, 0.95;
  Rng rng = make_rng(9);
  const auto d = reliability_diagram(bins, w, s, 0.95, 2000, rng);
  REQUIRE(d.bins.size() == 2);
  for (const auto& b : d.bins) CHECK(b.accuracy.ci_high < b.confidence);
  CHECK(d.ece.summary.mean > 0.4);
}

TEST_CASE("Monte Carlo error shrinks with the sample count") {
  const std::vector<BetaPosterior> bins{{3, 4, 0, 0}};
  const VectorXd w = VectorXd::Ones(1);
  const VectorXd s = VectorXd::Constant(1, 0.4);
  auto spread = [&](int n) {
    std::vector<double> means;
    for (int rep = 0; rep < 60; ++rep) {
      Rng rng = make_rng(1000 + rep);
      means.push_back(ece_posterior(bins, w, s, n, rng).summary.mean);
    }
    double m = 0.0;
    for (double x : means) m += x;
    m /= means.size();
    double v = 0.0;
    for (double x : means) v += (x - m) * (x - m);
    return std::sqrt(v / (means.size() - 1));
  };
  const double ratio = spread(400) / spread(6400);
  // sd scales as n^-1/2: the expected ratio is 4
  CHECK(ratio > 2.5);
  CHECK(ratio < 6.0);
}

TEST_CASE("sample quantiles interpolate") {
  CHECK(sample_quantile({3, 1, 2, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(sample_quantile({5}, 0.9) == 5.0);
  CHECK_THROWS(sample_quantile({}, 0.5));
}
