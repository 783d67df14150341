#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spa/estimators.hpp"
#include "spa/rng.hpp"
#include "support/oracles.hpp"

using spa::AggregationConfig;
using spa::AggregationMode;
using spa::DesignMatrix;
using spa::LinearMapD;
using spa::Matrix;
using spa::SparsityPattern;
using spa::Vector;

TEST_SUITE("estimators") {

TEST_CASE("first-difference map worked values") {
  const LinearMapD d = spa::make_first_difference(3);
  Vector theta(3);
  theta << 2.0, 2.0, 2.0;
  const Vector gamma = d.d * theta;
  CHECK(gamma[0] == 2.0);
  CHECK(gamma[1] == 0.0);
  CHECK(gamma[2] == 0.0);

  Vector g2(3);
  g2 << 1.0, 0.0, -2.0;
  const Vector back = d.d_inv * g2;
  CHECK(back[0] == 1.0);
  CHECK(back[1] == 1.0);
  CHECK(back[2] == -1.0);

  const Matrix prod = d.d_inv * d.d;
  CHECK((prod - Matrix::Identity(3, 3)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(d.kind == LinearMapD::Kind::first_difference);
}

TEST_CASE("custom maps are validated") {
  Matrix ok(2, 2);
  ok << 2, 0, 1, 1;
  const LinearMapD d = spa::make_custom_d(ok);
  CHECK((d.d_inv * ok - Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() <=
        1e-12);

  Matrix singular(2, 2);
  singular << 1, 2, 2, 4;
  CHECK_THROWS_AS(spa::make_custom_d(singular), std::invalid_argument);
  CHECK_THROWS_AS(spa::make_custom_d(Matrix::Zero(2, 3)), std::invalid_argument);
  Matrix bad(2, 2);
  bad << 1, 0, 0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(spa::make_custom_d(bad), std::invalid_argument);
}

TEST_CASE("identity D reduces to the coordinatewise path") {
  spa::Rng rng(spa::splitmix64(41));
  const Matrix x = oracles::gaussian_matrix(rng, 20, 5);
  const Vector y = oracles::gaussian_vector(rng, 20);
  const DesignMatrix design(x);
  const double sigma = 0.5;

  const LinearMapD ident = spa::make_custom_d(Matrix::Identity(5, 5));

  AggregationConfig cfg;  // exact
  const auto coord = spa::fit_coordinatewise(design, y, sigma, cfg);
  const auto fused = spa::fit_fused(design, y, sigma, ident, cfg);
  CHECK((coord.theta - fused.theta).lpNorm<Eigen::Infinity>() == 0.0);

  cfg.mode = AggregationMode::mh;
  cfg.t0 = 100;
  cfg.t = 400;
  cfg.seed = 9;
  const auto coord_mh = spa::fit_coordinatewise(design, y, sigma, cfg);
  const auto fused_mh = spa::fit_fused(design, y, sigma, ident, cfg);
  CHECK((coord_mh.theta - fused_mh.theta).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(coord_mh.chain->pattern_size_trace == fused_mh.chain->pattern_size_trace);
}

TEST_CASE("fused fits match the constrained-least-squares oracle") {
  // every gamma pattern: fitted values of the transformed-design fit must
  // solve min |y - X theta| over { theta : (D theta)_j = 0 off pattern }
  spa::Rng rng(spa::splitmix64(42));
  const std::size_t n = 18, m = 8;
  const Matrix x = oracles::gaussian_matrix(rng, static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m));
  Vector theta0 = Vector::Zero(m);
  theta0.head(4).setConstant(1.0);
  Vector y = x * theta0;
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 0.4 * g(rng);

  const LinearMapD d = spa::make_first_difference(m);
  const Matrix xt = x * d.d_inv;

  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<bool> gp(m, false);
    SparsityPattern p(m);
    for (std::size_t j = 0; j < m; ++j) {
      if (mask & (std::size_t{1} << j)) {
        gp[j] = true;
        p.set(j, true);
      }
    }
    const auto fit = spa::solve_pattern_ls(DesignMatrix(xt), y, p);
    const Vector oracle_fitted = oracles::constrained_fused_fitted(x, d.d, y, gp);
    CHECK((fit.fitted - oracle_fitted).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("fused aggregate maps coefficients back through D inverse") {
  spa::Rng rng(spa::splitmix64(43));
  const std::size_t n = 20, m = 6;
  const Matrix x = oracles::gaussian_matrix(rng, static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m));
  Vector theta0(m);
  theta0 << 1, 1, 1, -1, -1, -1;
  Vector y = x * theta0;
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 0.3 * g(rng);
  const double sigma = 0.3;

  const LinearMapD d = spa::make_first_difference(m);
  const auto est = spa::fit_fused(DesignMatrix(x), y, sigma, d, AggregationConfig{});

  // independent recomputation: aggregate on X D^{-1}, then cumulative-sum
  const Matrix xt = x * d.d_inv;
  const auto oracle = oracles::enumerate_aggregate(xt, y, sigma, 4.0 * sigma * sigma);
  const Vector expect = d.d_inv * oracle.theta;
  CHECK((est.theta - expect).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("group estimator concentrates on the active group") {
  spa::Rng rng(spa::splitmix64(44));
  const std::size_t n = 40, m = 9;
  const Matrix x = oracles::gaussian_matrix(rng, static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m));
  const auto g = spa::GroupStructure::contiguous_partition(m, 3);
  Vector theta0 = Vector::Zero(m);
  theta0[3] = 2.0;
  theta0[4] = -2.0;
  theta0[5] = 1.5;  // exactly group 2 of {1,2,3}
  Vector y = x * theta0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 0.3 * gauss(rng);
  const double sigma = 0.3;

  std::vector<std::pair<bool, double>> rows;  // (contains group 2, exponent)
  spa::AggregationHooks hooks;
  hooks.pattern = [&](const spa::PatternRow& row) {
    rows.emplace_back(row.pattern.test(1), row.exponent);
  };
  const auto exact =
      spa::fit_group(DesignMatrix(x), y, sigma, g, AggregationConfig{}, hooks);
  REQUIRE(exact.exact.has_value());
  CHECK(exact.exact->pattern_count == 8);
  CHECK(exact.exact->top_pattern == "010");
  CHECK(exact.exact->top_weight > 0.3);
  double active_mass = 0.0;  // total weight on unions containing group 2
  for (const auto& [active, exponent] : rows) {
    if (active) active_mass += std::exp(exponent - exact.exact->log_normalizer);
  }
  CHECK(active_mass > 0.95);
  // off-group coefficients get almost no weight
  CHECK(std::abs(exact.theta[0]) < 0.05);
  CHECK(std::abs(exact.theta[4] - theta0[4]) < 0.3);

  AggregationConfig cfg;
  cfg.mode = AggregationMode::mh;
  cfg.t0 = 500;
  cfg.t = 4000;
  cfg.seed = 12;
  const auto chain = spa::fit_group(DesignMatrix(x), y, sigma, g, cfg);
  CHECK(chain.chain->final_pattern.test(1));
  CHECK((chain.theta - exact.theta).lpNorm<Eigen::Infinity>() < 0.2);
}

TEST_CASE("group estimator equals a direct two-model computation") {
  spa::Rng rng(spa::splitmix64(45));
  const std::size_t n = 15, m = 4;
  const Matrix x = oracles::gaussian_matrix(rng, static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m));
  const Vector y = oracles::gaussian_vector(rng, static_cast<Eigen::Index>(n));
  const double sigma = 0.6;
  spa::GroupStructure g;
  g.m = m;
  g.groups = {{0, 1, 2, 3}};

  const auto est = spa::fit_group(DesignMatrix(x), y, sigma, g, AggregationConfig{});

  const auto full = oracles::svd_min_norm(x, y);
  const double s2 = sigma * sigma, nn = static_cast<double>(n);
  const double beta = 4.0 * s2;
  const double r0 = y.squaredNorm() / nn - s2;
  const double r1 = full.rss_mean + 2.0 * s2 * static_cast<double>(full.rank) / nn - s2;
  const double a0 = -nn * r0 / beta;
  const double a1 = -nn * r1 / beta - 1.0;  // prior ratio e^{-1}
  const double w1 = 1.0 / (1.0 + std::exp(a0 - a1));
  CHECK((est.theta - w1 * full.theta).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("exact aggregation is invariant to column order") {
  spa::Rng rng(spa::splitmix64(46));
  const std::size_t n = 20, m = 7;
  const Matrix x = oracles::gaussian_matrix(rng, static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m));
  const Vector y = oracles::gaussian_vector(rng, static_cast<Eigen::Index>(n));
  const double sigma = 0.5;

  std::vector<int> perm = {3, 0, 6, 1, 5, 2, 4};
  Matrix xp(x.rows(), x.cols());
  for (std::size_t j = 0; j < m; ++j) xp.col(static_cast<Eigen::Index>(j)) = x.col(perm[j]);

  const auto base = spa::fit_coordinatewise(DesignMatrix(x), y, sigma, AggregationConfig{});
  const auto permuted = spa::fit_coordinatewise(DesignMatrix(xp), y, sigma, AggregationConfig{});
  for (std::size_t j = 0; j < m; ++j) {
    CHECK(std::abs(permuted.theta[static_cast<Eigen::Index>(j)] -
                   base.theta[perm[j]]) <= 1e-10);
  }
  CHECK(base.exact->log_normalizer ==
        doctest::Approx(permuted.exact->log_normalizer).epsilon(1e-12));
}

TEST_CASE("zero response stays at zero") {
  spa::Rng rng(spa::splitmix64(47));
  const Matrix x = oracles::gaussian_matrix(rng, 12, 4);
  const Vector y = Vector::Zero(12);
  const auto est = spa::fit_coordinatewise(DesignMatrix(x), y, 0.5, AggregationConfig{});
  CHECK(est.theta.lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK(est.exact->top_pattern == "0000");
}

TEST_CASE("hooks fire in both modes") {
  spa::Rng rng(spa::splitmix64(48));
  const Matrix x = oracles::gaussian_matrix(rng, 15, 4);
  const Vector y = oracles::gaussian_vector(rng, 15);
  const DesignMatrix design(x);

  std::size_t rows = 0;
  spa::AggregationHooks hooks;
  hooks.pattern = [&](const spa::PatternRow&) { ++rows; };
  spa::fit_coordinatewise(design, y, 0.5, AggregationConfig{}, hooks);
  CHECK(rows == 16);

  AggregationConfig cfg;
  cfg.mode = AggregationMode::mh;
  cfg.t0 = 5;
  cfg.t = 20;
  cfg.seed = 2;
  std::size_t steps = 0;
  spa::AggregationHooks chain_hooks;
  chain_hooks.step = [&](std::size_t, const SparsityPattern&, bool, double) {
    ++steps;
  };
  spa::fit_coordinatewise(design, y, 0.5, cfg, chain_hooks);
  CHECK(steps == 25);
}

TEST_CASE("mismatched D dimension is rejected") {
  spa::Rng rng(spa::splitmix64(49));
  const Matrix x = oracles::gaussian_matrix(rng, 10, 4);
  const Vector y = oracles::gaussian_vector(rng, 10);
  const LinearMapD d = spa::make_first_difference(3);
  CHECK_THROWS_AS(
      spa::fit_fused(DesignMatrix(x), y, 0.5, d, AggregationConfig{}),
      std::invalid_argument);
}

}  // TEST_SUITE
