#include "spa/estimators.hpp"

#include <stdexcept>

#include "spa/rng.hpp"

namespace spa {

LinearMapD make_first_difference(std::size_t m) {
  if (m == 0) throw std::invalid_argument("first difference needs m >= 1");
  LinearMapD map;
  map.kind = LinearMapD::Kind::first_difference;
  const Eigen::Index mm = static_cast<Eigen::Index>(m);
  map.d = Matrix::Identity(mm, mm);
  for (Eigen::Index j = 1; j < mm; ++j) map.d(j, j - 1) = -1.0;
  map.d_inv = Matrix::Zero(mm, mm);
  map.d_inv.triangularView<Eigen::Lower>().setOnes();
  return map;
}

LinearMapD make_custom_d(Matrix d) {
  if (d.rows() < 1 || d.rows() != d.cols()) {
    throw std::invalid_argument("custom D must be square and nonempty");
  }
  if (!d.allFinite()) {
    throw std::invalid_argument("custom D has nonfinite entries");
  }
  LinearMapD map;
  map.kind = LinearMapD::Kind::custom;
  Eigen::PartialPivLU<Matrix> lu(d);
  map.d_inv = lu.inverse();
  if (!map.d_inv.allFinite()) {
    throw std::invalid_argument("custom D is not invertible");
  }
  Rng rng(splitmix64(0x9d5f3c1a));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int probe = 0; probe < 16; ++probe) {
    Vector v(d.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    const double resid = (d * (map.d_inv * v) - v).norm();
    if (!(resid <= 1e-8 * (1.0 + v.norm()))) {
      throw std::invalid_argument("custom D failed the invertibility check");
    }
  }
  map.d = std::move(d);
  return map;
}

namespace {

SpaEstimate dispatch(const PatternProblem& problem,
                     const AggregationConfig& config,
                     const AggregationHooks& hooks) {
  if (config.mode == AggregationMode::exact) {
    return aggregate_exact(problem, config, hooks.pattern);
  }
  return mh_run(problem, config, hooks.step);
}

}  // namespace

SpaEstimate fit_coordinatewise(const DesignMatrix& x, const Vector& y,
                               double sigma, const AggregationConfig& config,
                               const AggregationHooks& hooks) {
  const PriorSpec prior = PriorSpec::coordinatewise(x.m());
  PatternProblem problem{&x, &y, sigma, &prior};
  return dispatch(problem, config, hooks);
}

SpaEstimate fit_fused(const DesignMatrix& x, const Vector& y, double sigma,
                      const LinearMapD& d, const AggregationConfig& config,
                      const AggregationHooks& hooks) {
  if (d.m() != x.m()) {
    throw std::invalid_argument("D dimension does not match design width");
  }
  const DesignMatrix xd(x.matrix() * d.d_inv);
  const PriorSpec prior = PriorSpec::coordinatewise(xd.m());
  PatternProblem problem{&xd, &y, sigma, &prior};
  SpaEstimate est = dispatch(problem, config, hooks);
  est.theta = d.d_inv * est.theta;
  return est;
}

SpaEstimate fit_group(const DesignMatrix& x, const Vector& y, double sigma,
                      const GroupStructure& g, const AggregationConfig& config,
                      const AggregationHooks& hooks) {
  const PriorSpec prior = PriorSpec::group(g);
  PatternProblem problem{&x, &y, sigma, &prior};
  return dispatch(problem, config, hooks);
}

}  // namespace spa
