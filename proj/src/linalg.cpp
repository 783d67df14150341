#include "spa/linalg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spa {

DesignMatrix::DesignMatrix(Matrix x) : x_(std::move(x)) {
  if (x_.rows() < 1 || x_.cols() < 1) {
    throw std::invalid_argument("design matrix must be nonempty");
  }
  if (!x_.allFinite()) {
    throw std::invalid_argument("design matrix has nonfinite entries");
  }
}

Matrix DesignMatrix::columns(const std::vector<std::size_t>& idx) const {
  Matrix sub(x_.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= m()) throw std::out_of_range("column index out of range");
    sub.col(static_cast<Eigen::Index>(k)) =
        x_.col(static_cast<Eigen::Index>(idx[k]));
  }
  return sub;
}

PatternFit solve_pattern_ls(const DesignMatrix& x, const Vector& y,
                            const SparsityPattern& pattern) {
  if (pattern.size() != x.m()) {
    throw std::invalid_argument("pattern length does not match design");
  }
  if (static_cast<std::size_t>(y.size()) != x.n()) {
    throw std::invalid_argument("response length does not match design");
  }
  PatternFit fit;
  fit.theta = Vector::Zero(static_cast<Eigen::Index>(x.m()));
  if (pattern.count() == 0) {
    fit.fitted = Vector::Zero(y.size());
    fit.rank = 0;
    fit.rss_mean = y.squaredNorm() / static_cast<double>(y.size());
    return fit;
  }
  const auto idx = pattern.active();
  const Matrix sub = x.columns(idx);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
  cod.setThreshold(kRankThreshold);
  const Vector theta_sub = cod.solve(y);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    fit.theta[static_cast<Eigen::Index>(idx[k])] =
        theta_sub[static_cast<Eigen::Index>(k)];
  }
  fit.fitted = sub * theta_sub;
  fit.rank = static_cast<std::size_t>(cod.rank());
  fit.rss_mean = (y - fit.fitted).squaredNorm() / static_cast<double>(y.size());
  return fit;
}

double empirical_risk(const Vector& y, const Vector& fitted) {
  if (y.size() != fitted.size()) {
    throw std::invalid_argument("empirical_risk: size mismatch");
  }
  return (y - fitted).squaredNorm() / static_cast<double>(y.size());
}

double unbiased_risk(PatternFit& fit, double sigma, std::size_t n) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  const double s2 = sigma * sigma;
  const double value = fit.rss_mean +
                       2.0 * s2 * static_cast<double>(fit.rank) /
                           static_cast<double>(n) -
                       s2;
  fit.unbiased_risk = value;
  return value;
}

double kl_divergence(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_divergence: size mismatch");
  }
  double sp = 0.0, sq = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (!(p[j] >= 0.0) || !(q[j] >= 0.0)) {
      throw std::invalid_argument("kl_divergence: negative entry");
    }
    sp += p[j];
    sq += q[j];
  }
  if (std::abs(sp - 1.0) > 1e-12 || std::abs(sq - 1.0) > 1e-12) {
    throw std::invalid_argument("kl_divergence: inputs must sum to 1");
  }
  double kl = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    if (q[j] == 0.0) return std::numeric_limits<double>::infinity();
    kl += p[j] * std::log(p[j] / q[j]);
  }
  return kl;
}

}  // namespace spa
