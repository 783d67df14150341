#pragma once

// Pattern-restricted least squares and the risk functionals built on top of
// it.  A fit for pattern p solves min |y - X theta|_n^2 over theta supported
// on p, picking the minimum-norm solution when the active columns are rank
// deficient.  |.|_n^2 denotes the mean of squares, not the sum.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

#include "spa/pattern.hpp"

namespace spa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative pivot threshold used for all rank decisions.
inline constexpr double kRankThreshold = 1e-10;

struct PatternFit {
  Vector theta;       // length m, zeros off the pattern
  Vector fitted;      // X * theta, length n
  std::size_t rank;   // numerical rank of the active submatrix
  double rss_mean;    // |y - X theta|_n^2
  std::optional<double> unbiased_risk;  // filled by unbiased_risk()
};

// Fixed design with cached column count checks.  Rows are observations.
class DesignMatrix {
 public:
  explicit DesignMatrix(Matrix x);

  std::size_t n() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(x_.cols()); }
  const Matrix& matrix() const { return x_; }
  Matrix columns(const std::vector<std::size_t>& idx) const;

 private:
  Matrix x_;
};

// Minimum-norm least squares restricted to the active columns of `pattern`.
// The empty pattern yields theta = 0 with rank 0.
PatternFit solve_pattern_ls(const DesignMatrix& x, const Vector& y,
                            const SparsityPattern& pattern);

// |y - f|_n^2 for a fitted vector f.
double empirical_risk(const Vector& y, const Vector& fitted);

// Unbiased risk estimate for a pattern fit under noise level sigma > 0:
//   rss_mean + 2 sigma^2 rank / n - sigma^2.
// Stores the value in fit.unbiased_risk and returns it.
double unbiased_risk(PatternFit& fit, double sigma, std::size_t n);

// Kullback-Leibler divergence between probability vectors on the same
// support, with the conventions 0 log 0 = 0 and q_j = 0 < p_j giving +inf.
// Both inputs must sum to 1 within 1e-12 and be componentwise >= 0.
double kl_divergence(const Vector& p, const Vector& q);

}  // namespace spa
