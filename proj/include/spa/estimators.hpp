#pragma once

// User-facing estimators.  Each one sets up the pattern space, the prior,
// and the chain-space design, then dispatches to exact enumeration or the
// chain sampler according to the config.

#include "spa/aggregate.hpp"
#include "spa/mh.hpp"

namespace spa {

// An invertible reparameterization theta -> D theta whose image is where
// sparsity is imposed.
struct LinearMapD {
  enum class Kind { first_difference, custom };
  Kind kind = Kind::custom;
  Matrix d;
  Matrix d_inv;

  std::size_t m() const { return static_cast<std::size_t>(d.rows()); }
};

// D with +1 on the diagonal and -1 on the subdiagonal, so (D theta)_1 =
// theta_1 and (D theta)_j = theta_j - theta_{j-1}; the inverse is the
// lower-triangular all-ones (cumulative sum) matrix.
LinearMapD make_first_difference(std::size_t m);

// Wraps a user-supplied square D.  Invertibility is checked by a
// round-trip residual <= 1e-8 on 16 seeded probe vectors.
LinearMapD make_custom_d(Matrix d);

// Optional instrumentation shared by the frontends.
struct AggregationHooks {
  StepObserver step;        // chain mode: called once per iteration
  PatternVisitor pattern;   // exact mode: called once per enumerated pattern
};

// Aggregation over coordinatewise sparsity patterns of the columns.
SpaEstimate fit_coordinatewise(const DesignMatrix& x, const Vector& y,
                               double sigma, const AggregationConfig& config,
                               const AggregationHooks& hooks = {});

// Sparsity imposed on D theta: aggregation runs coordinatewise on the
// transformed design X D^{-1} and the result is mapped back through
// D^{-1}.  Chain diagnostics and visitor rows live in the transformed
// pattern space.
SpaEstimate fit_fused(const DesignMatrix& x, const Vector& y, double sigma,
                      const LinearMapD& d, const AggregationConfig& config,
                      const AggregationHooks& hooks = {});

// Aggregation over unions of the given groups; the chain walks index sets
// over the K groups.
SpaEstimate fit_group(const DesignMatrix& x, const Vector& y, double sigma,
                      const GroupStructure& g, const AggregationConfig& config,
                      const AggregationHooks& hooks = {});

}  // namespace spa
