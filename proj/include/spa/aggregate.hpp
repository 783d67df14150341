#pragma once

// Exponential-weight aggregation over finite families and exact
// sparsity-pattern aggregation by enumeration.  Weights follow
//   lambda_j ∝ exp(-n risk_j / beta) pi_j,
// the unique minimizer of  sum_j lambda_j risk_j + (beta/n) K(lambda, pi)
// over the probability simplex.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spa/linalg.hpp"
#include "spa/pattern.hpp"
#include "spa/prior.hpp"

namespace spa {

// Exact enumeration refuses pattern spaces beyond 2^25.
inline constexpr std::size_t kExactGuardBits = 25;

enum class AggregationMode { exact, mh };

struct AggregationConfig {
  double beta = 0.0;  // 0 means "use 4 sigma^2"
  AggregationMode mode = AggregationMode::exact;
  std::size_t t0 = 3000;  // burn-in steps
  std::size_t t = 7000;   // averaging steps
  std::uint64_t seed = 0;
  std::size_t cache_capacity = 4096;
  std::optional<SparsityPattern> start;  // chain warm start; default all-zeros
};

// Temperature actually used: beta if positive, else 4 sigma^2.
double resolve_beta(double beta, double sigma);

struct ChainDiagnostics {
  double acceptance_rate = 0.0;  // accepted / (t0 + t)
  std::size_t accepted = 0;
  std::size_t steps = 0;
  std::size_t unique_patterns_visited = 0;
  std::vector<std::uint32_t> pattern_size_trace;  // |p_t| for every step
  SparsityPattern final_pattern;
};

struct ExactSummary {
  std::size_t pattern_count = 0;
  double log_normalizer = 0.0;  // log sum_p exp(-n risk_p / beta) pi_p
  double top_weight = 0.0;
  std::string top_pattern;
};

struct SpaEstimate {
  Vector theta;  // column-space coefficients
  AggregationMode mode = AggregationMode::exact;
  AggregationConfig config;  // echo with beta resolved
  std::optional<ChainDiagnostics> chain;
  std::optional<ExactSummary> exact;
};

// Softmax of (-n risk_j / beta + log_prior_j) with max-shift.  Entries with
// log prior -infinity get weight exactly 0; all -infinity is an error.
Vector exp_weights(const Vector& risks, const Vector& log_priors, double beta,
                   std::size_t n);

// Objective of the penalized problem the weights minimize.
double penalized_objective(const Vector& lambda, const Vector& risks,
                           const Vector& pi, double beta, std::size_t n);

// Index of minimal risk, ties to the lowest index.
std::size_t erm_select(const Vector& risks);

struct DictAggregate {
  Vector weights;
  Vector aggregate;  // convex combination of the dictionary columns
};

// Aggregates fixed functions (columns of f) by exponential weighting of
// their empirical risks, shifted by -sigma^2 (the deterministic-function
// risk convention; the shift cancels in the softmax).
DictAggregate dict_aggregate(const Matrix& f, const Vector& y, double sigma,
                             double beta, const Vector& log_priors);

// A pattern-aggregation instance.  For group priors, chain patterns are
// index sets over the groups and fits happen on the expanded column set.
// The design is the chain-space design: callers handling reparameterized
// sparsity pass the transformed matrix.
struct PatternProblem {
  const DesignMatrix* design = nullptr;
  const Vector* y = nullptr;
  double sigma = 0.0;
  const PriorSpec* prior = nullptr;

  std::size_t chain_dim() const { return prior->dim(); }
  std::size_t n() const { return design->n(); }
  void validate() const;
  // Fit for a chain pattern, unbiased_risk filled.
  PatternFit fit(const SparsityPattern& chain_pattern) const;
};

// One enumerated pattern with everything needed to reconstitute its weight:
// weight = exp(exponent - log_normalizer).
struct PatternRow {
  SparsityPattern pattern;  // chain-space
  std::size_t rank = 0;
  double rss_mean = 0.0;
  double unbiased_risk = 0.0;
  double log_prior = 0.0;
  double exponent = 0.0;  // -n risk / beta + log prior
};

using PatternVisitor = std::function<void(const PatternRow&)>;

// Fits every pattern in the space (2^chain_dim), forms the weights, and
// returns theta_exp = sum_p weight_p theta_p.  The visitor, when given, is
// called once per pattern in a fixed enumeration order.  Refuses spaces
// beyond kExactGuardBits with guidance to use the chain sampler.
SpaEstimate aggregate_exact(const PatternProblem& problem,
                            const AggregationConfig& config,
                            const PatternVisitor& visitor = nullptr);

}  // namespace spa
