#pragma once

// Metropolis-Hastings walk on the pattern hypercube.  Proposals flip one
// uniformly chosen bit (a symmetric kernel), acceptance follows the Gibbs
// measure of the exponential weights, and the estimate averages the
// current state's coefficient vector over the post-burn-in window.

#include <cstddef>
#include <functional>
#include <list>
#include <string>
#include <unordered_map>

#include "spa/aggregate.hpp"
#include "spa/rng.hpp"

namespace spa {

// log of the acceptance probability for moving p -> q:
//   min(0, -n (risk_q - risk_p) / beta + log pi_q - log pi_p).
// A -infinity proposal prior gives -infinity (auto-reject).
double log_accept_ratio(double risk_p, double risk_q, double log_prior_p,
                        double log_prior_q, double beta, std::size_t n);

struct ChainState {
  SparsityPattern pattern;
  PatternFit fit;  // unbiased_risk filled
  double log_prior = 0.0;
  std::size_t iteration = 0;
};

// Bounded LRU of pattern fits keyed by the pattern bits.
class FitCache {
 public:
  explicit FitCache(std::size_t capacity);

  // Returns nullptr on miss; a hit refreshes recency.  The pointer is
  // invalidated by the next insert.
  const PatternFit* find(const SparsityPattern& p);
  void insert(const SparsityPattern& p, PatternFit fit);
  std::size_t size() const { return map_.size(); }

 private:
  std::size_t capacity_;
  std::list<std::pair<std::string, PatternFit>> order_;  // front = most recent
  std::unordered_map<std::string,
                     std::list<std::pair<std::string, PatternFit>>::iterator>
      map_;
};

ChainState chain_init(const PatternProblem& problem,
                      const SparsityPattern& start);

// One proposal / accept-reject step.  The proposal fit is taken from the
// cache when present; proposals with zero prior mass are rejected without
// fitting.  The uniform accept draw is consumed every step.
ChainState mh_step(const ChainState& state, Rng& rng,
                   const PatternProblem& problem, double beta,
                   FitCache* cache = nullptr, bool* accepted_out = nullptr);

// Called after every step with the resolved state.
using StepObserver = std::function<void(
    std::size_t iteration, const SparsityPattern& state, bool accepted,
    double unbiased_risk)>;

// Runs config.t0 + config.t steps from the all-zeros pattern (or
// config.start) and averages theta over the last config.t states.
SpaEstimate mh_run(const PatternProblem& problem,
                   const AggregationConfig& config,
                   const StepObserver& observer = nullptr);

}  // namespace spa
