#include "spa/mh.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace spa {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_accept_ratio(double risk_p, double risk_q, double log_prior_p,
                        double log_prior_q, double beta, std::size_t n) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (log_prior_q == kNegInf) return kNegInf;
  if (log_prior_p == kNegInf) {
    throw std::invalid_argument("current state has zero prior mass");
  }
  const double delta = -static_cast<double>(n) * (risk_q - risk_p) / beta +
                       log_prior_q - log_prior_p;
  return std::min(0.0, delta);
}

FitCache::FitCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("cache capacity must be >= 1");
}

const PatternFit* FitCache::find(const SparsityPattern& p) {
  auto it = map_.find(p.to_string());
  if (it == map_.end()) return nullptr;
  order_.splice(order_.begin(), order_, it->second);
  return &it->second->second;
}

void FitCache::insert(const SparsityPattern& p, PatternFit fit) {
  std::string key = p.to_string();
  auto it = map_.find(key);
  if (it != map_.end()) {
    it->second->second = std::move(fit);
    order_.splice(order_.begin(), order_, it->second);
    return;
  }
  order_.emplace_front(key, std::move(fit));
  map_[std::move(key)] = order_.begin();
  if (map_.size() > capacity_) {
    map_.erase(order_.back().first);
    order_.pop_back();
  }
}

ChainState chain_init(const PatternProblem& problem,
                      const SparsityPattern& start) {
  if (start.size() != problem.chain_dim()) {
    throw std::invalid_argument("start pattern length mismatch");
  }
  ChainState state;
  state.pattern = start;
  state.log_prior = problem.prior->log_mass(start);
  if (state.log_prior == kNegInf) {
    throw std::invalid_argument("start pattern has zero prior mass");
  }
  state.fit = problem.fit(start);
  state.iteration = 0;
  return state;
}

ChainState mh_step(const ChainState& state, Rng& rng,
                   const PatternProblem& problem, double beta,
                   FitCache* cache, bool* accepted_out) {
  const std::size_t l = problem.chain_dim();
  std::uniform_int_distribution<std::size_t> pick(0, l - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SparsityPattern proposal = state.pattern;
  proposal.flip(pick(rng));
  const double lp_q = problem.prior->log_mass(proposal);

  double log_r = kNegInf;
  PatternFit fit_q;
  bool have_fit = false;
  if (lp_q > kNegInf) {
    if (cache) {
      if (const PatternFit* hit = cache->find(proposal)) {
        fit_q = *hit;
        have_fit = true;
      }
    }
    if (!have_fit) {
      fit_q = problem.fit(proposal);
      if (cache) cache->insert(proposal, fit_q);
    }
    log_r = log_accept_ratio(*state.fit.unbiased_risk, *fit_q.unbiased_risk,
                             state.log_prior, lp_q, beta, problem.n());
  }

  // The accept draw is consumed unconditionally so trajectories with the
  // same seed stay aligned across priors.
  const double u = unif(rng);
  const bool accept = std::log(u) < log_r;
  if (accepted_out) *accepted_out = accept;

  ChainState next;
  next.iteration = state.iteration + 1;
  if (accept) {
    next.pattern = std::move(proposal);
    next.fit = std::move(fit_q);
    next.log_prior = lp_q;
  } else {
    next.pattern = state.pattern;
    next.fit = state.fit;
    next.log_prior = state.log_prior;
  }
  return next;
}

SpaEstimate mh_run(const PatternProblem& problem,
                   const AggregationConfig& config,
                   const StepObserver& observer) {
  problem.validate();
  if (config.t < 1) throw std::invalid_argument("mh_run needs t >= 1");
  const double beta = resolve_beta(config.beta, problem.sigma);
  const std::size_t l = problem.chain_dim();

  SparsityPattern start =
      config.start ? *config.start : SparsityPattern(l);
  ChainState state = chain_init(problem, start);

  Rng rng(splitmix64(config.seed));
  FitCache cache(config.cache_capacity);
  cache.insert(state.pattern, state.fit);

  const std::size_t total = config.t0 + config.t;
  ChainDiagnostics diag;
  diag.steps = total;
  diag.pattern_size_trace.reserve(total);
  std::unordered_set<std::string> seen;
  seen.insert(state.pattern.to_string());

  Vector theta_sum = Vector::Zero(static_cast<Eigen::Index>(problem.design->m()));
  for (std::size_t step = 1; step <= total; ++step) {
    bool accepted = false;
    state = mh_step(state, rng, problem, beta, &cache, &accepted);
    if (accepted) {
      ++diag.accepted;
      seen.insert(state.pattern.to_string());
    }
    diag.pattern_size_trace.push_back(
        static_cast<std::uint32_t>(state.pattern.count()));
    if (step > config.t0) theta_sum += state.fit.theta;
    if (observer) {
      observer(step, state.pattern, accepted, *state.fit.unbiased_risk);
    }
  }

  diag.acceptance_rate =
      static_cast<double>(diag.accepted) / static_cast<double>(total);
  diag.unique_patterns_visited = seen.size();
  diag.final_pattern = state.pattern;

  SpaEstimate est;
  est.theta = theta_sum / static_cast<double>(config.t);
  est.mode = AggregationMode::mh;
  est.config = config;
  est.config.mode = AggregationMode::mh;
  est.config.beta = beta;
  est.chain = std::move(diag);
  return est;
}

}  // namespace spa
