#include "spa/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Relative dependence threshold for the Gram-update enumeration path.
constexpr double kGramTol = 1e-12;

}  // namespace

double resolve_beta(double beta, double sigma) {
  if (beta < 0.0 || std::isnan(beta)) {
    throw std::invalid_argument("beta must be nonnegative (0 selects 4 sigma^2)");
  }
  if (beta > 0.0) return beta;
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("default beta needs sigma > 0");
  }
  return 4.0 * sigma * sigma;
}

Vector exp_weights(const Vector& risks, const Vector& log_priors, double beta,
                   std::size_t n) {
  if (risks.size() < 1 || risks.size() != log_priors.size()) {
    throw std::invalid_argument("exp_weights: size mismatch");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("exp_weights: beta must be > 0");
  if (n == 0) throw std::invalid_argument("exp_weights: n must be >= 1");
  if (!risks.allFinite()) {
    throw std::invalid_argument("exp_weights: risks must be finite");
  }
  double max_a = kNegInf;
  Vector a(risks.size());
  for (Eigen::Index j = 0; j < risks.size(); ++j) {
    const double lp = log_priors[j];
    if (std::isnan(lp) || lp == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("exp_weights: log prior must be finite or -inf");
    }
    a[j] = -static_cast<double>(n) * risks[j] / beta + lp;
    max_a = std::max(max_a, a[j]);
  }
  if (max_a == kNegInf) {
    throw std::invalid_argument("exp_weights: prior has no support");
  }
  Vector w = (a.array() - max_a).exp();
  w /= w.sum();
  return w;
}

double penalized_objective(const Vector& lambda, const Vector& risks,
                           const Vector& pi, double beta, std::size_t n) {
  if (lambda.size() != risks.size() || lambda.size() != pi.size()) {
    throw std::invalid_argument("penalized_objective: size mismatch");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  const double kl = kl_divergence(lambda, pi);
  return lambda.dot(risks) + beta / static_cast<double>(n) * kl;
}

std::size_t erm_select(const Vector& risks) {
  if (risks.size() < 1) throw std::invalid_argument("erm_select: empty input");
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < risks.size(); ++j) {
    if (risks[j] < risks[best]) best = j;
  }
  return static_cast<std::size_t>(best);
}

DictAggregate dict_aggregate(const Matrix& f, const Vector& y, double sigma,
                             double beta, const Vector& log_priors) {
  if (f.rows() != y.size()) {
    throw std::invalid_argument("dict_aggregate: row count mismatch");
  }
  if (f.cols() != log_priors.size()) {
    throw std::invalid_argument("dict_aggregate: prior length mismatch");
  }
  if (sigma < 0.0) throw std::invalid_argument("dict_aggregate: sigma must be >= 0");
  const std::size_t n = static_cast<std::size_t>(y.size());
  Vector risks(f.cols());
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    risks[j] = empirical_risk(y, f.col(j)) - sigma * sigma;
  }
  DictAggregate out;
  out.weights = exp_weights(risks, log_priors, beta, n);
  out.aggregate = f * out.weights;
  return out;
}

void PatternProblem::validate() const {
  if (!design || !y || !prior) {
    throw std::invalid_argument("pattern problem is missing inputs");
  }
  if (static_cast<std::size_t>(y->size()) != design->n()) {
    throw std::invalid_argument("response length does not match design");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (prior->kind() == PriorSpec::Kind::group) {
    const GroupStructure* g = prior->group_structure();
    if (g->m != design->m()) {
      throw std::invalid_argument("group structure does not match design width");
    }
  } else if (prior->dim() != design->m()) {
    throw std::invalid_argument("prior dimension does not match design width");
  }
}

PatternFit PatternProblem::fit(const SparsityPattern& chain_pattern) const {
  PatternFit f;
  if (prior->kind() == PriorSpec::Kind::group) {
    f = solve_pattern_ls(
        *design, *y,
        expand_group_pattern(chain_pattern, *prior->group_structure()));
  } else {
    f = solve_pattern_ls(*design, *y, chain_pattern);
  }
  unbiased_risk(f, sigma, n());
  return f;
}

namespace {

// Streaming weighted average of pattern coefficients along an enumeration:
// keeps log-sum-exp state so only weight ratios ever materialize.
struct WeightAccumulator {
  explicit WeightAccumulator(std::size_t m)
      : max_a(kNegInf), wsum(0.0), tacc(Vector::Zero(static_cast<Eigen::Index>(m))) {}

  double max_a;
  double wsum;
  Vector tacc;
  std::string top_pattern;
  std::size_t count = 0;

  template <typename AddTheta>
  void add(double a, const SparsityPattern& pattern, AddTheta&& add_theta) {
    ++count;
    if (a == kNegInf) return;
    if (a > max_a) {
      const double scale = (max_a == kNegInf) ? 0.0 : std::exp(max_a - a);
      wsum = wsum * scale + 1.0;
      tacc *= scale;
      add_theta(1.0);
      max_a = a;
      top_pattern = pattern.to_string();
    } else {
      const double wt = std::exp(a - max_a);
      wsum += wt;
      add_theta(wt);
    }
  }

  void finish(SpaEstimate& est) const {
    if (wsum <= 0.0) {
      throw std::invalid_argument("aggregation: prior has no support on the space");
    }
    est.theta = tacc / wsum;
    ExactSummary s;
    s.pattern_count = count;
    s.log_normalizer = max_a + std::log(wsum);
    s.top_weight = 1.0 / wsum;
    s.top_pattern = top_pattern;
    est.exact = s;
  }
};

// Depth-first enumeration of all column subsets with incremental Gram
// factor updates: appending column j extends the triangular factor by one
// row at O(k^2).  Subtrees whose appended column is numerically dependent
// on the current set (or would exceed n columns) are enumerated through the
// generic rank-revealing solver instead.
class GramEnumerator {
 public:
  GramEnumerator(const PatternProblem& prob, double beta,
                 WeightAccumulator& acc, const PatternVisitor& visitor)
      : prob_(prob),
        x_(prob.design->matrix()),
        y_(*prob.y),
        beta_(beta),
        acc_(acc),
        visitor_(visitor),
        m_(prob.design->m()),
        n_(prob.design->n()),
        g_(x_.transpose() * x_),
        c_(x_.transpose() * y_),
        yy_(y_.squaredNorm()),
        lmat_(Matrix::Zero(static_cast<Eigen::Index>(m_),
                           static_cast<Eigen::Index>(m_))),
        w_(Vector::Zero(static_cast<Eigen::Index>(m_))),
        z_(Vector::Zero(static_cast<Eigen::Index>(m_))),
        t_(Vector::Zero(static_cast<Eigen::Index>(m_))),
        rss_stack_(m_ + 1, 0.0),
        current_(m_) {
    rss_stack_[0] = yy_;
  }

  void run() {
    process_fast_node();
    dfs(0);
  }

 private:
  void dfs(std::size_t start) {
    for (std::size_t j = start; j < m_; ++j) {
      if (!push(j)) {
        current_.set(j, true);
        slow_dfs(j + 1);
        current_.set(j, false);
        continue;
      }
      process_fast_node();
      dfs(j + 1);
      pop(j);
    }
  }

  bool push(std::size_t j) {
    const std::size_t k = idx_.size();
    if (k >= n_) return false;
    const double gjj = g_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < k; ++i) {
      double s = g_(static_cast<Eigen::Index>(idx_[i]), static_cast<Eigen::Index>(j));
      for (std::size_t r = 0; r < i; ++r) {
        s -= lmat_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) * z_[static_cast<Eigen::Index>(r)];
      }
      z_[static_cast<Eigen::Index>(i)] = s / lmat_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    }
    double znorm2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) znorm2 += z_[static_cast<Eigen::Index>(i)] * z_[static_cast<Eigen::Index>(i)];
    const double d2 = gjj - znorm2;
    if (!(gjj > 0.0) || d2 <= kGramTol * gjj) return false;
    const double d = std::sqrt(d2);
    for (std::size_t i = 0; i < k; ++i) {
      lmat_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = z_[static_cast<Eigen::Index>(i)];
    }
    lmat_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = d;
    double cw = c_[static_cast<Eigen::Index>(j)];
    for (std::size_t i = 0; i < k; ++i) cw -= z_[static_cast<Eigen::Index>(i)] * w_[static_cast<Eigen::Index>(i)];
    const double wk = cw / d;
    w_[static_cast<Eigen::Index>(k)] = wk;
    rss_stack_[k + 1] = std::max(rss_stack_[k] - wk * wk, 0.0);
    idx_.push_back(j);
    current_.set(j, true);
    return true;
  }

  void pop(std::size_t j) {
    idx_.pop_back();
    current_.set(j, false);
  }

  void process_fast_node() {
    const std::size_t k = idx_.size();
    const double rss_mean = rss_stack_[k] / static_cast<double>(n_);
    // theta on the active set: back-substitution against the factor.
    for (std::size_t ii = k; ii-- > 0;) {
      double s = w_[static_cast<Eigen::Index>(ii)];
      for (std::size_t r = ii + 1; r < k; ++r) {
        s -= lmat_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(ii)) * t_[static_cast<Eigen::Index>(r)];
      }
      t_[static_cast<Eigen::Index>(ii)] = s / lmat_(static_cast<Eigen::Index>(ii), static_cast<Eigen::Index>(ii));
    }
    emit(k, rss_mean, [this, k](double wt, Vector& tacc) {
      for (std::size_t i = 0; i < k; ++i) {
        tacc[static_cast<Eigen::Index>(idx_[i])] += wt * t_[static_cast<Eigen::Index>(i)];
      }
    });
  }

  void slow_dfs(std::size_t start) {
    process_slow_node();
    for (std::size_t j = start; j < m_; ++j) {
      current_.set(j, true);
      slow_dfs(j + 1);
      current_.set(j, false);
    }
  }

  void process_slow_node() {
    PatternFit f = solve_pattern_ls(*prob_.design, y_, current_);
    emit(f.rank, f.rss_mean, [&f](double wt, Vector& tacc) { tacc += wt * f.theta; });
  }

  template <typename AddActive>
  void emit(std::size_t rank, double rss_mean, AddActive&& add_active) {
    const double s2 = prob_.sigma * prob_.sigma;
    const double risk = rss_mean +
                        2.0 * s2 * static_cast<double>(rank) / static_cast<double>(n_) -
                        s2;
    const double lp = prob_.prior->log_mass(current_);
    const double a =
        (lp == kNegInf)
            ? kNegInf
            : -static_cast<double>(n_) * risk / beta_ + lp;
    if (visitor_) {
      PatternRow row;
      row.pattern = current_;
      row.rank = rank;
      row.rss_mean = rss_mean;
      row.unbiased_risk = risk;
      row.log_prior = lp;
      row.exponent = a;
      visitor_(row);
    }
    acc_.add(a, current_, [&](double wt) { add_active(wt, acc_.tacc); });
  }

  const PatternProblem& prob_;
  const Matrix& x_;
  const Vector& y_;
  double beta_;
  WeightAccumulator& acc_;
  const PatternVisitor& visitor_;
  std::size_t m_, n_;
  Matrix g_;
  Vector c_;
  double yy_;
  Matrix lmat_;
  Vector w_, z_, t_;
  std::vector<double> rss_stack_;
  SparsityPattern current_;
  std::vector<std::size_t> idx_;
};

// Generic enumeration for group index sets: every node refits through the
// rank-revealing solver on the expanded column set.
void group_dfs(const PatternProblem& prob, double beta, SparsityPattern& current,
               std::size_t start, WeightAccumulator& acc,
               const PatternVisitor& visitor) {
  PatternFit f = prob.fit(current);
  const double lp = prob.prior->log_mass(current);
  const double risk = *f.unbiased_risk;
  const double a = (lp == kNegInf)
                       ? kNegInf
                       : -static_cast<double>(prob.n()) * risk / beta + lp;
  if (visitor) {
    PatternRow row;
    row.pattern = current;
    row.rank = f.rank;
    row.rss_mean = f.rss_mean;
    row.unbiased_risk = risk;
    row.log_prior = lp;
    row.exponent = a;
    visitor(row);
  }
  acc.add(a, current, [&](double wt) { acc.tacc += wt * f.theta; });
  for (std::size_t j = start; j < prob.chain_dim(); ++j) {
    current.set(j, true);
    group_dfs(prob, beta, current, j + 1, acc, visitor);
    current.set(j, false);
  }
}

}  // namespace

SpaEstimate aggregate_exact(const PatternProblem& problem,
                            const AggregationConfig& config,
                            const PatternVisitor& visitor) {
  problem.validate();
  const std::size_t l = problem.chain_dim();
  if (l > kExactGuardBits) {
    throw std::invalid_argument(
        "exact aggregation refuses 2^" + std::to_string(l) +
        " patterns (guard 2^" + std::to_string(kExactGuardBits) +
        "); use the chain sampler (mode mh) instead");
  }
  const double beta = resolve_beta(config.beta, problem.sigma);
  WeightAccumulator acc(problem.design->m());
  if (problem.prior->kind() == PriorSpec::Kind::group) {
    SparsityPattern current(l);
    group_dfs(problem, beta, current, 0, acc, visitor);
  } else {
    GramEnumerator en(problem, beta, acc, visitor);
    en.run();
  }
  SpaEstimate est;
  est.mode = AggregationMode::exact;
  est.config = config;
  est.config.mode = AggregationMode::exact;
  est.config.beta = beta;
  acc.finish(est);
  return est;
}

}  // namespace spa
