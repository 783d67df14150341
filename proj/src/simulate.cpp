#include "spa/simulate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "spa/estimators.hpp"
#include "spa/rng.hpp"

namespace spa {

Vector gen_theta_star(ThetaKind kind, std::size_t m, std::size_t s) {
  if (m == 0) throw std::invalid_argument("gen_theta_star: m must be >= 1");
  if (s > m) throw std::invalid_argument("gen_theta_star: s must be <= m");
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(m));
  if (kind == ThetaKind::coordinatewise) {
    for (std::size_t j = 0; j < s; ++j) theta[static_cast<Eigen::Index>(j)] = 1.0;
    return theta;
  }
  if (10 * s > m) {
    throw std::invalid_argument("fused blocks need 10 s <= m");
  }
  theta.setConstant(0.5);
  for (std::size_t b = 1; b <= s; ++b) {
    const double value = (b % 2 == 1) ? -1.0 : 1.0;
    for (std::size_t j = 10 * (b - 1); j < 10 * b; ++j) {
      theta[static_cast<Eigen::Index>(j)] = value;
    }
  }
  return theta;
}

std::string estimator_name(EstimatorId id) {
  switch (id) {
    case EstimatorId::spa_coord: return "spa-coord";
    case EstimatorId::spa_fused: return "spa-fused";
    case EstimatorId::spa_group: return "spa-group";
    case EstimatorId::null_model: return "null";
    case EstimatorId::full_ls: return "full-ls";
    case EstimatorId::oracle_ls: return "oracle-ls";
    case EstimatorId::erm_single: return "erm-1col";
  }
  throw std::invalid_argument("unknown estimator id");
}

EstimatorId estimator_from_name(const std::string& name) {
  if (name == "spa-coord") return EstimatorId::spa_coord;
  if (name == "spa-fused") return EstimatorId::spa_fused;
  if (name == "spa-group") return EstimatorId::spa_group;
  if (name == "null") return EstimatorId::null_model;
  if (name == "full-ls") return EstimatorId::full_ls;
  if (name == "oracle-ls") return EstimatorId::oracle_ls;
  if (name == "erm-1col") return EstimatorId::erm_single;
  throw std::invalid_argument("unknown estimator name: " + name);
}

SimProblem gen_problem(const SimScenario& scenario, std::size_t rep_index) {
  if (rep_index >= scenario.reps) {
    throw std::invalid_argument("rep_index out of range");
  }
  SimProblem prob;
  prob.theta_star = gen_theta_star(scenario.theta_kind, scenario.m, scenario.s);

  const Eigen::Index n = static_cast<Eigen::Index>(scenario.n);
  const Eigen::Index m = static_cast<Eigen::Index>(scenario.m);
  prob.x.resize(n, m);
  {
    Rng rng = make_stream(scenario.base_seed, rep_index, StreamRole::design);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) prob.x(i, j) = gauss(rng);
    }
  }

  const Vector f_star = prob.x * prob.theta_star;
  if (scenario.sigma_derived) {
    const double s2 = f_star.squaredNorm() / (9.0 * static_cast<double>(scenario.n));
    if (!(s2 > 0.0)) {
      throw std::invalid_argument(
          "derived noise rule degenerates (X theta* = 0); pass a fixed sigma");
    }
    prob.sigma = std::sqrt(s2);
  } else {
    if (!(scenario.sigma_fixed > 0.0)) {
      throw std::invalid_argument("fixed sigma must be > 0");
    }
    prob.sigma = scenario.sigma_fixed;
  }

  prob.y.resize(n);
  {
    Rng rng = make_stream(scenario.base_seed, rep_index, StreamRole::noise);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob.y[i] = f_star[i] + prob.sigma * gauss(rng);
    }
  }
  return prob;
}

namespace {

Vector run_estimator(EstimatorId id, const SimScenario& scenario,
                     const SimProblem& prob, std::size_t rep_index,
                     std::size_t roster_pos) {
  const DesignMatrix design(prob.x);
  AggregationConfig cfg = scenario.agg;
  cfg.seed = derive_seed(scenario.base_seed, rep_index, 100 + roster_pos);
  switch (id) {
    case EstimatorId::spa_coord:
      return fit_coordinatewise(design, prob.y, prob.sigma, cfg).theta;
    case EstimatorId::spa_fused:
      return fit_fused(design, prob.y, prob.sigma,
                       make_first_difference(scenario.m), cfg)
          .theta;
    case EstimatorId::spa_group: {
      if (!scenario.groups) {
        throw std::invalid_argument("spa-group needs a group structure");
      }
      return fit_group(design, prob.y, prob.sigma, *scenario.groups, cfg).theta;
    }
    case EstimatorId::null_model:
      return Vector::Zero(static_cast<Eigen::Index>(scenario.m));
    case EstimatorId::full_ls: {
      SparsityPattern all(scenario.m);
      for (std::size_t j = 0; j < scenario.m; ++j) all.set(j, true);
      return solve_pattern_ls(design, prob.y, all).theta;
    }
    case EstimatorId::oracle_ls: {
      SparsityPattern support(scenario.m);
      for (std::size_t j = 0; j < scenario.m; ++j) {
        if (prob.theta_star[static_cast<Eigen::Index>(j)] != 0.0) {
          support.set(j, true);
        }
      }
      return solve_pattern_ls(design, prob.y, support).theta;
    }
    case EstimatorId::erm_single: {
      Vector risks(static_cast<Eigen::Index>(scenario.m));
      std::vector<Vector> thetas(scenario.m);
      for (std::size_t j = 0; j < scenario.m; ++j) {
        PatternFit f = solve_pattern_ls(
            design, prob.y, SparsityPattern::from_indices(scenario.m, {j}));
        risks[static_cast<Eigen::Index>(j)] = f.rss_mean;
        thetas[j] = std::move(f.theta);
      }
      return thetas[erm_select(risks)];
    }
  }
  throw std::invalid_argument("unknown estimator id");
}

void summarize(EstimatorStats& st) {
  double pm = 0.0, em = 0.0;
  std::size_t ok = 0;
  for (std::size_t r = 0; r < st.pred.size(); ++r) {
    if (std::isnan(st.pred[r])) continue;
    pm += st.pred[r];
    em += st.est[r];
    ++ok;
  }
  st.reps_ok = ok;
  if (ok == 0) {
    st.pred_mean = st.est_mean = st.pred_sd = st.est_sd =
        std::numeric_limits<double>::quiet_NaN();
    return;
  }
  st.pred_mean = pm / static_cast<double>(ok);
  st.est_mean = em / static_cast<double>(ok);
  if (ok < 2) {
    st.pred_sd = st.est_sd = 0.0;
    return;
  }
  double pv = 0.0, ev = 0.0;
  for (std::size_t r = 0; r < st.pred.size(); ++r) {
    if (std::isnan(st.pred[r])) continue;
    pv += (st.pred[r] - st.pred_mean) * (st.pred[r] - st.pred_mean);
    ev += (st.est[r] - st.est_mean) * (st.est[r] - st.est_mean);
  }
  st.pred_sd = std::sqrt(pv / static_cast<double>(ok - 1));
  st.est_sd = std::sqrt(ev / static_cast<double>(ok - 1));
}

}  // namespace

SimReport run_replications(const SimScenario& scenario) {
  if (scenario.roster.empty()) {
    throw std::invalid_argument("estimator roster is empty");
  }
  if (scenario.reps == 0) throw std::invalid_argument("reps must be >= 1");
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t e_count = scenario.roster.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<EstimatorStats> stats(e_count);
  for (std::size_t e = 0; e < e_count; ++e) {
    stats[e].name = estimator_name(scenario.roster[e]);
    stats[e].pred.assign(scenario.reps, nan);
    stats[e].est.assign(scenario.reps, nan);
  }
  std::vector<std::uint8_t> rep_failed(scenario.reps, 0);

  auto run_rep = [&](std::size_t rep) {
    const SimProblem prob = gen_problem(scenario, rep);
    for (std::size_t e = 0; e < e_count; ++e) {
      try {
        const Vector theta =
            run_estimator(scenario.roster[e], scenario, prob, rep, e);
        const Vector delta = theta - prob.theta_star;
        stats[e].pred[rep] =
            (prob.x * delta).squaredNorm() / static_cast<double>(scenario.n);
        stats[e].est[rep] = delta.squaredNorm();
      } catch (const std::exception&) {
        rep_failed[rep] = 1;
      }
    }
  };

  std::size_t workers = scenario.workers;
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  workers = std::min(workers, scenario.reps);
  if (workers <= 1) {
    for (std::size_t rep = 0; rep < scenario.reps; ++rep) run_rep(rep);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t rep = next.fetch_add(1);
          if (rep >= scenario.reps) return;
          run_rep(rep);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  SimReport report;
  report.m = scenario.m;
  report.n = scenario.n;
  report.s = scenario.s;
  report.reps = scenario.reps;
  report.theta_kind = scenario.theta_kind == ThetaKind::coordinatewise
                          ? "coordinatewise"
                          : "fused-blocks";
  report.base_seed = scenario.base_seed;
  for (std::size_t e = 0; e < e_count; ++e) {
    summarize(stats[e]);
    report.estimators.push_back(std::move(stats[e]));
  }
  for (std::uint8_t f : rep_failed) report.failed_reps += f;
  report.degenerate_sd = scenario.reps == 1;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace spa
