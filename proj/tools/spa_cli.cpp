// Command-line front door: fit estimators on CSV data, run benchmark
// scenarios, and export exact weight tables.
//
// Exit codes: 0 success, 1 internal error, 2 usage/input error.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spa/estimators.hpp"
#include "spa/io.hpp"
#include "spa/simulate.hpp"
#include "spa/version.hpp"

using nlohmann::json;

namespace {

struct FitOptions {
  std::string design_path;
  std::string response_path;
  std::string groups_path;
  std::string d_matrix_path;
  std::string mode = "coord";
  std::string algo = "mh";
  double sigma = 0.0;
  double beta = 0.0;
  std::size_t t0 = 3000;
  std::size_t t = 7000;
  std::uint64_t seed = 0;
  std::size_t cache = 4096;
  std::string warm_start;
  std::string trace_path;
  std::string out_prefix = "spa_fit";
};

struct SimOptions {
  std::size_t m = 0, n = 0, s = 0;
  std::string kind = "coord";
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  double sigma = 0.0;  // 0: derived rule
  std::vector<std::string> estimators;
  std::string algo = "mh";
  double beta = 0.0;
  std::size_t t0 = 3000;
  std::size_t t = 7000;
  std::size_t cache = 4096;
  std::string groups_path;
  std::size_t kgroups = 0;
  std::size_t workers = 0;  // 0: resolve from env / processor count
  std::string scenario_path;
  std::string out_prefix = "spa_sim";
};

json input_entry(const std::string& path) {
  return json{{"path", path}, {"fnv1a", spa::io::hex64(spa::io::fnv1a_file(path))}};
}

std::size_t default_workers() {
  if (const char* env = std::getenv("SPA_WORKERS")) {
    const long v = std::atol(env);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? hc : 1;
}

spa::AggregationConfig chain_config(double beta, const std::string& algo,
                                    std::size_t t0, std::size_t t,
                                    std::uint64_t seed, std::size_t cache) {
  spa::AggregationConfig cfg;
  cfg.beta = beta;
  if (algo == "exact") {
    cfg.mode = spa::AggregationMode::exact;
  } else if (algo == "mh") {
    cfg.mode = spa::AggregationMode::mh;
  } else {
    throw std::invalid_argument("unknown algorithm: " + algo);
  }
  cfg.t0 = t0;
  cfg.t = t;
  cfg.seed = seed;
  cfg.cache_capacity = cache;
  return cfg;
}

json diagnostics_json(const spa::SpaEstimate& est) {
  json d;
  if (est.mode == spa::AggregationMode::mh) {
    const auto& c = *est.chain;
    d["mode"] = "mh";
    d["beta"] = est.config.beta;
    d["acceptance_rate"] = c.acceptance_rate;
    d["accepted"] = c.accepted;
    d["steps"] = c.steps;
    d["unique_patterns_visited"] = c.unique_patterns_visited;
    d["final_pattern"] = c.final_pattern.to_string();
    d["final_pattern_size"] = c.final_pattern.count();
  } else {
    const auto& x = *est.exact;
    d["mode"] = "exact";
    d["beta"] = est.config.beta;
    d["pattern_count"] = x.pattern_count;
    d["log_normalizer"] = x.log_normalizer;
    d["top_weight"] = x.top_weight;
    d["top_pattern"] = x.top_pattern;
  }
  return d;
}

int run_fit(const FitOptions& opt, bool force_exact) {
  const spa::DesignMatrix design(spa::io::read_csv_matrix(opt.design_path));
  const spa::Vector y = spa::io::read_csv_vector(opt.response_path);
  if (static_cast<std::size_t>(y.size()) != design.n()) {
    throw std::invalid_argument("design and response row counts differ");
  }

  spa::AggregationConfig cfg =
      chain_config(opt.beta, force_exact ? "exact" : opt.algo, opt.t0, opt.t,
                   opt.seed, opt.cache);

  std::optional<spa::GroupStructure> groups;
  std::optional<spa::LinearMapD> dmap;
  std::size_t chain_dim = design.m();
  std::string d_matrix_desc;
  if (opt.mode == "group") {
    if (opt.groups_path.empty()) {
      throw std::invalid_argument("--mode group requires --groups");
    }
    groups = spa::GroupStructure::load(opt.groups_path, design.m());
    chain_dim = groups->group_count();
  } else if (opt.mode == "fused") {
    if (opt.d_matrix_path.empty()) {
      dmap = spa::make_first_difference(design.m());
      d_matrix_desc = "first-difference";
    } else {
      dmap = spa::make_custom_d(spa::io::read_csv_matrix(opt.d_matrix_path));
      d_matrix_desc = opt.d_matrix_path;
    }
  } else if (opt.mode != "coord") {
    throw std::invalid_argument("unknown mode: " + opt.mode);
  }
  if (!opt.warm_start.empty()) {
    cfg.start = spa::SparsityPattern::from_string(opt.warm_start);
    if (cfg.start->size() != chain_dim) {
      throw std::invalid_argument("--warm-start length must be " +
                                  std::to_string(chain_dim));
    }
  }

  spa::AggregationHooks hooks;
  std::ofstream trace;
  if (!opt.trace_path.empty() && cfg.mode == spa::AggregationMode::mh) {
    trace.open(opt.trace_path, std::ios::binary);
    if (!trace) {
      throw std::invalid_argument("cannot write trace: " + opt.trace_path);
    }
    trace << "iteration,size,accepted,unbiased_risk\n";
    hooks.step = [&trace](std::size_t it, const spa::SparsityPattern& p,
                          bool acc, double risk) {
      trace << it << ',' << p.count() << ',' << (acc ? 1 : 0) << ','
            << spa::io::format_double(risk) << '\n';
    };
  }

  // Exact runs stream the weight table in a second enumeration pass once
  // the normalizer is known.
  std::vector<std::string> outputs;
  spa::SpaEstimate est;
  auto run_once = [&](const spa::PatternVisitor& visitor) {
    spa::AggregationHooks h = hooks;
    h.pattern = visitor;
    if (opt.mode == "group") {
      return spa::fit_group(design, y, opt.sigma, *groups, cfg, h);
    }
    if (opt.mode == "fused") {
      return spa::fit_fused(design, y, opt.sigma, *dmap, cfg, h);
    }
    return spa::fit_coordinatewise(design, y, opt.sigma, cfg, h);
  };
  est = run_once(nullptr);

  if (force_exact) {
    const double log_norm = est.exact->log_normalizer;
    const std::string table_path = opt.out_prefix + ".weights.csv";
    std::ofstream table(table_path, std::ios::binary);
    if (!table) throw std::invalid_argument("cannot write " + table_path);
    table << "pattern,unbiased_risk,log_prior,weight\n";
    run_once([&](const spa::PatternRow& row) {
      table << row.pattern.to_string() << ','
            << spa::io::format_double(row.unbiased_risk) << ','
            << spa::io::format_double(row.log_prior) << ','
            << spa::io::format_double(std::exp(row.exponent - log_norm))
            << '\n';
    });
    outputs.push_back(table_path);
  }

  const std::string theta_path = opt.out_prefix + ".theta.csv";
  spa::io::write_vector_csv(theta_path, est.theta);
  outputs.push_back(theta_path);

  const std::string diag_path = opt.out_prefix + ".diagnostics.json";
  spa::io::write_text(diag_path, diagnostics_json(est).dump(2) + "\n");
  outputs.push_back(diag_path);
  if (!opt.trace_path.empty() && cfg.mode == spa::AggregationMode::mh) {
    outputs.push_back(opt.trace_path);
  }

  json manifest;
  manifest["command"] = force_exact ? "exact" : "fit";
  manifest["tool"] = json{{"name", "spa"}, {"version", spa::kVersion}};
  json inputs;
  inputs["design"] = input_entry(opt.design_path);
  inputs["design"]["rows"] = design.n();
  inputs["design"]["cols"] = design.m();
  inputs["response"] = input_entry(opt.response_path);
  if (!opt.groups_path.empty()) inputs["groups"] = input_entry(opt.groups_path);
  if (!opt.d_matrix_path.empty()) {
    inputs["d_matrix"] = input_entry(opt.d_matrix_path);
  }
  manifest["inputs"] = inputs;
  json config;
  config["mode"] = opt.mode;
  config["algorithm"] =
      cfg.mode == spa::AggregationMode::exact ? "exact" : "mh";
  config["sigma"] = opt.sigma;
  config["beta"] = est.config.beta;
  config["beta_rule"] = opt.beta > 0.0 ? "explicit" : "4*sigma^2";
  config["t0"] = cfg.t0;
  config["t"] = cfg.t;
  config["seed"] = cfg.seed;
  config["cache_capacity"] = cfg.cache_capacity;
  if (!opt.warm_start.empty()) config["warm_start"] = opt.warm_start;
  if (opt.mode == "fused") config["d_matrix"] = d_matrix_desc;
  manifest["config"] = config;
  const std::string manifest_path = opt.out_prefix + ".manifest.json";
  manifest["outputs"] = outputs;
  spa::io::write_text(manifest_path, manifest.dump(2) + "\n");

  std::cout << "wrote " << theta_path << " (" << est.theta.size()
            << " coefficients)\n";
  return 0;
}

void apply_scenario_file(SimOptions& opt, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string key, value;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::istringstream check(line);
      std::string tok;
      if (check >> tok) {
        throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                    ": expected key=value");
      }
      continue;
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    key = strip(line.substr(0, eq));
    value = strip(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    }
    try {
      if (key == "m") opt.m = std::stoull(value);
      else if (key == "n") opt.n = std::stoull(value);
      else if (key == "s") opt.s = std::stoull(value);
      else if (key == "kind") opt.kind = value;
      else if (key == "reps") opt.reps = std::stoull(value);
      else if (key == "seed") opt.seed = std::stoull(value);
      else if (key == "sigma") opt.sigma = std::stod(value);
      else if (key == "algo") opt.algo = value;
      else if (key == "beta") opt.beta = std::stod(value);
      else if (key == "t0") opt.t0 = std::stoull(value);
      else if (key == "t") opt.t = std::stoull(value);
      else if (key == "cache") opt.cache = std::stoull(value);
      else if (key == "groups") opt.groups_path = value;
      else if (key == "kgroups") opt.kgroups = std::stoull(value);
      else if (key == "workers") opt.workers = std::stoull(value);
      else if (key == "estimators") {
        opt.estimators.clear();
        std::istringstream iss(value);
        std::string tok;
        while (std::getline(iss, tok, ',')) {
          if (!tok.empty()) opt.estimators.push_back(strip(tok));
        }
      } else {
        throw std::invalid_argument("unknown key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": bad value for " + key);
    }
  }
}

int run_simulate(const SimOptions& opt) {
  spa::SimScenario sc;
  sc.m = opt.m;
  sc.n = opt.n;
  sc.s = opt.s;
  if (opt.kind == "coord") {
    sc.theta_kind = spa::ThetaKind::coordinatewise;
  } else if (opt.kind == "fused") {
    sc.theta_kind = spa::ThetaKind::fused_blocks;
  } else {
    throw std::invalid_argument("unknown kind: " + opt.kind);
  }
  if (opt.m == 0 || opt.n == 0) {
    throw std::invalid_argument("simulate requires --m and --n >= 1");
  }
  if (opt.reps == 0) throw std::invalid_argument("reps must be >= 1");
  sc.reps = opt.reps;
  sc.base_seed = opt.seed;
  if (opt.sigma > 0.0) {
    sc.sigma_derived = false;
    sc.sigma_fixed = opt.sigma;
  }
  sc.agg = chain_config(opt.beta, opt.algo, opt.t0, opt.t, 0, opt.cache);
  sc.workers = opt.workers ? opt.workers : default_workers();

  if (!opt.groups_path.empty() && opt.kgroups > 0) {
    throw std::invalid_argument("pass either --groups or --kgroups, not both");
  }
  if (!opt.groups_path.empty()) {
    sc.groups = spa::GroupStructure::load(opt.groups_path, sc.m);
  } else if (opt.kgroups > 0) {
    sc.groups = spa::GroupStructure::contiguous_partition(sc.m, opt.kgroups);
  }

  std::vector<std::string> names = opt.estimators;
  if (names.empty()) {
    names = {sc.theta_kind == spa::ThetaKind::coordinatewise ? "spa-coord"
                                                             : "spa-fused",
             "null", "full-ls", "oracle-ls", "erm-1col"};
    if (sc.groups) names.insert(names.begin() + 1, "spa-group");
  }
  for (const auto& name : names) {
    sc.roster.push_back(spa::estimator_from_name(name));
  }

  const spa::SimReport report = spa::run_replications(sc);

  std::ostringstream csv;
  csv << "estimator,reps_ok,pred_mean,pred_sd,est_mean,est_sd\n";
  for (const auto& e : report.estimators) {
    csv << e.name << ',' << e.reps_ok << ','
        << spa::io::format_double(e.pred_mean) << ','
        << spa::io::format_double(e.pred_sd) << ','
        << spa::io::format_double(e.est_mean) << ','
        << spa::io::format_double(e.est_sd) << '\n';
  }
  const std::string csv_path = opt.out_prefix + ".report.csv";
  spa::io::write_text(csv_path, csv.str());

  json j;
  j["scenario"] = {
      {"m", report.m},
      {"n", report.n},
      {"s", report.s},
      {"kind", report.theta_kind},
      {"reps", report.reps},
      {"base_seed", report.base_seed},
      {"sigma_rule",
       sc.sigma_derived ? "derived" : spa::io::format_double(sc.sigma_fixed)},
      {"algorithm", opt.algo},
      {"beta", opt.beta},
      {"beta_rule", opt.beta > 0.0 ? "explicit" : "4*sigma^2"},
      {"t0", opt.t0},
      {"t", opt.t},
      {"estimators", names},
  };
  json rows = json::array();
  for (const auto& e : report.estimators) {
    json row;
    row["name"] = e.name;
    row["reps_ok"] = e.reps_ok;
    row["pred_mean"] = e.pred_mean;
    row["pred_sd"] = e.pred_sd;
    row["est_mean"] = e.est_mean;
    row["est_sd"] = e.est_sd;
    row["pred"] = e.pred;
    row["est"] = e.est;
    rows.push_back(std::move(row));
  }
  j["estimators"] = rows;
  j["failed_reps"] = report.failed_reps;
  j["degenerate_sd"] = report.degenerate_sd;
  const std::string json_path = opt.out_prefix + ".report.json";
  spa::io::write_text(json_path, j.dump(2) + "\n");

  std::cout << "wrote " << csv_path << " and " << json_path << " ("
            << report.reps << " reps, " << report.failed_reps << " failed, "
            << spa::io::format_double(report.wall_seconds) << " s)\n";
  return 0;
}

void add_chain_flags(CLI::App* cmd, FitOptions& opt) {
  cmd->add_option("--beta", opt.beta,
                  "temperature; 0 selects 4 sigma^2 (default)");
  cmd->add_option("--seed", opt.seed, "chain seed (default 0)");
  cmd->add_option("--cache", opt.cache, "fit cache capacity (default 4096)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--warm-start", opt.warm_start,
                  "chain start pattern as a 0/1 string (default all zeros)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsity pattern aggregation by exponential weighting"};
  app.set_version_flag("--version", std::string("spa ") + spa::kVersion);
  app.require_subcommand(1);

  FitOptions fit_opt;
  CLI::App* fit = app.add_subcommand("fit", "fit an aggregate on CSV data");
  fit->add_option("--design", fit_opt.design_path, "design matrix CSV")
      ->required();
  fit->add_option("--response", fit_opt.response_path,
                  "single-column response CSV")
      ->required();
  fit->add_option("--sigma", fit_opt.sigma, "noise standard deviation")
      ->required()
      ->check(CLI::PositiveNumber);
  fit->add_option("--mode", fit_opt.mode, "coord | fused | group")
      ->check(CLI::IsMember({"coord", "fused", "group"}));
  fit->add_option("--groups", fit_opt.groups_path,
                  "group file (one group per line, 1-based indices)");
  fit->add_option("--d-matrix", fit_opt.d_matrix_path,
                  "square D matrix CSV (fused mode; default first differences)");
  fit->add_option("--algo", fit_opt.algo, "mh | exact (default mh)")
      ->check(CLI::IsMember({"mh", "exact"}));
  fit->add_option("--t0", fit_opt.t0, "burn-in steps (default 3000)");
  fit->add_option("--t", fit_opt.t, "averaging steps (default 7000)")
      ->check(CLI::PositiveNumber);
  add_chain_flags(fit, fit_opt);
  fit->add_option("--trace", fit_opt.trace_path,
                  "write a per-iteration chain trace CSV here");
  fit->add_option("--out", fit_opt.out_prefix, "output path prefix");

  FitOptions exact_opt;
  CLI::App* exact =
      app.add_subcommand("exact", "exact enumeration with a weight table");
  exact->add_option("--design", exact_opt.design_path, "design matrix CSV")
      ->required();
  exact->add_option("--response", exact_opt.response_path,
                    "single-column response CSV")
      ->required();
  exact->add_option("--sigma", exact_opt.sigma, "noise standard deviation")
      ->required()
      ->check(CLI::PositiveNumber);
  exact->add_option("--mode", exact_opt.mode, "coord | fused | group")
      ->check(CLI::IsMember({"coord", "fused", "group"}));
  exact->add_option("--groups", exact_opt.groups_path, "group file");
  exact->add_option("--d-matrix", exact_opt.d_matrix_path,
                    "square D matrix CSV (fused mode)");
  exact->add_option("--beta", exact_opt.beta,
                    "temperature; 0 selects 4 sigma^2 (default)");
  exact->add_option("--out", exact_opt.out_prefix, "output path prefix");

  SimOptions sim_opt;
  CLI::App* sim = app.add_subcommand("simulate", "run a benchmark scenario");
  sim->add_option("--scenario", sim_opt.scenario_path,
                  "key=value scenario file; flags override");
  auto* sm = sim->add_option("--m", sim_opt.m, "dictionary size");
  auto* sn = sim->add_option("--n", sim_opt.n, "sample count");
  sim->add_option("--s", sim_opt.s, "sparsity of theta*");
  sim->add_option("--kind", sim_opt.kind, "coord | fused (default coord)")
      ->check(CLI::IsMember({"coord", "fused"}));
  auto* sr = sim->add_option("--reps", sim_opt.reps, "replicate count");
  sim->add_option("--seed", sim_opt.seed, "base seed (default 0)");
  sim->add_option("--sigma", sim_opt.sigma,
                  "fixed noise level; omit for the derived rule");
  sim->add_option("--estimators", sim_opt.estimators,
                  "comma-separated roster (default: spa + baselines)")
      ->delimiter(',');
  sim->add_option("--algo", sim_opt.algo, "mh | exact (default mh)")
      ->check(CLI::IsMember({"mh", "exact"}));
  sim->add_option("--beta", sim_opt.beta, "temperature; 0 selects 4 sigma^2");
  sim->add_option("--t0", sim_opt.t0, "burn-in steps (default 3000)");
  sim->add_option("--t", sim_opt.t, "averaging steps (default 7000)");
  sim->add_option("--cache", sim_opt.cache, "fit cache capacity");
  sim->add_option("--groups", sim_opt.groups_path, "group file for spa-group");
  sim->add_option("--kgroups", sim_opt.kgroups,
                  "contiguous equal groups for spa-group");
  sim->add_option("--workers", sim_opt.workers,
                  "parallel replications (default: SPA_WORKERS or processors)");
  sim->add_option("--out", sim_opt.out_prefix, "output path prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(fit)) return run_fit(fit_opt, false);
    if (app.got_subcommand(exact)) {
      exact_opt.algo = "exact";
      return run_fit(exact_opt, true);
    }
    if (app.got_subcommand(sim)) {
      if (!sim_opt.scenario_path.empty()) {
        SimOptions merged;
        merged.out_prefix = sim_opt.out_prefix;
        apply_scenario_file(merged, sim_opt.scenario_path);
        // Explicit flags win over scenario file values.
        if (sm->count()) merged.m = sim_opt.m;
        if (sn->count()) merged.n = sim_opt.n;
        if (sim->count("--s")) merged.s = sim_opt.s;
        if (sim->count("--kind")) merged.kind = sim_opt.kind;
        if (sr->count()) merged.reps = sim_opt.reps;
        if (sim->count("--seed")) merged.seed = sim_opt.seed;
        if (sim->count("--sigma")) merged.sigma = sim_opt.sigma;
        if (sim->count("--estimators")) merged.estimators = sim_opt.estimators;
        if (sim->count("--algo")) merged.algo = sim_opt.algo;
        if (sim->count("--beta")) merged.beta = sim_opt.beta;
        if (sim->count("--t0")) merged.t0 = sim_opt.t0;
        if (sim->count("--t")) merged.t = sim_opt.t;
        if (sim->count("--cache")) merged.cache = sim_opt.cache;
        if (sim->count("--groups")) merged.groups_path = sim_opt.groups_path;
        if (sim->count("--kgroups")) merged.kgroups = sim_opt.kgroups;
        if (sim->count("--workers")) merged.workers = sim_opt.workers;
        return run_simulate(merged);
      }
      if (!sr->count()) {
        throw std::invalid_argument("simulate requires --reps (or --scenario)");
      }
      return run_simulate(sim_opt);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
