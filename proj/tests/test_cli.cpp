#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spa/io.hpp"
#include "spa/rng.hpp"

extern std::string g_cli_bin;

namespace {

struct CliDir {
  std::filesystem::path path;
  CliDir() {
    path = std::filesystem::temp_directory_path() /
           ("spa-cli-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~CliDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run_cli(const std::string& args) {
  REQUIRE(!g_cli_bin.empty());
  const std::string cmd = g_cli_bin + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

// 30 x 6 Gaussian design with a 2-sparse signal, written as CSVs.
void write_problem(const CliDir& dir, std::size_t m = 6) {
  spa::Rng rng(spa::splitmix64(77));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = 30;
  std::ostringstream x_csv, y_csv;
  std::vector<std::vector<double>> x(n, std::vector<double>(m));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) x[i][j] = gauss(rng);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double f = x[i][0] - 0.8 * x[i][1];
    y_csv << spa::io::format_double(f + 0.5 * gauss(rng)) << "\n";
    for (std::size_t j = 0; j < m; ++j) {
      x_csv << spa::io::format_double(x[i][j]) << (j + 1 < m ? "," : "\n");
    }
  }
  spa::io::write_text(dir.file("X.csv"), x_csv.str());
  spa::io::write_text(dir.file("y.csv"), y_csv.str());
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fit writes coefficients, diagnostics, and a manifest") {
  CliDir dir;
  write_problem(dir);
  const std::string out = dir.file("run");
  const int rc = run_cli("fit --design " + dir.file("X.csv") + " --response " +
                         dir.file("y.csv") +
                         " --sigma 0.5 --t0 100 --t 400 --seed 5 --out " + out);
  CHECK(rc == 0);

  const auto theta = spa::io::read_csv_vector(out + ".theta.csv");
  CHECK(theta.size() == 6);

  const auto diag = nlohmann::json::parse(spa::io::read_text(out + ".diagnostics.json"));
  CHECK(diag["mode"] == "mh");
  CHECK(diag["steps"] == 500);
  CHECK(diag["beta"].get<double>() == doctest::Approx(1.0));  // 4 sigma^2

  const auto man = nlohmann::json::parse(spa::io::read_text(out + ".manifest.json"));
  CHECK(man["command"] == "fit");
  CHECK(man["config"]["seed"] == 5);
  CHECK(man["config"]["beta_rule"] == "4*sigma^2");
  CHECK(man["inputs"]["design"]["rows"] == 30);
  CHECK(man["inputs"]["design"]["cols"] == 6);
  CHECK(man["inputs"]["design"].contains("fnv1a"));
}

TEST_CASE("repeated seeded runs are byte identical") {
  CliDir dir;
  write_problem(dir);
  const std::string base = "fit --design " + dir.file("X.csv") +
                           " --response " + dir.file("y.csv") +
                           " --sigma 0.5 --t0 50 --t 300 --seed 9 --trace ";
  CHECK(run_cli(base + dir.file("a.trace.csv") + " --out " + dir.file("a")) == 0);
  CHECK(run_cli(base + dir.file("b.trace.csv") + " --out " + dir.file("b")) == 0);
  CHECK(spa::io::read_text(dir.file("a.theta.csv")) ==
        spa::io::read_text(dir.file("b.theta.csv")));
  CHECK(spa::io::read_text(dir.file("a.diagnostics.json")) ==
        spa::io::read_text(dir.file("b.diagnostics.json")));
  CHECK(spa::io::read_text(dir.file("a.trace.csv")) ==
        spa::io::read_text(dir.file("b.trace.csv")));
  CHECK(count_lines(spa::io::read_text(dir.file("a.trace.csv"))) == 351);
}

TEST_CASE("exact mode exports a normalized weight table") {
  CliDir dir;
  write_problem(dir);
  const std::string out = dir.file("ex");
  const int rc = run_cli("exact --design " + dir.file("X.csv") +
                         " --response " + dir.file("y.csv") +
                         " --sigma 0.5 --out " + out);
  CHECK(rc == 0);

  const std::string table = spa::io::read_text(out + ".weights.csv");
  CHECK(count_lines(table) == 65);  // header + 2^6 patterns

  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  CHECK(line == "pattern,unbiased_risk,log_prior,weight");
  double wsum = 0.0;
  while (std::getline(in, line)) {
    const auto last_comma = line.rfind(',');
    wsum += std::stod(line.substr(last_comma + 1));
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-10));

  const auto diag = nlohmann::json::parse(spa::io::read_text(out + ".diagnostics.json"));
  CHECK(diag["mode"] == "exact");
  CHECK(diag["pattern_count"] == 64);
}

TEST_CASE("fused mode defaults to first differences") {
  CliDir dir;
  write_problem(dir);
  const std::string out = dir.file("fu");
  const int rc = run_cli("fit --design " + dir.file("X.csv") + " --response " +
                         dir.file("y.csv") +
                         " --sigma 0.5 --mode fused --algo exact --out " + out);
  CHECK(rc == 0);
  const auto man = nlohmann::json::parse(spa::io::read_text(out + ".manifest.json"));
  CHECK(man["config"]["d_matrix"] == "first-difference");
}

TEST_CASE("group mode runs with a group file and fails without one") {
  CliDir dir;
  write_problem(dir);
  spa::io::write_text(dir.file("groups.txt"), "1 2 3\n4 5 6\n");
  const std::string common = " --design " + dir.file("X.csv") + " --response " +
                             dir.file("y.csv") + " --sigma 0.5 --algo exact";
  CHECK(run_cli("fit" + common + " --mode group --groups " +
                dir.file("groups.txt") + " --out " + dir.file("g")) == 0);
  const auto diag =
      nlohmann::json::parse(spa::io::read_text(dir.file("g") + ".diagnostics.json"));
  CHECK(diag["pattern_count"] == 4);  // 2^2 group index sets

  CHECK(run_cli("fit" + common + " --mode group --out " + dir.file("g2")) == 2);
}

TEST_CASE("usage and input errors exit with 2") {
  CliDir dir;
  write_problem(dir);
  // missing required flag
  CHECK(run_cli("fit --design " + dir.file("X.csv")) == 2);
  // missing file
  CHECK(run_cli("fit --design " + dir.file("nope.csv") + " --response " +
                dir.file("y.csv") + " --sigma 0.5") == 2);
  // row count mismatch
  spa::io::write_text(dir.file("short.csv"), "1\n2\n");
  CHECK(run_cli("fit --design " + dir.file("X.csv") + " --response " +
                dir.file("short.csv") + " --sigma 0.5") == 2);
  // no subcommand
  CHECK(run_cli("") == 2);
  // warm start of the wrong length
  CHECK(run_cli("fit --design " + dir.file("X.csv") + " --response " +
                dir.file("y.csv") + " --sigma 0.5 --warm-start 10") == 2);
}

TEST_CASE("exact mode refuses spaces beyond the guard") {
  CliDir dir;
  std::ostringstream x_csv;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 26; ++j) x_csv << (i == 0 ? "1" : "2") << (j < 25 ? "," : "\n");
  }
  spa::io::write_text(dir.file("wide.csv"), x_csv.str());
  spa::io::write_text(dir.file("y2.csv"), "1\n2\n");
  CHECK(run_cli("exact --design " + dir.file("wide.csv") + " --response " +
                dir.file("y2.csv") + " --sigma 0.5 --out " + dir.file("w")) == 2);
}

TEST_CASE("simulate writes a report with the default roster") {
  CliDir dir;
  const std::string out = dir.file("sim");
  const int rc = run_cli(
      "simulate --m 5 --n 25 --s 2 --reps 2 --seed 3 --t0 50 --t 200 "
      "--workers 1 --out " +
      out);
  CHECK(rc == 0);
  const std::string csv = spa::io::read_text(out + ".report.csv");
  CHECK(count_lines(csv) == 6);  // header + spa-coord,null,full-ls,oracle-ls,erm-1col
  CHECK(csv.rfind("estimator,reps_ok,pred_mean,pred_sd,est_mean,est_sd\n", 0) == 0);

  const auto j = nlohmann::json::parse(spa::io::read_text(out + ".report.json"));
  CHECK(j["scenario"]["m"] == 5);
  CHECK(j["scenario"]["sigma_rule"] == "derived");
  CHECK(j["failed_reps"] == 0);
  CHECK(j["estimators"].size() == 5);
  CHECK(j["estimators"][0]["pred"].size() == 2);
  // no wall-clock in the files
  CHECK(spa::io::read_text(out + ".report.json").find("wall") == std::string::npos);
}

TEST_CASE("simulate validates its inputs") {
  CliDir dir;
  CHECK(run_cli("simulate --m 5 --n 25 --s 2 --reps 0 --out " + dir.file("x")) == 2);
  CHECK(run_cli("simulate --m 5 --n 25 --s 2 --out " + dir.file("x")) == 2);
  CHECK(run_cli("simulate --m 5 --n 25 --s 2 --reps 1 --estimators bogus --out " +
                dir.file("x")) == 2);
  CHECK(run_cli("simulate --m 5 --n 25 --s 2 --reps 1 --kgroups 2 --groups g.txt "
                "--out " + dir.file("x")) == 2);
}

TEST_CASE("scenario files reproduce flag-driven runs") {
  CliDir dir;
  const std::string flags_out = dir.file("flags");
  CHECK(run_cli("simulate --m 5 --n 25 --s 2 --reps 2 --seed 6 --t0 40 "
                "--t 160 --workers 1 --out " +
                flags_out) == 0);

  spa::io::write_text(dir.file("scen.txt"),
                      "# benchmark scenario\n"
                      "m = 5\n"
                      "n = 25\n"
                      "s = 2\n"
                      "reps = 2\n"
                      "seed = 6\n"
                      "t0 = 40\n"
                      "t = 160\n"
                      "workers = 1\n");
  const std::string file_out = dir.file("fromfile");
  CHECK(run_cli("simulate --scenario " + dir.file("scen.txt") + " --out " +
                file_out) == 0);

  CHECK(spa::io::read_text(flags_out + ".report.csv") ==
        spa::io::read_text(file_out + ".report.csv"));
  CHECK(spa::io::read_text(flags_out + ".report.json") ==
        spa::io::read_text(file_out + ".report.json"));

  // flags override the file
  const std::string override_out = dir.file("override");
  CHECK(run_cli("simulate --scenario " + dir.file("scen.txt") +
                " --seed 7 --out " + override_out) == 0);
  CHECK(spa::io::read_text(flags_out + ".report.csv") !=
        spa::io::read_text(override_out + ".report.csv"));

  // malformed scenario lines carry the location
  spa::io::write_text(dir.file("bad.txt"), "m = 5\nwhat\n");
  CHECK(run_cli("simulate --scenario " + dir.file("bad.txt") + " --out " +
                dir.file("x")) == 2);
}

TEST_CASE("version flag") {
  CHECK(run_cli("--version") == 0);
}

}  // TEST_SUITE
