#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "escape/csv.hpp"

using namespace escape;
namespace fs = std::filesystem;

namespace {

const std::string kCli = ESCAPE_CLI_PATH;

std::string tmp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("escape_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d.string();
}

// Runs the CLI with stdout and stderr captured into `log`; returns the exit code.
int run(const std::string& args, const std::string& log, const std::string& env = "") {
  const std::string cmd = env + " " + kCli + " " + args + " > " + log + " 2>&1";
  const int st = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

using H = std::vector<std::string>;

}  // namespace

TEST_CASE("usage errors exit with 1") {
  const auto d = tmp_dir("usage");
  const auto log = d + "/log.txt";
  CHECK(run("", log) == 1);
  CHECK(run("nonsense", log) == 1);
  CHECK(run("predict --alpha -2", log) == 1);
  CHECK(slurp(log).find("alpha") != std::string::npos);
  CHECK(run("predict --epsilon 0.01 --beta 0.1", log) == 1);
  CHECK(run("campaign --paths 0 --out " + d + "/c", log) == 1);
  CHECK(run("compare --in " + d + "/missing", log) == 1);
  CHECK(run("--help", log) == 0);
}

TEST_CASE("figures-data writes the figure CSVs") {
  const auto d = tmp_dir("figs");
  REQUIRE(run("figures-data --out " + d, d + "/log.txt") == 0);
  auto f1 = read_csv(d + "/fig1_trajectory.csv");
  CHECK(f1.header == H{"t", "v", "vstar", "p"});
  CHECK(f1.rows.size() > 100);
  CHECK(std::stod(f1.rows.back()[0]) == doctest::Approx(1e4));
  auto f2 = read_csv(d + "/fig2_trajectory.csv");
  CHECK(f2.header == H{"t", "v", "vstar", "p"});
  auto st = read_csv(d + "/fig2_stage_times.csv");
  CHECK(st.header == H{"cycle", "T_s", "T_I", "T_II", "T_III", "T_IV"});
  REQUIRE(st.rows.size() >= 1);
  // every stage of the first cycle is present and ordered
  double prev = 0;
  for (std::size_t c = 1; c < st.header.size(); ++c) {
    const double t = std::stod(st.rows[0][c]);
    CHECK(t > prev);
    prev = t;
  }
  auto f3 = read_csv(d + "/fig3_limits.csv");
  CHECK(f3.header == H{"f", "phi_lim", "psi_lim"});
  CHECK(f3.rows.size() == 200);
  auto m = read_csv(d + "/fig3_markers.csv");
  CHECK(m.header == H{"name", "value"});
  CHECK(std::stod(m.rows[1][1]) == doctest::Approx(0.61266).epsilon(1e-4));
}

TEST_CASE("default output directory comes from the environment") {
  const auto d = tmp_dir("env");
  REQUIRE(run("figures-data", d + "/log.txt", "ESCAPE_OUT_DIR=" + d + "/root") == 0);
  CHECK(fs::exists(d + "/root/figures/fig3_limits.csv"));
  REQUIRE(run("ode --epsilon 0.05 --t-end 200", d + "/log.txt", "ESCAPE_OUT_DIR=" + d + "/ode") == 0);
  auto tr = read_csv(d + "/ode/trajectory.csv");
  CHECK(tr.header == H{"t", "v", "vstar", "p"});
  CHECK(read_csv(d + "/ode/stage_times.csv").header == H{"cycle", "T_s", "T_I", "T_II", "T_III", "T_IV"});
}

TEST_CASE("config file values are overridden by flags") {
  const auto d = tmp_dir("cfg");
  {
    std::ofstream c(d + "/model.cfg");
    c << "# test model\nalpha = 1\nf = 0.8\nbeta = 0.1\nV = 1e6\n";
  }
  REQUIRE(run("predict --config " + d + "/model.cfg --out " + d + "/a", d + "/a.txt") == 0);
  REQUIRE(run("predict --config " + d + "/model.cfg --f 0.7 --out " + d + "/b", d + "/b.txt") == 0);
  auto a = read_csv(d + "/a/predictor_report.csv");
  auto b = read_csv(d + "/b/predictor_report.csv");
  CHECK(a.header == H{"alpha", "f", "regime", "phi_lim", "psi_lim", "H", "p_failed", "rho_W", "rho_M",
                      "rho_M_stderr", "P_uW_failed", "P_uW_lost", "P_uM", "P_uC"});
  CHECK(std::stod(a.rows[0][a.col("f")]) == doctest::Approx(0.8));
  CHECK(std::stod(b.rows[0][b.col("f")]) == doctest::Approx(0.7));
  CHECK(slurp(d + "/a.txt").find("scaling=beta") != std::string::npos);
  // a scaling flag replaces the file's scaling key
  REQUIRE(run("predict --config " + d + "/model.cfg --epsilon 0.01", d + "/c.txt") == 0);
  CHECK(slurp(d + "/c.txt").find("scaling=epsilon") != std::string::npos);
  // malformed file is a usage error
  {
    std::ofstream c(d + "/bad.cfg");
    c << "alpha 1\n";
  }
  CHECK(run("predict --config " + d + "/bad.cfg", d + "/e.txt") == 1);
}

TEST_CASE("campaign then compare: 0 on PASS, 2 on FAIL") {
  const auto d = tmp_dir("cmp");
  REQUIRE(run("campaign --epsilon 0.05 --V 1e4 --paths 20 --t-factor 0.05 --dt 0.002 --mc-draws 1000 --out " + d +
                  "/run",
              d + "/log.txt") == 0);
  auto s = read_csv(d + "/run/summary.csv");
  CHECK(s.header == H{"quantity", "count", "n", "freq", "lo95", "hi95", "predicted", "z"});
  CHECK(s.rows.size() == 5);

  // hand-made summaries exercise both verdicts
  auto write = [&](const std::string& dir, long failed) {
    fs::create_directories(dir);
    std::ofstream o(dir + "/summary.csv");
    o << "quantity,count,n,freq,lo95,hi95,predicted,z\n"
      << "FailedMutant," << failed << ",1000,,,,0.6,\n"
      << "MutantLostAfterRise,0,1000,,,,0,\n"
      << "WildLost," << 1000 - failed << ",1000,,,,0.4,\n"
      << "Coexistence,0,1000,,,,0,\n"
      << "Unresolved,0,1000,,,,,\n";
    std::ofstream t(dir + "/tests.csv");
    t << "name,statistic,p_value,dof\n";
  };
  write(d + "/good", 600);
  write(d + "/bad", 300);
  CHECK(run("compare --in " + d + "/good", d + "/g.txt") == 0);
  CHECK(slurp(d + "/g.txt").find("PASS") != std::string::npos);
  CHECK(run("compare --in " + d + "/bad", d + "/b.txt") == 2);
  CHECK(slurp(d + "/b.txt").find("FAIL") != std::string::npos);
}

TEST_CASE("coalescent subcommand writes a partition table") {
  const auto d = tmp_dir("coal");
  REQUIRE(run("coalescent --n 6 --t 0.5 --draws 50 --out " + d, d + "/log.txt") == 0);
  auto p = read_csv(d + "/partitions.csv");
  CHECK(p.header == H{"replicate", "case", "n", "n0", "blocks"});
  CHECK(p.rows.size() == 50);
  REQUIRE(run("coalescent --kappa 1 --V 1e6 --f fhat --outcome WildLost --n 4 --draws 3 --out " + d + "/t", d +
                  "/log.txt") == 0);
  auto t = read_csv(d + "/t/partitions.csv");
  CHECK(t.rows[0][t.col("blocks")] == "4");
  CHECK(run("coalescent --outcome nope --kappa 1 --out " + d + "/x", d + "/log.txt") == 1);
}

TEST_CASE("sde and bd subcommands") {
  const auto d = tmp_dir("paths");
  REQUIRE(run("sde --epsilon 0.05 --V 1e4 --t-end 20 --out " + d + "/s", d + "/log.txt") == 0);
  CHECK(read_csv(d + "/s/path.csv").header == H{"t", "v", "vstar", "p"});
  REQUIRE(run("bd --epsilon 0.05 --V 200 --t-end 5 --genealogy --out " + d + "/b", d + "/log.txt") == 0);
  CHECK(read_csv(d + "/b/path.csv").header == H{"t", "N_v", "N_vstar", "N_p"});
  CHECK(read_csv(d + "/b/genealogy_wild.csv").header == H{"child", "parent", "t"});
}
