#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "waoi/cli.hpp"
#include "waoi/config.hpp"

using namespace waoi;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const fs::path dir = fs::path("cli_test_tmp");
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kMinimalConfig = R"(# minimal scalar setup
seed = 7
[population]
N = 3
[type]
A = 0.9
K_W = 1.5
[scheduler]
Rd = 2
)";

}  // namespace

TEST_CASE("config: minimal file and defaults") {
  const Config cfg = parse_config(kMinimalConfig);
  REQUIRE(cfg.seed == 7);
  REQUIRE(cfg.population.N == 3);
  REQUIRE(cfg.population.types.size() == 1);
  const auto& t = cfg.population.types[0];
  REQUIRE(t.A(0, 0) == 0.9);
  REQUIRE(t.K_W(0, 0) == 1.5);
  REQUIRE(t.B(0, 0) == 1.0);
  REQUIRE(t.Q(0, 0) == 1.0);
  REQUIRE(t.R(0, 0) == 1.0);
  REQUIRE(t.Sigma_x(0, 0) == 1.0);
  REQUIRE(t.nu0(0) == 0.0);
  REQUIRE(cfg.scheduler.Rd == 2);
  REQUIRE(cfg.scheduler.eps == 1e-6);
  REQUIRE(cfg.solver.delta_max == 512);
  REQUIRE(cfg.simulation.T == 10000);
  REQUIRE(cfg.population.weights == std::vector<double>{1.0});
}

TEST_CASE("config: multi-type with matrices and equal weights") {
  const char* text = R"(
seed = 1
[population]
N = 7
[type]
A = 0.5
K_W = 1
[type]
A = 0.9 0.1 ; 0 0.8
B = 1 0 ; 0 1
Q = 1 0 ; 0 1
R = 1 0 ; 0 1
K_W = 1 0.2 ; 0.2 0.7
nu0 = 1 -1
Sigma_x = 1 0 ; 0 1
)";
  REQUIRE_THROWS_AS(parse_config(text), ConfigError);  // mixed dims rejected at build
  // Same file with consistent dimensions parses.
  const char* ok = R"(
seed = 1
[population]
N = 7
[type]
A = 0.9 0.1 ; 0 0.8
K_W = 1 0.2 ; 0.2 0.7
[type]
A = 0.7 0 ; 0 0.6
K_W = 0.5 0 ; 0 0.5
nu0 = 1 -1
)";
  const Config cfg = parse_config(ok);
  const Population pop = build_population(cfg.population);
  REQUIRE(pop.types.size() == 2);
  REQUIRE(pop.weights[0] == Approx(0.5));
  REQUIRE(cfg.population.types[1].nu0(0) == 1.0);
}

TEST_CASE("config: dump/parse round trip is byte stable") {
  const Config cfg = parse_config(kMinimalConfig);
  const std::string once = dump_config(cfg);
  const std::string twice = dump_config(parse_config(once));
  REQUIRE(once == twice);
  REQUIRE(config_hash(cfg) == config_hash(parse_config(once)));
}

TEST_CASE("config: errors name the offending key") {
  REQUIRE_THROWS_WITH(parse_config("seed = 1\n[type]\nK_W = 1\n"),
                      Catch::Contains("missing required key A"));
  REQUIRE_THROWS_WITH(parse_config("bogus = 1\n[type]\nA = 1\nK_W = 1\n"),
                      Catch::Contains("bogus"));
  REQUIRE_THROWS_WITH(parse_config("[type]\nA = 1 2 ; 3\nK_W = 1\n"),
                      Catch::Contains("type.A"));
  REQUIRE_THROWS_WITH(parse_config("[population]\nN = 2\nweights = 0.4 0.4\n[type]\nA = 1\nK_W = 1\n[type]\nA = 0.5\nK_W = 1\n"),
                      Catch::Contains("sum to 1"));
  REQUIRE_THROWS_AS(parse_config("[solver]\nnope = 3\n[type]\nA = 1\nK_W = 1\n"), ConfigError);
}

TEST_CASE("cli: dump-config round trip and exit codes") {
  const std::string cfg_path = write_temp("mini.cfg", kMinimalConfig);
  std::ostringstream out, err;
  REQUIRE(cli::run_cli({"dump-config", "--config", cfg_path}, out, err) == 0);
  const std::string dumped = out.str();
  REQUIRE(dumped == dump_config(load_config(cfg_path)));

  // malformed config: exit 2, message names the key
  const std::string bad = write_temp("bad.cfg", "[type]\nA = 1 2 ; 3\nK_W = 1\n");
  std::ostringstream out2, err2;
  REQUIRE(cli::run_cli({"dump-config", "--config", bad}, out2, err2) == 2);
  REQUIRE(err2.str().find("type.A") != std::string::npos);

  // unknown flag: exit 2
  std::ostringstream out3, err3;
  REQUIRE(cli::run_cli({"dump-config", "--config", cfg_path, "--nope"}, out3, err3) == 2);

  // missing file: exit 2
  std::ostringstream out4, err4;
  REQUIRE(cli::run_cli({"dump-config", "--config", "does_not_exist.cfg"}, out4, err4) == 2);
}

TEST_CASE("cli: threshold prints tau,eta,sigma_star consistently across methods") {
  std::ostringstream vi, imp, orc, err;
  REQUIRE(cli::run_cli({"threshold", "--A", "1", "--Kw", "1", "--lambda", "10",
                        "--method", "oracle"},
                       orc, err) == 0);
  REQUIRE(orc.str() == "tau,eta,sigma_star\n2,,5\n");
  REQUIRE(cli::run_cli({"threshold", "--A", "1", "--Kw", "1", "--lambda", "10",
                        "--method", "implicit"},
                       imp, err) == 0);
  REQUIRE(imp.str().substr(0, 20) == "tau,eta,sigma_star\n2");
  REQUIRE(cli::run_cli({"threshold", "--A", "1", "--Kw", "1", "--lambda", "10"}, vi, err) == 0);
  REQUIRE(vi.str().substr(0, 20) == "tau,eta,sigma_star\n2");
}

TEST_CASE("cli: dump-table emits the h/g table") {
  const std::string cfg_path = write_temp("mini2.cfg", kMinimalConfig);
  std::ostringstream out, err;
  REQUIRE(cli::run_cli({"dump-table", "--config", cfg_path, "--type", "0", "--delta-max", "3"},
                       out, err) == 0);
  // A=0.9, K_W=1.5: h(1)=1.5, h(2)=1.5(1+0.81)=2.715
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  REQUIRE(line == "delta,h,g");
  std::getline(lines, line);
  REQUIRE(line == "0,0,0");
  const auto parse_row = [](const std::string& row) {
    std::vector<double> vals;
    std::stringstream ss(row);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    return vals;
  };
  std::getline(lines, line);
  auto r1 = parse_row(line);
  REQUIRE(r1[1] == Approx(1.5).epsilon(1e-12));
  REQUIRE(r1[2] == Approx(1.5).epsilon(1e-12));
  std::getline(lines, line);
  auto r2 = parse_row(line);
  REQUIRE(r2[1] == Approx(1.5 * 1.81).epsilon(1e-12));  // h(2) = K_W (1 + A^2)
  REQUIRE(r2[2] == Approx(2 * 1.5 * 1.81).epsilon(1e-12));
}

TEST_CASE("cli: check reports assumptions and exit code tracks the verdict") {
  // Contractive setup passes.
  Config good;
  good.population.types = {AgentType::make_scalar(0.5, 1.0, 1.0, 0.01),
                           AgentType::make_scalar(0.3, 1.0, 1.0, 0.02)};
  good.population.N = 4;
  good.scheduler.Rd = 2;
  const std::string good_path = write_temp("good.cfg", dump_config(good));
  std::ostringstream out, err;
  REQUIRE(cli::run_cli({"check", "--config", good_path}, out, err) == 0);
  REQUIRE(out.str().find("overall: PASS") != std::string::npos);

  // Default Q=R=1 with A=1.15 fails the contraction margin.
  Config bad;
  bad.population.types = {AgentType::make_scalar(1.15, 2.0)};
  bad.population.N = 4;
  bad.scheduler.Rd = 1;
  const std::string bad_path = write_temp("badmf.cfg", dump_config(bad));
  std::ostringstream out2, err2;
  REQUIRE(cli::run_cli({"check", "--config", bad_path, "--alpha", "0.25"}, out2, err2) == 1);
  REQUIRE(out2.str().find("FAIL") != std::string::npos);
}

TEST_CASE("cli: schedule solve prints the solution fields") {
  Config cfg;
  const std::vector<double> a{0.1, 0.299, 0.498, 0.697, 0.896, 1.095};
  const std::vector<double> kw{0.3, 0.9, 1.5, 2.5, 4.0, 4.5};
  for (std::size_t i = 0; i < a.size(); ++i)
    cfg.population.types.push_back(AgentType::make_scalar(a[i], kw[i]));
  cfg.population.N = 6;
  cfg.scheduler.Rd = 3;
  const std::string path = write_temp("fig4.cfg", dump_config(cfg));
  std::ostringstream out, err;
  REQUIRE(cli::run_cli({"schedule", "solve", "--config", path}, out, err) == 0);
  const std::string text = out.str();
  for (const char* field : {"lambda_l =", "lambda_u =", "p =", "Rd_l =", "Rd_u =", "tau_l =",
                            "tau_u =", "achieved_stationary_rate ="})
    REQUIRE(text.find(field) != std::string::npos);
}

TEST_CASE("cli: schedule simulate emits the AoI CSV") {
  const std::string cfg_path = write_temp("mini3.cfg", kMinimalConfig);
  std::ostringstream out, err;
  REQUIRE(cli::run_cli({"schedule", "simulate", "--config", cfg_path, "--policy", "hard",
                        "--T", "5", "--seed", "3"},
                       out, err) == 0);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  REQUIRE(line == "k,i,delta,zeta,g");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  REQUIRE(rows == 5 * 3);
}

TEST_CASE("cli: experiment asymptotic writes CSV and replay is byte-identical") {
  Config cfg;
  cfg.seed = 977;
  const std::vector<double> a{0.3, 0.5, 0.7, 1.0};
  const std::vector<double> kw{3.0, 5.0, 1.0, 2.0};
  for (std::size_t i = 0; i < a.size(); ++i)
    cfg.population.types.push_back(AgentType::make_scalar(a[i], kw[i]));
  cfg.population.N = 4;
  cfg.scheduler.Rd = 2;
  const std::string cfg_path = write_temp("asym.cfg", dump_config(cfg));

  std::ostringstream out, err;
  const std::string dir_a = "cli_test_tmp/out_a";
  REQUIRE(cli::run_cli({"experiment", "asymptotic", "--config", cfg_path, "--alpha", "0.6",
                        "--N", "8,16", "--T", "400", "--replications", "2", "--seed", "5",
                        "--out-dir", dir_a},
                       out, err) == 0);
  const std::string csv_a = slurp(dir_a + "/experiment_asymptotic.csv");
  REQUIRE(csv_a.substr(0, 24) == "N,Js_relaxed,Js_hard,gap");

  const std::string dir_b = "cli_test_tmp/out_b";
  std::ostringstream out2, err2;
  REQUIRE(cli::run_cli({"replay", "--manifest", dir_a + "/experiment_asymptotic_manifest.txt",
                        "--out-dir", dir_b},
                       out2, err2) == 0);
  REQUIRE(slurp(dir_b + "/experiment_asymptotic.csv") == csv_a);
}

TEST_CASE("cli: mfg solve writes gains, assumptions and the xbar CSV") {
  Config cfg;
  cfg.population.types = {AgentType::make_scalar(0.5, 1.0, 1.0, 0.01, 1.0, 1.0)};
  cfg.population.N = 4;
  cfg.scheduler.Rd = 2;
  const std::string path = write_temp("mfg.cfg", dump_config(cfg));
  const std::string dir = "cli_test_tmp/mfg_out";
  std::ostringstream out, err;
  REQUIRE(cli::run_cli({"mfg", "solve", "--config", path, "--horizon", "50", "--out-dir", dir},
                       out, err) == 0);
  REQUIRE(out.str().find("upsilon =") != std::string::npos);
  REQUIRE(out.str().find("E_star =") != std::string::npos);
  REQUIRE(out.str().find("overall: PASS") != std::string::npos);
  const std::string csv = slurp(dir + "/mfg_xbar.csv");
  REQUIRE(csv.substr(0, 8) == "k,xbar_1");
  int rows = -1;  // minus header
  for (char c : csv)
    if (c == '\n') ++rows;
  REQUIRE(rows == 50);

  // A contraction-violating config exits 1 (domain error).
  Config bad;
  bad.population.types = {AgentType::make_scalar(1.15, 2.0)};
  bad.population.N = 4;
  bad.scheduler.Rd = 1;
  const std::string bad_path = write_temp("mfgbad.cfg", dump_config(bad));
  std::ostringstream out2, err2;
  REQUIRE(cli::run_cli({"mfg", "solve", "--config", bad_path, "--out-dir", dir}, out2, err2) ==
          1);
}

TEST_CASE("cli: simulate prints metrics and dumps trajectories on request") {
  Config cfg;
  cfg.population.types = {AgentType::make_scalar(0.5, 1.0, 1.0, 0.01, 1.0, 1.0),
                          AgentType::make_scalar(0.3, 1.0, 1.0, 0.02, 1.0, -0.5)};
  cfg.population.N = 4;
  cfg.scheduler.Rd = 2;
  cfg.simulation.T = 50;
  const std::string path = write_temp("sim.cfg", dump_config(cfg));
  const std::string dir = "cli_test_tmp/sim_out";
  std::ostringstream out, err;
  REQUIRE(cli::run_cli({"simulate", "--config", path, "--policy", "hard", "--seed", "3",
                        "--dump", "--out-dir", dir},
                       out, err) == 0);
  for (const char* key : {"J_S =", "J_iN_mean =", "J_track_mean =", "eps_T =",
                          "achieved_rate ="})
    REQUIRE(out.str().find(key) != std::string::npos);
  const std::string csv = slurp(dir + "/simulate_trajectories.csv");
  REQUIRE(csv.substr(0, 21) == "k,i,x_1,z_1,u_1,delta");
  int rows = -1;
  for (char c : csv)
    if (c == '\n') ++rows;
  REQUIRE(rows == 50 * 4);
}

TEST_CASE("cli: replay detects a changed config") {
  Config cfg;
  cfg.population.types = {AgentType::make_scalar(0.5, 1.0)};
  cfg.population.N = 3;
  cfg.scheduler.Rd = 2;
  const std::string cfg_path = write_temp("drift.cfg", dump_config(cfg));
  const std::string dir = "cli_test_tmp/out_drift";
  std::ostringstream out, err;
  REQUIRE(cli::run_cli({"experiment", "tau-vs-rd", "--config", cfg_path, "--Rd-grid", "1,2",
                        "--out-dir", dir},
                       out, err) == 0);
  // mutate the config
  cfg.population.types[0].K_W = MatrixXd::Constant(1, 1, 2.0);
  {
    std::ofstream f(cfg_path, std::ios::binary | std::ios::trunc);
    f << dump_config(cfg);
  }
  std::ostringstream out2, err2;
  REQUIRE(cli::run_cli({"replay", "--manifest", dir + "/experiment_tau_vs_rd_manifest.txt",
                        "--out-dir", dir},
                       out2, err2) == 1);
}
