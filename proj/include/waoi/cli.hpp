#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "waoi/csv.hpp"
#include "waoi/experiments.hpp"
#include "waoi/manifest.hpp"

namespace waoi {
namespace cli {

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s, const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError(flag + ": cannot parse integer '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError(flag + ": empty list");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError(flag + ": cannot parse number '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError(flag + ": empty list");
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

inline std::string out_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

inline void finish_manifest(RunManifest m, const std::string& path) { m.write(path); }

inline std::string solution_text(const SchedulerSolution& sol) {
  std::ostringstream os;
  os << "lambda_l = " << format_number(sol.lambda_l) << "\n";
  os << "lambda_u = " << format_number(sol.lambda_u) << "\n";
  os << "p = " << format_number(sol.p) << "\n";
  os << "Rd = " << sol.Rd << "\n";
  os << "Rd_l = " << format_number(sol.Rd_l) << "\n";
  os << "Rd_u = " << format_number(sol.Rd_u) << "\n";
  os << "degenerate = " << (sol.degenerate ? "true" : "false") << "\n";
  os << "calibrated = " << (sol.calibrated ? "true" : "false") << "\n";
  os << "tau_l =";
  for (int t : sol.tau_l) os << ' ' << t;
  os << "\n";
  os << "tau_u =";
  for (int t : sol.tau_u) os << ' ' << t;
  os << "\n";
  double chain_rate = 0.0;
  for (std::size_t i = 0; i < sol.tau_l.size(); ++i)
    chain_rate += stationary_distribution(sol.tau_l[i], sol.tau_u[i], sol.p).rate;
  os << "achieved_stationary_rate = " << format_number(chain_rate) << "\n";
  return os.str();
}

inline std::string matrix_text(const MatrixXd& m) {
  return waoi::detail::matrix_to_string(m);
}

}  // namespace detail

// Single dispatch entry point; also used by `replay` and the test suites.
// Exit codes: 0 success, 1 domain error (infeasibility, assumption failure),
// 2 configuration/usage error. Data goes to `out` or files, diagnostics to
// `err`.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"WAoI scheduling and mean-field tracking toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  // --- threshold ---------------------------------------------------------
  auto* cmd_threshold = app.add_subcommand("threshold", "solve a single-agent threshold");
  double th_A = 1.0, th_Kw = 1.0, th_lambda = 0.0;
  std::string th_method = "vi";
  int th_delta_max = 512;
  cmd_threshold->add_option("--A", th_A, "scalar state coefficient")->required();
  cmd_threshold->add_option("--Kw", th_Kw, "scalar noise variance")->required();
  cmd_threshold->add_option("--lambda", th_lambda, "transmission price")->required();
  cmd_threshold->add_option("--method", th_method, "vi|implicit|oracle");
  cmd_threshold->add_option("--delta-max", th_delta_max, "state-space truncation");
  cmd_threshold->callback([&] {
    const AgentType type = AgentType::make_scalar(th_A, th_Kw);
    SolverSettings s;
    s.delta_max = th_delta_max;
    ThresholdResult r;
    if (th_method == "vi")
      r = ThresholdSolver(type, s).average_cost(th_lambda);
    else if (th_method == "implicit")
      r = scalar_threshold_implicit(type, th_lambda, th_delta_max / 4);
    else if (th_method == "oracle")
      r = cycle_average_oracle(type, th_lambda, th_delta_max / 4);
    else
      throw ConfigError("--method must be vi, implicit or oracle");
    out << "tau,eta,sigma_star\n";
    out << r.tau << ',' << (r.eta ? format_number(*r.eta) : std::string()) << ','
        << format_number(r.sigma_star) << "\n";
  });

  // --- dump-table --------------------------------------------------------
  auto* cmd_table = app.add_subcommand("dump-table", "emit the WAoI table of one type");
  std::string tb_config;
  int tb_type = 0, tb_delta_max = 64;
  cmd_table->add_option("--config", tb_config, "config file")->required();
  cmd_table->add_option("--type", tb_type, "type index");
  cmd_table->add_option("--delta-max", tb_delta_max, "rows to emit");
  cmd_table->callback([&] {
    const Config cfg = load_config(tb_config);
    if (tb_type < 0 || tb_type >= static_cast<int>(cfg.population.types.size()))
      throw ConfigError("--type index out of range");
    const WaoiTable table(cfg.population.types[tb_type], tb_delta_max);
    out << "delta,h,g\n";
    for (int d = 0; d <= tb_delta_max; ++d)
      out << d << ',' << format_number(table.h(d)) << ',' << format_number(table.g(d)) << "\n";
  });

  // --- check -------------------------------------------------------------
  auto* cmd_check = app.add_subcommand("check", "run the assumption checkers");
  std::string ck_config;
  double ck_alpha = 0.0;
  cmd_check->add_option("--config", ck_config, "config file")->required();
  cmd_check->add_option("--alpha", ck_alpha, "bandwidth ratio (default Rd/N)");
  cmd_check->callback([&] {
    const Config cfg = load_config(ck_config);
    const Population pop = build_population(cfg.population);
    const double alpha =
        ck_alpha > 0.0 ? ck_alpha : static_cast<double>(cfg.scheduler.Rd) / pop.N;
    const AssumptionsReport rep = check_assumptions(pop, alpha);
    out << rep.to_text();
    rc = rep.all_pass() ? 0 : 1;
  });

  // --- schedule ----------------------------------------------------------
  auto* cmd_schedule = app.add_subcommand("schedule", "scheduling-layer commands");
  cmd_schedule->require_subcommand(1);

  auto* cmd_ssolve = cmd_schedule->add_subcommand("solve", "bisect lambda against R_d");
  std::string ss_config;
  int ss_rd = -1;
  double ss_eps = -1.0;
  bool ss_calibrate = false;
  cmd_ssolve->add_option("--config", ss_config, "config file")->required();
  cmd_ssolve->add_option("--Rd", ss_rd, "downlink capacity (default from config)");
  cmd_ssolve->add_option("--eps", ss_eps, "bisection tolerance");
  cmd_ssolve->add_flag("--calibrate-p", ss_calibrate, "re-solve p against the chain rate");
  cmd_ssolve->callback([&] {
    const Config cfg = load_config(ss_config);
    const Population pop = build_population(cfg.population);
    const int rd = ss_rd > 0 ? ss_rd : cfg.scheduler.Rd;
    const double eps = ss_eps > 0.0 ? ss_eps : cfg.scheduler.eps;
    const SchedulerSolution sol =
        bisect_lambda(pop, rd, eps, cfg.solver, ss_calibrate || cfg.scheduler.calibrate_p);
    for (const auto& w : sol.warnings) err << "warning: " << w << "\n";
    out << detail::solution_text(sol);
  });

  auto* cmd_ssim = cmd_schedule->add_subcommand("simulate", "AoI-only scheduling simulation");
  std::string sm_config, sm_policy = "relaxed";
  int sm_rd = -1;
  long sm_T = -1;
  std::uint64_t sm_seed = 0;
  bool sm_seed_set = false;
  cmd_ssim->add_option("--config", sm_config, "config file")->required();
  cmd_ssim->add_option("--Rd", sm_rd, "downlink capacity (default from config)");
  cmd_ssim->add_option("--policy", sm_policy, "relaxed|hard");
  cmd_ssim->add_option("--T", sm_T, "steps (default from config)");
  cmd_ssim
      ->add_option("--seed", sm_seed, "master seed (default from config)")
      ->each([&](const std::string&) { sm_seed_set = true; });
  cmd_ssim->callback([&] {
    const Config cfg = load_config(sm_config);
    const Population pop = build_population(cfg.population);
    const int rd = sm_rd > 0 ? sm_rd : cfg.scheduler.Rd;
    const long T = sm_T > 0 ? sm_T : cfg.simulation.T;
    const std::uint64_t seed = sm_seed_set ? sm_seed : cfg.seed;
    const SchedulingPolicy policy = sm_policy == "hard" ? SchedulingPolicy::hard
                                    : sm_policy == "relaxed"
                                        ? SchedulingPolicy::relaxed
                                        : throw ConfigError("--policy must be relaxed or hard");
    const SchedulerSolution sol =
        bisect_lambda(pop, rd, cfg.scheduler.eps, cfg.solver, cfg.scheduler.calibrate_p);
    out << "k,i,delta,zeta,g\n";
    simulate_scheduling(
        pop, sol, policy, T, seed, 0,
        [&](long k, int i, int delta, int zeta, double g) {
          out << k << ',' << i << ',' << delta << ',' << zeta << ',' << format_number(g) << "\n";
        },
        cfg.solver);
  });

  // --- mfg ---------------------------------------------------------------
  auto* cmd_mfg = app.add_subcommand("mfg", "mean-field game commands");
  cmd_mfg->require_subcommand(1);
  auto* cmd_mfg_solve = cmd_mfg->add_subcommand("solve", "solve the mean-field fixed point");
  std::string mf_config, mf_outdir = ".";
  double mf_tol = 1e-9;
  long mf_horizon = 200;
  cmd_mfg_solve->add_option("--config", mf_config, "config file")->required();
  cmd_mfg_solve->add_option("--tol", mf_tol, "fixed-point tolerance");
  cmd_mfg_solve->add_option("--horizon", mf_horizon, "stored trajectory length");
  cmd_mfg_solve->add_option("--out-dir", mf_outdir, "output directory");
  cmd_mfg_solve->callback([&] {
    const Config cfg = load_config(mf_config);
    const Population pop = build_population(cfg.population);
    const double alpha = static_cast<double>(cfg.scheduler.Rd) / pop.N;
    const AssumptionsReport rep = check_assumptions(pop, alpha);
    out << rep.to_text();
    const MeanFieldSolution mf = mf_fixed_point(pop, mf_tol, 2000, mf_horizon);
    for (const auto& w : mf.warnings) err << "warning: " << w << "\n";
    for (std::size_t t = 0; t < mf.gains.size(); ++t) {
      out << "type " << pop.types[t].id << ": K = [" << detail::matrix_text(mf.gains[t].K)
          << "], L = [" << detail::matrix_text(mf.gains[t].L) << "], Pi = ["
          << detail::matrix_text(mf.gains[t].Pi) << "], H = ["
          << detail::matrix_text(mf.gains[t].H) << "], |H| = " << format_number(mf.gains[t].H_norm)
          << "\n";
    }
    out << "upsilon = " << format_number(mf.upsilon) << "\n";
    out << "E_star = [" << detail::matrix_text(mf.E_star) << "]\n";

    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.seed = cfg.seed;
    man.started = timestamp_now();
    const std::string csv_path = detail::out_path(mf_outdir, "mfg_xbar.csv");
    std::vector<std::string> header{"k"};
    for (int j = 1; j <= pop.types.front().n(); ++j) header.push_back("xbar_" + std::to_string(j));
    CsvWriter csv(csv_path, header);
    for (long k = 0; k < mf.horizon; ++k) {
      csv.begin_row();
      csv.field(k);
      for (int j = 0; j < pop.types.front().n(); ++j) csv.field(mf.xbar.samples[k](j));
      csv.end_row();
    }
    csv.close();
    man.command = detail::join_tokens({"mfg", "solve", "--config", mf_config, "--tol",
                                       format_number(mf_tol), "--horizon",
                                       std::to_string(mf_horizon), "--out-dir", mf_outdir});
    man.outputs = {csv_path};
    man.finished = timestamp_now();
    man.write(detail::out_path(mf_outdir, "mfg_manifest.txt"));
  });

  // --- simulate ----------------------------------------------------------
  auto* cmd_sim = app.add_subcommand("simulate", "closed-loop N-agent simulation");
  std::string fs_config, fs_policy = "hard", fs_outdir = ".";
  long fs_T = -1;
  std::uint64_t fs_seed = 0;
  bool fs_seed_set = false, fs_dump = false, fs_force_mf = false;
  cmd_sim->add_option("--config", fs_config, "config file")->required();
  cmd_sim->add_option("--policy", fs_policy, "relaxed|hard");
  cmd_sim->add_option("--T", fs_T, "steps (default from config)");
  cmd_sim->add_option("--seed", fs_seed, "master seed (default from config)")
      ->each([&](const std::string&) { fs_seed_set = true; });
  cmd_sim->add_flag("--dump", fs_dump, "write per-step trajectories CSV");
  cmd_sim->add_flag("--force-mf", fs_force_mf,
                    "run even if the mean-field contraction certificate fails");
  cmd_sim->add_option("--out-dir", fs_outdir, "output directory");
  cmd_sim->callback([&] {
    const Config cfg = load_config(fs_config);
    const Population pop = build_population(cfg.population);
    const long T = fs_T > 0 ? fs_T : cfg.simulation.T;
    const std::uint64_t seed = fs_seed_set ? fs_seed : cfg.seed;
    const SchedulingPolicy policy = fs_policy == "hard" ? SchedulingPolicy::hard
                                    : fs_policy == "relaxed"
                                        ? SchedulingPolicy::relaxed
                                        : throw ConfigError("--policy must be relaxed or hard");
    const SchedulerSolution sol =
        bisect_lambda(pop, cfg.scheduler.Rd, cfg.scheduler.eps, cfg.solver,
                      cfg.scheduler.calibrate_p);
    const MeanFieldSolution mf = mf_fixed_point(pop, 1e-10, 2000, 200, !fs_force_mf);
    for (const auto& w : mf.warnings) err << "warning: " << w << "\n";

    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.seed = seed;
    man.started = timestamp_now();

    ExperimentRecord rec;
    if (fs_dump) {
      const std::string traj_path = detail::out_path(fs_outdir, "simulate_trajectories.csv");
      std::vector<std::string> header{"k", "i"};
      const int n = pop.types.front().n();
      const int m = pop.types.front().m();
      for (int j = 1; j <= n; ++j) header.push_back("x_" + std::to_string(j));
      for (int j = 1; j <= n; ++j) header.push_back("z_" + std::to_string(j));
      for (int j = 1; j <= m; ++j) header.push_back("u_" + std::to_string(j));
      header.push_back("delta");
      header.push_back("zeta");
      CsvWriter csv(traj_path, header);
      rec = run_closed_loop(pop, sol, mf, policy, T, seed, 0, cfg.simulation.burn_in, cfg.solver,
                            nullptr,
                            [&](long k, int i, const VectorXd& x, const VectorXd& z,
                                const VectorXd& u, int delta, int zeta) {
                              csv.begin_row();
                              csv.field(k);
                              csv.field(i);
                              for (int j = 0; j < x.size(); ++j) csv.field(x(j));
                              for (int j = 0; j < z.size(); ++j) csv.field(z(j));
                              for (int j = 0; j < u.size(); ++j) csv.field(u(j));
                              csv.field(delta);
                              csv.field(zeta);
                              csv.end_row();
                            });
      csv.close();
      man.outputs.push_back(traj_path);
    } else {
      rec = run_closed_loop(pop, sol, mf, policy, T, seed, 0, cfg.simulation.burn_in, cfg.solver);
    }
    for (const auto& [k, v] : rec.metrics) out << k << " = " << format_number(v) << "\n";

    std::vector<std::string> tokens{"simulate", "--config", fs_config, "--policy", fs_policy,
                                    "--T",      std::to_string(T), "--seed", std::to_string(seed)};
    if (fs_dump) tokens.push_back("--dump");
    if (fs_force_mf) tokens.push_back("--force-mf");
    tokens.push_back("--out-dir");
    tokens.push_back(fs_outdir);
    man.command = detail::join_tokens(tokens);
    man.finished = timestamp_now();
    man.write(detail::out_path(fs_outdir, "simulate_manifest.txt"));
  });

  // --- experiment --------------------------------------------------------
  auto* cmd_exp = app.add_subcommand("experiment", "scripted experiment drivers");
  cmd_exp->require_subcommand(1);

  auto* cmd_tau = cmd_exp->add_subcommand("tau-vs-rd", "thresholds across an R_d grid");
  std::string tv_config, tv_grid, tv_outdir = ".";
  cmd_tau->add_option("--config", tv_config, "config file")->required();
  cmd_tau->add_option("--Rd-grid", tv_grid, "comma-separated R_d values")->required();
  cmd_tau->add_option("--out-dir", tv_outdir, "output directory");
  cmd_tau->callback([&] {
    const Config cfg = load_config(tv_config);
    const Population pop = build_population(cfg.population);
    const auto grid = detail::parse_int_list(tv_grid, "--Rd-grid");
    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.seed = cfg.seed;
    man.started = timestamp_now();
    const auto rows = experiment_tau_vs_rd(pop, grid, cfg.scheduler.eps, cfg.solver);
    const std::string path = detail::out_path(tv_outdir, "experiment_tau_vs_rd.csv");
    CsvWriter csv(path, {"Rd", "agent", "tau"});
    for (const auto& r : rows) {
      csv.begin_row();
      csv.field(r.Rd);
      csv.field(r.agent);
      csv.field(r.tau);
      csv.end_row();
    }
    csv.close();
    man.command = detail::join_tokens(
        {"experiment", "tau-vs-rd", "--config", tv_config, "--Rd-grid", tv_grid, "--out-dir",
         tv_outdir});
    man.outputs = {path};
    man.finished = timestamp_now();
    man.write(detail::out_path(tv_outdir, "experiment_tau_vs_rd_manifest.txt"));
  });

  auto* cmd_asym = cmd_exp->add_subcommand("asymptotic", "relaxed vs hard cost across N");
  std::string as_config, as_grid, as_outdir = ".";
  double as_alpha = 0.6;
  long as_T = -1;
  int as_reps = -1;
  std::uint64_t as_seed = 0;
  bool as_seed_set = false;
  cmd_asym->add_option("--config", as_config, "config file")->required();
  cmd_asym->add_option("--alpha", as_alpha, "bandwidth ratio R_d/N");
  cmd_asym->add_option("--N", as_grid, "comma-separated population sizes")->required();
  cmd_asym->add_option("--T", as_T, "steps (default from config)");
  cmd_asym->add_option("--replications", as_reps, "replications (default from config)");
  cmd_asym->add_option("--seed", as_seed, "master seed (default from config)")
      ->each([&](const std::string&) { as_seed_set = true; });
  cmd_asym->add_option("--out-dir", as_outdir, "output directory");
  cmd_asym->callback([&] {
    const Config cfg = load_config(as_config);
    const auto grid = detail::parse_int_list(as_grid, "--N");
    const long T = as_T > 0 ? as_T : cfg.simulation.T;
    const int reps = as_reps > 0 ? as_reps : cfg.simulation.replications;
    const std::uint64_t seed = as_seed_set ? as_seed : cfg.seed;
    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.seed = seed;
    man.started = timestamp_now();
    const auto rows = experiment_asymptotic(cfg.population, as_alpha, grid, T, reps, seed,
                                            cfg.scheduler.eps, cfg.solver);
    const std::string path = detail::out_path(as_outdir, "experiment_asymptotic.csv");
    CsvWriter csv(path, {"N", "Js_relaxed", "Js_hard", "gap"});
    for (const auto& r : rows) {
      csv.begin_row();
      csv.field(r.N);
      csv.field(r.Js_relaxed);
      csv.field(r.Js_hard);
      csv.field(r.gap);
      csv.end_row();
    }
    csv.close();
    man.command = detail::join_tokens({"experiment", "asymptotic", "--config", as_config,
                                       "--alpha", format_number(as_alpha), "--N", as_grid, "--T",
                                       std::to_string(T), "--replications", std::to_string(reps),
                                       "--seed", std::to_string(seed), "--out-dir", as_outdir});
    man.outputs = {path};
    man.finished = timestamp_now();
    man.write(detail::out_path(as_outdir, "experiment_asymptotic_manifest.txt"));
  });

  auto* cmd_cva = cmd_exp->add_subcommand("cost-vs-alpha", "per-agent cost across alpha");
  std::string cv_config, cv_grid = "0.25,0.45,0.65,0.85", cv_outdir = ".";
  long cv_T = -1;
  int cv_runs = -1;
  std::uint64_t cv_seed = 0;
  bool cv_seed_set = false;
  cmd_cva->add_option("--config", cv_config, "config file")->required();
  cmd_cva->add_option("--alpha-grid", cv_grid, "comma-separated bandwidth ratios");
  cmd_cva->add_option("--T", cv_T, "steps (default from config)");
  cmd_cva->add_option("--runs", cv_runs, "replications (default from config)");
  cmd_cva->add_option("--seed", cv_seed, "master seed (default from config)")
      ->each([&](const std::string&) { cv_seed_set = true; });
  cmd_cva->add_option("--out-dir", cv_outdir, "output directory");
  cmd_cva->callback([&] {
    const Config cfg = load_config(cv_config);
    const auto grid = detail::parse_double_list(cv_grid, "--alpha-grid");
    const long T = cv_T > 0 ? cv_T : cfg.simulation.T;
    const int runs = cv_runs > 0 ? cv_runs : cfg.simulation.replications;
    const std::uint64_t seed = cv_seed_set ? cv_seed : cfg.seed;
    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.seed = seed;
    man.started = timestamp_now();
    const auto rows = experiment_cost_vs_alpha(cfg.population, grid, T, runs, seed,
                                               cfg.scheduler.eps, cfg.solver,
                                               cfg.simulation.burn_in);
    const std::string path = detail::out_path(cv_outdir, "experiment_cost_alpha.csv");
    CsvWriter csv(path, {"alpha", "run", "cost"});
    for (const auto& r : rows) {
      csv.begin_row();
      csv.field(r.alpha);
      csv.field(r.run);
      csv.field(r.cost);
      csv.end_row();
    }
    csv.close();
    man.command = detail::join_tokens({"experiment", "cost-vs-alpha", "--config", cv_config,
                                       "--alpha-grid", cv_grid, "--T", std::to_string(T),
                                       "--runs", std::to_string(runs), "--seed",
                                       std::to_string(seed), "--out-dir", cv_outdir});
    man.outputs = {path};
    man.finished = timestamp_now();
    man.write(detail::out_path(cv_outdir, "experiment_cost_alpha_manifest.txt"));
  });

  // --- dump-config / replay ---------------------------------------------
  auto* cmd_dumpcfg = app.add_subcommand("dump-config", "canonical config dump");
  std::string dc_config;
  cmd_dumpcfg->add_option("--config", dc_config, "config file")->required();
  cmd_dumpcfg->callback([&] { out << dump_config(load_config(dc_config)); });

  auto* cmd_replay = app.add_subcommand("replay", "re-run a recorded experiment");
  std::string rp_manifest, rp_outdir;
  cmd_replay->add_option("--manifest", rp_manifest, "manifest file")->required();
  cmd_replay->add_option("--out-dir", rp_outdir, "override output directory")->required();
  cmd_replay->callback([&] {
    const RunManifest man = RunManifest::read(rp_manifest);
    std::vector<std::string> tokens;
    std::stringstream ss(man.command);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (tokens.empty()) throw ConfigError("manifest has an empty command");
    // Integrity: the referenced config must hash to the recorded value.
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      if (tokens[i] == "--config") {
        if (config_hash(load_config(tokens[i + 1])) != man.config_hash)
          throw DomainError("config file changed since the recorded run");
      }
      if (tokens[i] == "--out-dir") tokens[i + 1] = rp_outdir;
    }
    rc = run_cli(tokens, out, err);
  });

  std::vector<const char*> argv;
  argv.push_back("waoi");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

}  // namespace cli
}  // namespace waoi
