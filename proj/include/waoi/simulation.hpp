#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "waoi/meanfield.hpp"
#include "waoi/scheduler.hpp"

namespace waoi {

struct ExperimentRecord {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int N = 0;
  int Rd = 0;
  long T = 0;
  std::map<std::string, double> metrics;
};

// Full per-step data, collected only for small runs (tests, --dump).
struct RunTrajectories {
  long T = 0;
  int N = 0;
  std::vector<std::vector<VectorXd>> x;  // [k][i]
  std::vector<std::vector<VectorXd>> u;  // [k][i]
};

using StepRowSink =
    std::function<void(long k, int i, const VectorXd& x, const VectorXd& z, const VectorXd& u,
                       int delta, int zeta)>;

// Closed-loop N-agent simulation. Per step: relaxed decisions, hard
// projection (hard policy only), decoder updates, tracking controls from
// (z, r[k+1]), plant steps with fresh noise. Stage metrics are taken after
// the decode/control phase, i.e. on (x[k], z[k], u[k], delta[k]).
inline ExperimentRecord run_closed_loop(const Population& pop, const SchedulerSolution& sol,
                                        const MeanFieldSolution& mf, SchedulingPolicy policy,
                                        long T, std::uint64_t master_seed,
                                        std::uint64_t run_id = 0, double burn_in_frac = 0.1,
                                        const SolverSettings& settings = {},
                                        RunTrajectories* collect = nullptr,
                                        const StepRowSink& row_sink = nullptr) {
  if (T < 1) throw ConfigError("T must be >= 1");
  if (static_cast<int>(sol.tau_l.size()) != pop.N)
    throw ConfigError("scheduler solution does not match the population");
  if (mf.gains.size() != pop.types.size())
    throw ConfigError("mean-field solution does not match the population");
  if (burn_in_frac < 0.0 || burn_in_frac >= 1.0)
    throw ConfigError("burn_in must lie in [0,1)");

  const int n = pop.types.front().n();
  const std::size_t n_types = pop.types.size();

  std::vector<WaoiTable> tables;
  std::vector<GaussianVectorSampler> noise;
  std::vector<GaussianVectorSampler> init;
  std::vector<MatrixXd> BL;
  for (std::size_t t = 0; t < n_types; ++t) {
    tables.emplace_back(pop.types[t], settings.delta_max);
    noise.emplace_back(pop.types[t].K_W);
    init.emplace_back(pop.types[t].Sigma_x);
    BL.push_back(pop.types[t].B * mf.gains[t].L);
  }

  std::vector<RngStream> decision_rng, noise_rng;
  for (int i = 0; i < pop.N; ++i) {
    const auto agent = static_cast<std::uint64_t>(i) + 1;
    decision_rng.emplace_back(master_seed, StreamId{run_id, agent, StreamPurpose::decision});
    noise_rng.emplace_back(master_seed, StreamId{run_id, agent, StreamPurpose::plant_noise});
  }
  RngStream bs_rng(master_seed, StreamId{run_id, 0, StreamPurpose::bs_projection});

  // Fresh-start init: x0 ~ N(nu0, Sigma_x), decoder synchronized (z = x,
  // delta = 0) so the error-AoI law holds from the first step.
  std::vector<VectorXd> x(pop.N), z(pop.N), u_prev(pop.N);
  std::vector<int> delta(pop.N, 0);
  for (int i = 0; i < pop.N; ++i) {
    const int t = pop.assignment[i];
    RngStream r0(master_seed, StreamId{run_id, static_cast<std::uint64_t>(i) + 1,
                                       StreamPurpose::initial_state});
    x[i] = pop.types[t].nu0 + init[t].sample(r0);
    z[i] = x[i];
    u_prev[i] = VectorXd::Zero(pop.types[t].m());
  }

  const long burn = static_cast<long>(burn_in_frac * T);
  double js = 0.0, js_burn = 0.0;
  double jin = 0.0, jin_burn = 0.0;
  double jtrack = 0.0, jtrack_burn = 0.0;
  double eps_acc = 0.0, eps_burn = 0.0;
  double xmsq = 0.0;
  long total_tx = 0;

  if (collect) {
    collect->T = T;
    collect->N = pop.N;
    collect->x.assign(T, {});
    collect->u.assign(T, {});
  }

  // Mean-field lookups, advanced incrementally past the stored horizon.
  VectorXd xbar_next = mf.xbar.value(0);
  std::vector<int> candidates;
  std::vector<char> scheduled(pop.N, 0);
  std::vector<VectorXd> u(pop.N);

  for (long k = 0; k < T; ++k) {
    const VectorXd xbar_k = xbar_next;
    xbar_next = k + 1 < mf.horizon ? mf.xbar.samples[k + 1]
                                   : static_cast<VectorXd>(mf.E_star * xbar_k);
    std::vector<VectorXd> r_next(n_types);
    for (std::size_t t = 0; t < n_types; ++t)
      r_next[t] = k + 1 <= mf.horizon ? mf.r[t][k + 1]
                                      : static_cast<VectorXd>(-mf.S_inf[t] * xbar_next);

    // (1) relaxed decisions, (2) projection
    candidates.clear();
    for (int i = 0; i < pop.N; ++i)
      if (randomized_decision(delta[i], sol.tau_l[i], sol.tau_u[i], sol.p, decision_rng[i]))
        candidates.push_back(i);
    std::fill(scheduled.begin(), scheduled.end(), 0);
    if (policy == SchedulingPolicy::hard) {
      for (int i : hard_bandwidth_project(candidates, sol.Rd, bs_rng)) scheduled[i] = 1;
    } else {
      for (int i : candidates) scheduled[i] = 1;
    }

    // (3) decoders, (4) controls
    VectorXd mean_x = VectorXd::Zero(n);
    for (int i = 0; i < pop.N; ++i) mean_x += x[i];
    mean_x /= pop.N;

    double step_js = 0.0, step_jin = 0.0, step_jtrack = 0.0, step_xmsq = 0.0;
    int tx_this_step = 0;
    for (int i = 0; i < pop.N; ++i) {
      const int t = pop.assignment[i];
      const bool tx = scheduled[i] != 0;
      if (tx) {
        z[i] = x[i];
        delta[i] = 0;
        ++tx_this_step;
      } else {
        z[i] = pop.types[t].A * z[i] + pop.types[t].B * u_prev[i];
        delta[i] += 1;
      }
      u[i] = -mf.gains[t].Pi * z[i] - mf.gains[t].L * r_next[t];

      step_js += tables[t].g(delta[i]);
      const VectorXd dev = x[i] - mean_x;
      const VectorXd trk = x[i] - xbar_k;
      const double u_cost = u[i].dot(pop.types[t].R * u[i]);
      step_jin += dev.dot(pop.types[t].Q * dev) + u_cost;
      step_jtrack += trk.dot(pop.types[t].Q * trk) + u_cost;
      step_xmsq += x[i].squaredNorm();

      if (row_sink) row_sink(k, i, x[i], z[i], u[i], delta[i], tx ? 1 : 0);
    }
    if (policy == SchedulingPolicy::hard && tx_this_step > sol.Rd)
      throw DomainError("hard bandwidth constraint violated");
    total_tx += tx_this_step;

    const double step_eps = (mean_x - xbar_k).squaredNorm();
    if (!std::isfinite(step_xmsq))
      throw DomainError("state diverged (NaN/overflow) at step " + std::to_string(k));

    js += step_js;
    jin += step_jin;
    jtrack += step_jtrack;
    eps_acc += step_eps;
    xmsq += step_xmsq;
    if (k >= burn) {
      js_burn += step_js;
      jin_burn += step_jin;
      jtrack_burn += step_jtrack;
      eps_burn += step_eps;
    }

    if (collect) {
      collect->x[k] = x;
      collect->u[k] = u;
    }

    // (5) plants
    for (int i = 0; i < pop.N; ++i) {
      const int t = pop.assignment[i];
      x[i] = pop.types[t].A * x[i] + pop.types[t].B * u[i] + noise[t].sample(noise_rng[i]);
      u_prev[i] = u[i];
    }
  }

  const double nt = static_cast<double>(pop.N) * T;
  const double nt_burn = static_cast<double>(pop.N) * (T - burn);
  ExperimentRecord rec;
  rec.seed = master_seed;
  rec.N = pop.N;
  rec.Rd = sol.Rd;
  rec.T = T;
  rec.metrics["J_S"] = js / nt;
  rec.metrics["J_S_burn"] = js_burn / nt_burn;
  rec.metrics["J_iN_mean"] = jin / nt;
  rec.metrics["J_iN_mean_burn"] = jin_burn / nt_burn;
  rec.metrics["J_track_mean"] = jtrack / nt;
  rec.metrics["J_track_mean_burn"] = jtrack_burn / nt_burn;
  rec.metrics["eps_T"] = eps_acc / T;
  rec.metrics["eps_T_burn"] = eps_burn / (T - burn);
  rec.metrics["achieved_rate"] = total_tx / nt;
  rec.metrics["x_msq_mean"] = xmsq / nt;
  return rec;
}

// Per-agent consensus cost over collected trajectories:
// time-average of ||x_i - mean_j x_j||_Q^2 + ||u_i||_R^2.
inline std::vector<double> consensus_cost(const RunTrajectories& traj, const Population& pop) {
  std::vector<double> cost(traj.N, 0.0);
  const int n = pop.types.front().n();
  for (long k = 0; k < traj.T; ++k) {
    VectorXd mean = VectorXd::Zero(n);
    for (int i = 0; i < traj.N; ++i) mean += traj.x[k][i];
    mean /= traj.N;
    for (int i = 0; i < traj.N; ++i) {
      const auto& type = pop.type_of(i);
      const VectorXd dev = traj.x[k][i] - mean;
      cost[i] += dev.dot(type.Q * dev) + traj.u[k][i].dot(type.R * traj.u[k][i]);
    }
  }
  for (double& c : cost) c /= traj.T;
  return cost;
}

// Same with the empirical mean replaced by the equilibrium trajectory.
inline std::vector<double> tracking_cost(const RunTrajectories& traj, const Population& pop,
                                         const Trajectory& xbar_star) {
  std::vector<double> cost(traj.N, 0.0);
  for (long k = 0; k < traj.T; ++k) {
    const VectorXd xb = xbar_star.value(k);
    for (int i = 0; i < traj.N; ++i) {
      const auto& type = pop.type_of(i);
      const VectorXd dev = traj.x[k][i] - xb;
      cost[i] += dev.dot(type.Q * dev) + traj.u[k][i].dot(type.R * traj.u[k][i]);
    }
  }
  for (double& c : cost) c /= traj.T;
  return cost;
}

// Replication-averaged mean-square mean-field approximation error.
inline double mf_approx_error(const std::vector<double>& per_replication_eps) {
  if (per_replication_eps.empty()) throw ConfigError("need at least one replication");
  double s = 0.0;
  for (double e : per_replication_eps) s += e;
  return s / per_replication_eps.size();
}

}  // namespace waoi
