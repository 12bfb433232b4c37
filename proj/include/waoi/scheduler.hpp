#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "waoi/threshold.hpp"

namespace waoi {

enum class SchedulingPolicy { relaxed, hard };

// Output of the relaxed solve: lambda*-bracket, the two adjacent threshold
// vectors it induces, the randomization probability and the aggregate rates.
struct SchedulerSolution {
  double lambda_l = 0.0;
  double lambda_u = 0.0;
  std::vector<int> tau_l;  // per agent, at lambda_l
  std::vector<int> tau_u;  // per agent, at lambda_u
  double p = 1.0;
  double Rd_l = 0.0;  // W(tau_l) >= R_d
  double Rd_u = 0.0;  // W(tau_u) <= R_d
  int Rd = 0;
  int N = 0;
  bool degenerate = false;  // Rd_l == Rd_u; constraint already met
  bool calibrated = false;  // p re-solved against the stationary chain rate
  std::vector<std::string> warnings;
};

// W = sum_i 1 / (tau_i + 1), the aggregate update rate of deterministic
// threshold policies.
inline double update_rate_sum(const std::vector<int>& taus) {
  double w = 0.0;
  for (int tau : taus) {
    if (tau < 0) throw ConfigError("thresholds must be nonnegative");
    w += 1.0 / (tau + 1.0);
  }
  return w;
}

struct ChainStationary {
  std::vector<double> pi;  // over {0..tau_u}
  double rate = 0.0;       // stationary transmission probability
};

// Stationary law of the two-threshold chain: uniform mass up to tau_l, then
// geometric decay by (1-p) per state across the randomized window, normalized.
inline ChainStationary stationary_distribution(int tau_l, int tau_u, double p) {
  if (tau_l < 0 || tau_u < tau_l) throw ConfigError("need 0 <= tau_l <= tau_u");
  if (p < 0.0 || p > 1.0) throw ConfigError("p must lie in [0,1]");
  ChainStationary out;
  out.pi.assign(tau_u + 1, 0.0);
  double level = 1.0;
  for (int d = 0; d <= tau_u; ++d) {
    if (d > tau_l) level *= (1.0 - p);
    out.pi[d] = level;
  }
  double mass = 0.0;
  for (double x : out.pi) mass += x;
  for (double& x : out.pi) x /= mass;
  double rate = out.pi[tau_u];
  for (int d = tau_l; d < tau_u; ++d) rate += p * out.pi[d];
  out.rate = rate;
  return out;
}

// ||P' pi - pi||_inf for the chain above; used by validation and tests.
inline double chain_residual(int tau_l, int tau_u, double p, const std::vector<double>& pi) {
  std::vector<double> next(tau_u + 1, 0.0);
  for (int d = 0; d <= tau_u; ++d) {
    double p_reset;
    if (d >= tau_u)
      p_reset = 1.0;
    else if (d >= tau_l)
      p_reset = p;
    else
      p_reset = 0.0;
    next[0] += p_reset * pi[d];
    if (d + 1 <= tau_u) next[d + 1] += (1.0 - p_reset) * pi[d];
  }
  double r = 0.0;
  for (int d = 0; d <= tau_u; ++d) r = std::max(r, std::abs(next[d] - pi[d]));
  return r;
}

// Relaxed scheduling decision. Consumes exactly one uniform per call whatever
// branch is taken, so matched-seed runs under different policies stay coupled.
inline int randomized_decision(int delta, int tau_l, int tau_u, double p, RngStream& rng) {
  const double u = rng.uniform();
  if (delta >= tau_u) return 1;
  if (delta >= tau_l) return u < p ? 1 : 0;
  return 0;
}

// Uniformly random R_d-subset of the candidates (partial Fisher-Yates);
// pass-through when the budget is not binding.
inline std::vector<int> hard_bandwidth_project(const std::vector<int>& candidates, int R_d,
                                               RngStream& rng) {
  if (R_d < 1) throw ConfigError("R_d must be >= 1");
  if (static_cast<int>(candidates.size()) <= R_d) return candidates;
  std::vector<int> pool = candidates;
  for (int i = 0; i < R_d; ++i) {
    const auto j = i + static_cast<int>(rng.uniform_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(R_d);
  return pool;
}

// Age penalty omega charged per over-budget candidate:
//   sum_{l>=0} (1 - R_d/Omega_k)^{l+1} g(tau + l),
// zero unless the budget is exceeded and delta >= tau. Summed until the
// certified geometric tail falls below tol.
inline double age_penalty_omega(int delta, const AgentType& type, int omega_k, int R_d, int tau,
                                double tol) {
  if (R_d < 1) throw ConfigError("R_d must be >= 1");
  if (tau < 0) throw ConfigError("tau must be >= 0");
  if (omega_k <= R_d) return 0.0;
  if (delta < tau) return 0.0;
  const double q = 1.0 - static_cast<double>(R_d) / omega_k;
  const double a_frob2 = type.A.squaredNorm();
  if (q * a_frob2 >= 1.0)
    throw DomainError("age penalty series diverges: (1 - R_d/Omega) ||A||_F^2 >= 1");

  // Advance the error-covariance recurrence to tau, then stream terms.
  MatrixXd m = Eigen::LLT<MatrixXd>(type.K_W).matrixL();
  double h = 0.0;
  for (int d = 1; d <= tau; ++d) {
    h += m.squaredNorm();
    m = type.A * m;
  }
  double total = 0.0;
  double qpow = q;  // q^{l+1}
  double prev_term = -1.0;
  double prev_ratio = 2.0;
  for (long l = 0; l < 1'000'000; ++l) {
    const double g_cur = h * (tau + l);
    const double term = qpow * g_cur;
    total += term;
    if (term > 0.0 && prev_term > 0.0) {
      const double ratio = term / prev_term;
      if (ratio < 1.0 && ratio <= prev_ratio && l >= 4) {
        if (term * ratio / (1.0 - ratio) <= 0.5 * tol) return total;
      }
      prev_ratio = ratio;
    }
    prev_term = term;
    h += m.squaredNorm();
    m = type.A * m;
    qpow *= q;
  }
  throw DomainError("age penalty tail failed to certify below tol");
}

// Lambda bisection against the soft rate constraint. Doubling from
// (0, 1) until W(lambda_u) <= R_d, then bisection to width eps; thresholds at
// the bracket ends give the two deterministic policies mixed with probability
// p = (R_d - Rd_u) / (Rd_l - Rd_u).
inline SchedulerSolution bisect_lambda(const Population& pop, int R_d, double eps = 1e-6,
                                       const SolverSettings& settings = {},
                                       bool calibrate_p = false) {
  if (R_d < 1) throw ConfigError("R_d must be >= 1");
  if (eps <= 0.0) throw ConfigError("eps must be > 0");
  const int n_types = static_cast<int>(pop.types.size());

  std::vector<std::unique_ptr<ThresholdSolver>> solvers;
  solvers.reserve(n_types);
  for (const auto& t : pop.types)
    solvers.push_back(std::make_unique<ThresholdSolver>(t, settings));

  // Aggregate rate at a price: thresholds are solved once per *type*.
  std::vector<int> type_taus(n_types, 0);
  const auto probe = [&](double lambda) {
    double w = 0.0;
    for (int t = 0; t < n_types; ++t) {
      type_taus[t] = solvers[t]->average_cost(lambda).tau;
      w += pop.type_counts[t] / (type_taus[t] + 1.0);
    }
    return w;
  };
  const auto expand = [&](const std::vector<int>& per_type) {
    std::vector<int> per_agent(pop.N);
    for (int i = 0; i < pop.N; ++i) per_agent[i] = per_type[pop.assignment[i]];
    return per_agent;
  };

  SchedulerSolution sol;
  sol.Rd = R_d;
  sol.N = pop.N;

  if (R_d >= pop.N) {
    // No bottleneck: zero price, everyone transmits every step.
    sol.lambda_l = sol.lambda_u = 0.0;
    sol.tau_l.assign(pop.N, 0);
    sol.tau_u.assign(pop.N, 0);
    sol.Rd_l = sol.Rd_u = pop.N;
    sol.p = 1.0;
    sol.degenerate = true;
    return sol;
  }

  double lambda_l = 0.0;
  double lambda_u = 1.0;
  std::vector<int> taus_l = type_taus;  // at lambda_l = 0 all taus are 0
  double w_l = static_cast<double>(pop.N);
  double w_u = probe(lambda_u);
  std::vector<int> taus_u = type_taus;
  while (w_u > R_d) {
    lambda_l = lambda_u;
    w_l = w_u;
    taus_l = taus_u;
    lambda_u *= 2.0;
    if (lambda_u > 1e18) throw DomainError("lambda doubling exceeded cap; problem infeasible");
    w_u = probe(lambda_u);
    taus_u = type_taus;
  }
  while (lambda_u - lambda_l > eps) {
    const double mid = 0.5 * (lambda_l + lambda_u);
    const double w_mid = probe(mid);
    if (w_mid <= R_d) {
      lambda_u = mid;
      w_u = w_mid;
      taus_u = type_taus;
    } else {
      lambda_l = mid;
      w_l = w_mid;
      taus_l = type_taus;
    }
  }

  sol.lambda_l = lambda_l;
  sol.lambda_u = lambda_u;
  sol.tau_l = expand(taus_l);
  sol.tau_u = expand(taus_u);
  sol.Rd_l = w_l;
  sol.Rd_u = w_u;
  for (int i = 0; i < pop.N; ++i)
    if (sol.tau_u[i] < sol.tau_l[i])
      throw DomainError("threshold monotonicity violated across the lambda bracket");

  if (sol.Rd_l == sol.Rd_u) {
    sol.degenerate = true;
    sol.p = 1.0;
  } else {
    sol.p = (R_d - sol.Rd_u) / (sol.Rd_l - sol.Rd_u);
    if (sol.p < 0.0 || sol.p > 1.0) {
      sol.warnings.push_back("p fell outside [0,1] numerically; clamped");
      sol.p = std::clamp(sol.p, 0.0, 1.0);
    }
  }

  if (calibrate_p && !sol.degenerate) {
    // Re-solve p so the aggregate stationary chain rate meets R_d exactly.
    const auto chain_rate = [&](double p) {
      double r = 0.0;
      for (int i = 0; i < pop.N; ++i)
        r += stationary_distribution(sol.tau_l[i], sol.tau_u[i], p).rate;
      return r;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
      const double mid = 0.5 * (lo + hi);
      (chain_rate(mid) < R_d ? lo : hi) = mid;
    }
    sol.p = 0.5 * (lo + hi);
    sol.calibrated = true;
  }
  return sol;
}

struct AoiSimulationResult {
  double J_S = 0.0;  // (1/NT) sum_k sum_i g(delta_i[k])
  std::vector<double> per_agent_rate;
  double aggregate_rate = 0.0;  // mean transmissions per step
  long T = 0;
};

// AoI-only closed-loop of the scheduling layer (plants are irrelevant to J^S
// by the no-dual-effect decoupling). Per-agent decision streams are keyed by
// agent index and the BS projection has its own stream, so matched-seed runs
// under relaxed/hard policies consume identical per-agent randomness.
inline AoiSimulationResult simulate_scheduling(
    const Population& pop, const SchedulerSolution& sol, SchedulingPolicy policy, long T,
    std::uint64_t master_seed, std::uint64_t run_id = 0,
    const std::function<void(long, int, int, int, double)>& row_sink = nullptr,
    const SolverSettings& settings = {}) {
  if (T < 1) throw ConfigError("T must be >= 1");
  if (static_cast<int>(sol.tau_l.size()) != pop.N)
    throw ConfigError("scheduler solution does not match the population");

  std::vector<WaoiTable> tables;
  tables.reserve(pop.types.size());
  for (const auto& t : pop.types) tables.emplace_back(t, settings.delta_max);

  std::vector<RngStream> agent_rng;
  agent_rng.reserve(pop.N);
  for (int i = 0; i < pop.N; ++i)
    agent_rng.emplace_back(master_seed,
                           StreamId{run_id, static_cast<std::uint64_t>(i) + 1,
                                    StreamPurpose::decision});
  RngStream bs_rng(master_seed, StreamId{run_id, 0, StreamPurpose::bs_projection});

  std::vector<int> delta(pop.N, 0);
  std::vector<int> candidates;
  std::vector<char> scheduled(pop.N, 0);
  std::vector<long> transmissions(pop.N, 0);

  double cost = 0.0;
  long total_tx = 0;
  for (long k = 0; k < T; ++k) {
    candidates.clear();
    for (int i = 0; i < pop.N; ++i) {
      if (randomized_decision(delta[i], sol.tau_l[i], sol.tau_u[i], sol.p, agent_rng[i]))
        candidates.push_back(i);
    }
    std::fill(scheduled.begin(), scheduled.end(), 0);
    if (policy == SchedulingPolicy::hard) {
      for (int i : hard_bandwidth_project(candidates, sol.Rd, bs_rng)) scheduled[i] = 1;
    } else {
      for (int i : candidates) scheduled[i] = 1;
    }
    int tx_this_step = 0;
    for (int i = 0; i < pop.N; ++i) {
      const bool tx = scheduled[i] != 0;
      delta[i] = aoi_update(delta[i], tx);
      if (tx) {
        ++transmissions[i];
        ++tx_this_step;
      }
      const double g = tables[pop.assignment[i]].g(delta[i]);
      cost += g;
      if (row_sink) row_sink(k, i, delta[i], tx ? 1 : 0, g);
    }
    if (policy == SchedulingPolicy::hard && tx_this_step > sol.Rd)
      throw DomainError("hard bandwidth constraint violated");  // unreachable by construction
    total_tx += tx_this_step;
  }

  AoiSimulationResult out;
  out.T = T;
  out.J_S = cost / (static_cast<double>(pop.N) * T);
  out.per_agent_rate.resize(pop.N);
  for (int i = 0; i < pop.N; ++i)
    out.per_agent_rate[i] = static_cast<double>(transmissions[i]) / T;
  out.aggregate_rate = static_cast<double>(total_tx) / T;
  return out;
}

inline double scheduling_cost(SchedulingPolicy policy, const Population& pop,
                              const SchedulerSolution& sol, long T, std::uint64_t seed,
                              std::uint64_t run_id = 0, const SolverSettings& settings = {}) {
  return simulate_scheduling(pop, sol, policy, T, seed, run_id, nullptr, settings).J_S;
}

}  // namespace waoi
