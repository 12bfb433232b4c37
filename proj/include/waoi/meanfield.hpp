#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "waoi/model.hpp"

namespace waoi {

// Tracking-control gain set derived from the algebraic Riccati solution:
//   L = (R + B'KB)^{-1} B',  Pi = L K A,  H = A - B Pi.
struct GainSet {
  MatrixXd K;
  MatrixXd L;
  MatrixXd Pi;
  MatrixXd H;
  double H_norm = 0.0;        // spectral norm of H
  double are_residual = 0.0;  // max-abs residual of the ARE
};

// Fixed-point iteration K <- A'(KA - KB Pi) + Q from K0 = Q, Pi recomputed
// each sweep. Asserts K > 0, residual <= 1e-10 and rho(H) < 1 on exit.
inline GainSet solve_riccati(const AgentType& type, double tol = 1e-12,
                             long max_iter = 100000) {
  const MatrixXd& A = type.A;
  const MatrixXd& B = type.B;
  const MatrixXd& Q = type.Q;
  const MatrixXd& R = type.R;

  MatrixXd K = Q;
  MatrixXd L, Pi;
  bool converged = false;
  for (long it = 0; it < max_iter; ++it) {
    L = (R + B.transpose() * K * B).llt().solve(B.transpose());
    Pi = L * K * A;
    MatrixXd next = A.transpose() * (K * A - K * B * Pi) + Q;
    next = 0.5 * (next + next.transpose());
    const double diff = (next - K).cwiseAbs().maxCoeff();
    K = next;
    if (diff <= tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw DomainError("Riccati iteration did not converge");

  GainSet g;
  g.K = K;
  g.L = (R + B.transpose() * K * B).llt().solve(B.transpose());
  g.Pi = g.L * K * A;
  g.H = A - B * g.Pi;
  g.H_norm = spectral_norm(g.H);
  g.are_residual =
      (K - A.transpose() * (K * A - K * B * g.Pi) - Q).cwiseAbs().maxCoeff();
  if (g.are_residual > 1e-10) throw DomainError("ARE residual above 1e-10");
  // K > 0 whenever Q > 0; the Q = 0 limit legitimately returns K = 0.
  if (!is_positive_semidefinite(K))
    throw DomainError("Riccati solution is indefinite");
  if (is_positive_definite(type.Q, 0.0) && !is_positive_definite(K, 0.0))
    throw DomainError("Riccati solution is not positive definite");
  if (spectral_radius(g.H) >= 1.0)
    throw DomainError("closed-loop matrix H is not stable");
  return g;
}

// Bounded trajectory: stored samples plus a linear tail map,
// value(k) = tail^{k-len+1} * samples.back() for k >= len. A zero tail
// represents truncation, identity a constant continuation.
struct Trajectory {
  std::vector<VectorXd> samples;
  MatrixXd tail;

  static Trajectory zero_tail(std::vector<VectorXd> s) {
    Trajectory t;
    const int n = static_cast<int>(s.front().size());
    t.samples = std::move(s);
    t.tail = MatrixXd::Zero(n, n);
    return t;
  }
  static Trajectory constant(const VectorXd& c, long len) {
    Trajectory t;
    t.samples.assign(len, c);
    t.tail = MatrixXd::Identity(c.size(), c.size());
    return t;
  }

  long size() const { return static_cast<long>(samples.size()); }
  VectorXd value(long k) const {
    if (k < size()) return samples[k];
    VectorXd v = samples.back();
    for (long j = size(); j <= k; ++j) v = tail * v;
    return v;
  }
  double sup_norm() const {
    double s = 0.0;
    for (const auto& v : samples) s = std::max(s, v.norm());
    return s;
  }
};

namespace detail {

// Smallest j with ||(H')^j|| * (sum_m ||(H')^m||) * coeff <= bound.
inline long geometric_cutoff(const MatrixXd& H, double coeff, double bound, long cap = 200000) {
  const MatrixXd Ht = H.transpose();
  double series = 0.0;
  {
    MatrixXd p = MatrixXd::Identity(H.rows(), H.cols());
    for (long m = 0; m < cap; ++m) {
      const double nrm = spectral_norm(p);
      series += nrm;
      if (nrm <= 1e-16 * series) break;
      p = Ht * p;
      if (m + 1 == cap) throw DomainError("H power series failed to converge (rho(H) >= 1?)");
    }
  }
  MatrixXd p = MatrixXd::Identity(H.rows(), H.cols());
  for (long j = 0; j < cap; ++j) {
    if (spectral_norm(p) * series * coeff <= bound) return j;
    p = Ht * p;
  }
  throw DomainError("geometric tail cutoff not found within cap");
}

}  // namespace detail

// r[k] = -sum_{j>=k} (H^{j-k})' Q xbar[j], via the backward recursion
// r[k] = H' r[k+1] - Q xbar[k] started at a certified tail cutoff.
// Returns r[0..horizon_out].
inline std::vector<VectorXd> r_trajectory(const Trajectory& xbar, const GainSet& gains,
                                          const AgentType& type, double tail_tol,
                                          long horizon_out) {
  if (xbar.samples.empty()) throw ConfigError("r_trajectory: empty trajectory");
  const double sup_x = xbar.sup_norm();
  if (!std::isfinite(sup_x)) throw DomainError("r_trajectory: unbounded trajectory");
  const double qn = spectral_norm(type.Q);
  const long pad =
      detail::geometric_cutoff(gains.H, qn * std::max(sup_x, 1e-300), tail_tol);
  const long cutoff = horizon_out + pad;

  // Extend samples once so the backward pass is O(cutoff).
  std::vector<VectorXd> x(cutoff + 1);
  for (long k = 0; k <= cutoff; ++k)
    x[k] = k < xbar.size() ? xbar.samples[k]
                           : static_cast<VectorXd>(xbar.tail * x[k - 1]);

  const MatrixXd Ht = gains.H.transpose();
  std::vector<VectorXd> r(horizon_out + 1);
  VectorXd acc = VectorXd::Zero(type.n());
  for (long k = cutoff; k >= 0; --k) {
    acc = Ht * acc - type.Q * x[k];
    if (k <= horizon_out) r[k] = acc;
  }
  return r;
}

// U = -Pi z - L r[k+1].
inline VectorXd control_action(const VectorXd& z, const VectorXd& r_next, const GainSet& gains) {
  return -gains.Pi * z - gains.L * r_next;
}

// Type-theta aggregate: Xhat[k+1] = H Xhat[k] - B L r[k+1], Xhat[0] = nu0.
inline std::vector<VectorXd> mf_aggregate(const Trajectory& xbar, const AgentType& type,
                                          const GainSet& gains, long horizon,
                                          double tail_tol = 1e-12) {
  const auto r = r_trajectory(xbar, gains, type, tail_tol, horizon);
  std::vector<VectorXd> xhat(horizon + 1);
  xhat[0] = type.nu0;
  const MatrixXd BL = type.B * gains.L;
  for (long k = 0; k < horizon; ++k) xhat[k + 1] = gains.H * xhat[k] - BL * r[k + 1];
  return xhat;
}

// Mean-field operator T(xbar)[k] = sum_theta Xhat_theta[k] P(theta).
inline std::vector<VectorXd> mf_operator(const Trajectory& xbar, const Population& pop,
                                         const std::vector<GainSet>& gains, long horizon,
                                         double tail_tol = 1e-12) {
  std::vector<VectorXd> out(horizon + 1, VectorXd::Zero(pop.types.front().n()));
  for (std::size_t t = 0; t < pop.types.size(); ++t) {
    const auto xhat = mf_aggregate(xbar, pop.types[t], gains[t], horizon, tail_tol);
    for (long k = 0; k <= horizon; ++k) out[k] += pop.weights[t] * xhat[k];
  }
  return out;
}

// upsilon = sum_theta ||Q|| ||B L|| / (1 - ||H||)^2 P(theta); the Lipschitz
// modulus of the mean-field operator.
inline double contraction_constant(const Population& pop, const std::vector<GainSet>& gains) {
  double u = 0.0;
  for (std::size_t t = 0; t < pop.types.size(); ++t) {
    const double hn = gains[t].H_norm;
    if (hn >= 1.0) return std::numeric_limits<double>::infinity();
    u += pop.weights[t] * spectral_norm(pop.types[t].Q) *
         spectral_norm(pop.types[t].B * gains[t].L) / ((1.0 - hn) * (1.0 - hn));
  }
  return u;
}

struct TypeAssumptionReport {
  std::string id;
  double frob_A = 0.0;
  double frob_bound = 0.0;
  bool a2_pass = false;
  bool controllable = false;
  bool observable = false;
  double H_norm = 0.0;
  double H_check = 0.0;  // ||H|| + upsilon
  bool a4_pass = false;
};

struct AssumptionsReport {
  double alpha = 0.0;
  double upsilon = 0.0;
  std::vector<TypeAssumptionReport> per_type;
  bool a2_all = true;
  bool a3_all = true;
  bool a4_all = true;

  bool all_pass() const { return a2_all && a3_all && a4_all; }

  std::string to_text() const {
    std::ostringstream os;
    os << "assumptions report (alpha = " << alpha << ", upsilon = " << upsilon << ")\n";
    for (const auto& t : per_type) {
      os << "  type " << t.id << ": |A|_F = " << t.frob_A << " (bound " << t.frob_bound
         << ") " << (t.a2_pass ? "pass" : "FAIL") << "; controllable "
         << (t.controllable ? "yes" : "NO") << ", observable " << (t.observable ? "yes" : "NO")
         << "; |H| = " << t.H_norm << ", |H|+upsilon = " << t.H_check << " "
         << (t.a4_pass ? "pass" : "FAIL") << "\n";
    }
    os << "  overall: " << (all_pass() ? "PASS" : "FAIL") << "\n";
    return os.str();
  }
};

// Frobenius bandwidth bound, controllability/observability ranks and the
// contraction margin, per type. Reporting only; callers gate on the result.
inline AssumptionsReport check_assumptions(const Population& pop, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
  AssumptionsReport rep;
  rep.alpha = alpha;
  const double bound = alpha < 1.0 ? std::sqrt(1.0 / (1.0 - alpha))
                                   : std::numeric_limits<double>::infinity();

  std::vector<GainSet> gains;
  bool gains_ok = true;
  for (const auto& type : pop.types) {
    TypeAssumptionReport t;
    t.id = type.id;
    t.frob_A = type.A.norm();
    t.frob_bound = bound;
    t.a2_pass = t.frob_A > 0.0 && t.frob_A < bound;
    t.controllable = is_controllable(type.A, type.B);
    t.observable = is_observable(type.A, sqrt_psd(type.Q));
    rep.a2_all = rep.a2_all && t.a2_pass;
    rep.a3_all = rep.a3_all && t.controllable && t.observable;
    if (t.controllable && t.observable && gains_ok) {
      try {
        gains.push_back(solve_riccati(type));
        t.H_norm = gains.back().H_norm;
      } catch (const DomainError&) {
        gains_ok = false;
      }
    } else {
      gains_ok = false;
    }
    rep.per_type.push_back(t);
  }
  if (gains_ok && gains.size() == pop.types.size()) {
    rep.upsilon = contraction_constant(pop, gains);
    for (std::size_t i = 0; i < rep.per_type.size(); ++i) {
      auto& t = rep.per_type[i];
      t.H_check = t.H_norm + rep.upsilon;
      t.a4_pass = t.H_check < 1.0;
      rep.a4_all = rep.a4_all && t.a4_pass;
    }
  } else {
    rep.upsilon = std::numeric_limits<double>::infinity();
    rep.a4_all = false;
  }
  return rep;
}

// Linear mean-field consistency operator, Picard-iterated inside the unit
// ball: T(E) = sum_theta [H + B L sum_{a>=0} (H^a)' Q E^{a+1}] P(theta),
// from E0 = sum_theta H(theta) P(theta).
inline MatrixXd linear_mfe_operator(const Population& pop, const std::vector<GainSet>& gains,
                                    double tol = 1e-12, long max_iter = 100000,
                                    std::vector<std::string>* warnings = nullptr) {
  const int n = pop.types.front().n();
  MatrixXd E = MatrixXd::Zero(n, n);
  for (std::size_t t = 0; t < pop.types.size(); ++t) E += pop.weights[t] * gains[t].H;

  const auto apply = [&](const MatrixXd& Ein) {
    const double e_norm = spectral_norm(Ein);
    MatrixXd out = MatrixXd::Zero(n, n);
    for (std::size_t t = 0; t < pop.types.size(); ++t) {
      const MatrixXd& H = gains[t].H;
      const MatrixXd BL = pop.types[t].B * gains[t].L;
      const double blq = spectral_norm(BL) * spectral_norm(pop.types[t].Q);
      const double hn = gains[t].H_norm;
      MatrixXd series = MatrixXd::Zero(n, n);
      MatrixXd hpow = MatrixXd::Identity(n, n);  // (H')^a
      MatrixXd epow = Ein;                       // E^{a+1}
      double term_bound = blq * e_norm * e_norm;
      for (long a = 0; a < 100000; ++a) {
        series += hpow * pop.types[t].Q * epow;
        term_bound *= hn * e_norm;
        if (term_bound < 1e-14) break;
        hpow = H.transpose() * hpow;
        epow = epow * Ein;
      }
      out += pop.weights[t] * (H + BL * series);
    }
    return out;
  };

  for (long it = 0; it < max_iter; ++it) {
    MatrixXd next = apply(E);
    const double next_norm = spectral_norm(next);
    if (next_norm > 1.0) {
      next /= next_norm;  // iterate lives in the unit ball
      if (warnings) warnings->push_back("linear MFE iterate projected back to the unit ball");
    }
    const double diff = spectral_norm(next - E);
    E = next;
    if (diff <= tol) {
      if (spectral_norm(E) > 1.0 + 1e-10)
        throw DomainError("linear MFE operator left the unit ball");
      return E;
    }
  }
  throw DomainError("linear MFE fixed point did not converge");
}

// Full mean-field solution: per-type gains, equilibrium trajectory with its
// linear tail operator, per-type reference trajectories and the constant
// matrices S_inf with r[k] = -S_inf xbar[k] past the stored horizon.
struct MeanFieldSolution {
  std::vector<GainSet> gains;
  Trajectory xbar;  // tail = E_star
  MatrixXd E_star;
  double upsilon = 0.0;
  std::vector<std::vector<VectorXd>> r;  // per type, 0..horizon
  std::vector<MatrixXd> S_inf;           // per type
  long horizon = 0;
  std::vector<double> contraction_ratios;  // successive Picard quotients
  std::vector<std::string> warnings;

  VectorXd r_at(std::size_t type_idx, long k) const {
    if (k <= horizon) return r[type_idx][k];
    return -S_inf[type_idx] * xbar.value(k);
  }
};

// Picard iteration on the mean-field operator from the constant trajectory
// sum_theta nu0 P(theta). `enforce_assumptions = false` downgrades a failed
// contraction certificate to a warning (the zero-mean case still has an exact
// fixed point); the iteration itself must still converge.
inline MeanFieldSolution mf_fixed_point(const Population& pop, double tol = 1e-10,
                                        long max_iter = 2000, long horizon = 200,
                                        bool enforce_assumptions = true) {
  MeanFieldSolution sol;
  sol.horizon = horizon;
  for (const auto& t : pop.types) sol.gains.push_back(solve_riccati(t));
  sol.upsilon = contraction_constant(pop, sol.gains);

  double max_hcheck = 0.0;
  for (const auto& g : sol.gains) max_hcheck = std::max(max_hcheck, g.H_norm + sol.upsilon);
  if (max_hcheck >= 1.0) {
    if (enforce_assumptions)
      throw DomainError("contraction condition ||H|| + upsilon < 1 fails; mean-field fixed "
                        "point not certified");
    sol.warnings.push_back("contraction condition ||H|| + upsilon < 1 fails; proceeding");
  }

  const int n = pop.types.front().n();
  VectorXd x0 = VectorXd::Zero(n);
  for (std::size_t t = 0; t < pop.types.size(); ++t) x0 += pop.weights[t] * pop.types[t].nu0;

  // Work horizon: stored horizon plus a decay pad so zero-tail truncation
  // cannot leak into the reported samples.
  double max_hn = 0.0;
  for (const auto& g : sol.gains) max_hn = std::max(max_hn, g.H_norm);
  long pad = 100;
  if (max_hn > 0.0 && max_hn < 1.0)
    pad = std::min<long>(20000, std::max<long>(100, static_cast<long>(
        std::ceil(std::log(1e-16) / std::log(max_hn)))));
  const long T_work = horizon + pad;

  Trajectory iterate = Trajectory::constant(x0, T_work);
  iterate.tail = MatrixXd::Zero(n, n);
  double prev_diff = -1.0;
  bool converged = x0.norm() == 0.0;  // zero input: T(0) = 0 exactly
  for (long it = 0; !converged && it < max_iter; ++it) {
    std::vector<VectorXd> next = mf_operator(iterate, pop, sol.gains, T_work - 1, tol * 1e-2);
    double diff = 0.0;
    for (long k = 0; k < T_work; ++k)
      diff = std::max(diff, (next[k] - iterate.samples[k]).cwiseAbs().maxCoeff());
    iterate.samples = std::move(next);
    if (prev_diff > 0.0) sol.contraction_ratios.push_back(diff / prev_diff);
    prev_diff = diff;
    converged = diff <= tol;
  }
  if (!converged) throw DomainError("mean-field Picard iteration did not converge");

  sol.E_star = linear_mfe_operator(pop, sol.gains, std::min(tol, 1e-12), 100000, &sol.warnings);
  sol.xbar.samples.assign(iterate.samples.begin(), iterate.samples.begin() + horizon);
  sol.xbar.tail = sol.E_star;

  // Reference trajectories against the final equilibrium (geometric tail).
  for (std::size_t t = 0; t < pop.types.size(); ++t) {
    sol.r.push_back(r_trajectory(sol.xbar, sol.gains[t], pop.types[t], 1e-12, horizon));
    // S_inf = sum_m (H')^m Q E^m
    MatrixXd s = MatrixXd::Zero(n, n);
    MatrixXd hp = MatrixXd::Identity(n, n);
    MatrixXd ep = MatrixXd::Identity(n, n);
    for (long m = 0; m < 100000; ++m) {
      const MatrixXd term = hp * pop.types[t].Q * ep;
      s += term;
      if (term.cwiseAbs().maxCoeff() <= 1e-16 * std::max(1.0, s.cwiseAbs().maxCoeff())) break;
      hp = sol.gains[t].H.transpose() * hp;
      ep = ep * sol.E_star;
    }
    sol.S_inf.push_back(std::move(s));
  }
  return sol;
}

}  // namespace waoi
