#pragma once

#include <optional>
#include <vector>

#include "waoi/model.hpp"

namespace waoi {

// Estimation-error covariance accumulated over delta steps without a
// transmission:
//   h(delta) = sum_{l=1..delta} tr((A^{l-1})' A^{l-1} K_W)
//            = sum_{l=1..delta} ||A^{l-1} K_W^{1/2}||_F^2,
// computed by the recurrence M <- A M with M_1 = chol(K_W). The weighted-AoI
// stage cost is g(delta) = h(delta) * delta. h(0) = g(0) = 0 (empty sum).
class WaoiTable {
 public:
  WaoiTable(const AgentType& type, int delta_max) : type_(type), delta_max_(delta_max) {
    if (delta_max < 1) throw ConfigError("delta_max must be >= 1");
    h_.resize(delta_max + 1);
    g_.resize(delta_max + 1);
    h_[0] = 0.0;
    g_[0] = 0.0;
    MatrixXd m = Eigen::LLT<MatrixXd>(type.K_W).matrixL();
    for (int d = 1; d <= delta_max; ++d) {
      h_[d] = h_[d - 1] + m.squaredNorm();
      g_[d] = h_[d] * d;
      m = type.A * m;
    }
  }

  double h(int delta) const {
    check(delta);
    return h_[delta];
  }
  double g(int delta) const {
    check(delta);
    return g_[delta];
  }
  int delta_max() const { return delta_max_; }
  const AgentType& type() const { return type_; }

 private:
  void check(int delta) const {
    if (delta < 0) throw DomainError("AoI must be nonnegative");
    if (delta > delta_max_)
      throw DomainError("AoI exceeded the WAoI table bound; increase solver.delta_max");
  }

  AgentType type_;
  int delta_max_;
  std::vector<double> h_;
  std::vector<double> g_;
};

// One-off evaluations (the table is preferable in loops).
inline double error_covariance_h(int delta, const AgentType& type) {
  if (delta < 0) throw DomainError("AoI must be nonnegative");
  if (delta == 0) return 0.0;
  return WaoiTable(type, delta).h(delta);
}

inline double waoi_cost_g(int delta, const AgentType& type) {
  return error_covariance_h(delta, type) * delta;
}

inline int aoi_update(int delta, bool transmitted) { return transmitted ? 0 : delta + 1; }

// Optimal decoder: on a scheduled step the exact state arrives (z = x,
// delta = 0); otherwise the estimate is propagated open loop with the last
// control. The conditional-noise correction term is zero here (symmetric
// densities, no dual effect), so none is applied.
inline AgentRuntimeState decoder_update(const AgentRuntimeState& state, const AgentType& type,
                                        const VectorXd& u_prev,
                                        const std::optional<VectorXd>& observation) {
  AgentRuntimeState next = state;
  if (observation.has_value()) {
    if (observation->size() != type.n()) throw ConfigError("decoder_update: observation dimension");
    next.z = *observation;
    next.delta = 0;
  } else {
    if (u_prev.size() != type.m()) throw ConfigError("decoder_update: control dimension");
    next.z = type.A * state.z + type.B * u_prev;
    next.delta = state.delta + 1;
  }
  return next;
}

}  // namespace waoi
