#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "waoi/errors.hpp"
#include "waoi/matrix_ops.hpp"
#include "waoi/rng.hpp"

namespace waoi {

// Per-type plant/cost description: dynamics (A, B), cost weights (Q, R),
// process-noise covariance K_W, initial-state law (nu0, Sigma_x).
struct AgentType {
  std::string id;
  MatrixXd A;
  MatrixXd B;
  MatrixXd Q;
  MatrixXd R;
  MatrixXd K_W;
  VectorXd nu0;
  MatrixXd Sigma_x;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  bool scalar() const { return n() == 1 && m() == 1; }

  void validate() const {
    const auto dim = A.rows();
    if (A.cols() != dim) throw ConfigError("type '" + id + "': A must be square");
    if (B.rows() != dim) throw ConfigError("type '" + id + "': B row count must match A");
    if (Q.rows() != dim || Q.cols() != dim)
      throw ConfigError("type '" + id + "': Q must be n x n");
    if (R.rows() != B.cols() || R.cols() != B.cols())
      throw ConfigError("type '" + id + "': R must be m x m");
    if (K_W.rows() != dim || K_W.cols() != dim)
      throw ConfigError("type '" + id + "': K_W must be n x n");
    if (nu0.size() != dim) throw ConfigError("type '" + id + "': nu0 must be an n-vector");
    if (Sigma_x.rows() != dim || Sigma_x.cols() != dim)
      throw ConfigError("type '" + id + "': Sigma_x must be n x n");
    if (!is_positive_semidefinite(Q))
      throw ConfigError("type '" + id + "': Q must be symmetric positive semidefinite");
    if (!is_positive_definite(R))
      throw ConfigError("type '" + id + "': R must be symmetric positive definite");
    if (!is_positive_definite(K_W))
      throw ConfigError("type '" + id + "': K_W must be symmetric positive definite");
    if (!is_positive_definite(Sigma_x))
      throw ConfigError("type '" + id + "': Sigma_x must be symmetric positive definite");
  }

  static AgentType make_scalar(double a, double kw, double b = 1.0, double q = 1.0,
                               double r = 1.0, double nu = 0.0, double sigma_x = 1.0,
                               std::string label = "") {
    AgentType t;
    t.id = std::move(label);
    t.A = MatrixXd::Constant(1, 1, a);
    t.B = MatrixXd::Constant(1, 1, b);
    t.Q = MatrixXd::Constant(1, 1, q);
    t.R = MatrixXd::Constant(1, 1, r);
    t.K_W = MatrixXd::Constant(1, 1, kw);
    t.nu0 = VectorXd::Constant(1, nu);
    t.Sigma_x = MatrixXd::Constant(1, 1, sigma_x);
    return t;
  }
};

struct PopulationSpec {
  std::vector<AgentType> types;
  std::vector<double> weights;  // limiting distribution P(theta); empty = equal
  int N = 0;
};

struct Population {
  std::vector<AgentType> types;
  std::vector<double> weights;      // P(theta)
  int N = 0;
  std::vector<int> assignment;      // agent -> type index
  std::vector<int> type_counts;     // |N_theta|

  double empirical_weight(int type_idx) const {
    return static_cast<double>(type_counts[type_idx]) / N;
  }
  const AgentType& type_of(int agent) const { return types[assignment[agent]]; }
};

// Deterministic largest-remainder quota assignment: |P_N - P| <= 1/N per type
// holds surely, no RNG consumed. Agents are interleaved round-robin across
// types until every quota is exhausted.
inline Population build_population(const PopulationSpec& spec) {
  if (spec.N < 1) throw ConfigError("population.N must be >= 1");
  if (spec.types.empty()) throw ConfigError("population must declare at least one type");
  const int p = static_cast<int>(spec.types.size());

  const int n0 = spec.types.front().n();
  const int m0 = spec.types.front().m();
  for (const auto& t : spec.types) {
    t.validate();
    if (t.n() != n0 || t.m() != m0)
      throw ConfigError("all types must share state/input dimensions (n, m)");
  }

  std::vector<double> w = spec.weights;
  if (w.empty()) w.assign(p, 1.0 / p);
  if (static_cast<int>(w.size()) != p)
    throw ConfigError("population.weights length must equal the number of types");
  double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double x : w)
    if (x < 0.0) throw ConfigError("population.weights must be nonnegative");
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("population.weights must sum to 1");
  for (double& x : w) x /= sum;

  // Largest-remainder quotas.
  std::vector<int> counts(p, 0);
  std::vector<double> remainder(p, 0.0);
  int assigned = 0;
  for (int i = 0; i < p; ++i) {
    const double exact = w[i] * spec.N;
    counts[i] = static_cast<int>(std::floor(exact));
    remainder[i] = exact - counts[i];
    assigned += counts[i];
  }
  while (assigned < spec.N) {
    int best = 0;
    for (int i = 1; i < p; ++i)
      if (remainder[i] > remainder[best]) best = i;
    ++counts[best];
    remainder[best] = -1.0;
    ++assigned;
  }

  Population pop;
  pop.types = spec.types;
  pop.weights = std::move(w);
  pop.N = spec.N;
  pop.type_counts = counts;
  pop.assignment.reserve(spec.N);
  std::vector<int> left = counts;
  while (static_cast<int>(pop.assignment.size()) < spec.N) {
    for (int i = 0; i < p; ++i) {
      if (left[i] > 0) {
        pop.assignment.push_back(i);
        --left[i];
      }
    }
  }
  return pop;
}

// Live per-agent state: plant state x, decoder estimate z, AoI delta, last
// applied control.
struct AgentRuntimeState {
  VectorXd x;
  VectorXd z;
  int delta = 0;
  VectorXd u_prev;

  VectorXd error() const { return x - z; }
};

// x' = A x + B u + w; the other fields are untouched.
inline AgentRuntimeState step_plant(const AgentRuntimeState& state, const AgentType& type,
                                    const VectorXd& u, const VectorXd& w) {
  if (u.size() != type.m() || w.size() != type.n() || state.x.size() != type.n())
    throw ConfigError("step_plant: dimension mismatch");
  AgentRuntimeState next = state;
  next.x = type.A * state.x + type.B * u + w;
  return next;
}

// Draws zero-mean Gaussian vectors with a fixed covariance (Cholesky factor
// cached).
class GaussianVectorSampler {
 public:
  explicit GaussianVectorSampler(const MatrixXd& covariance)
      : chol_(Eigen::LLT<MatrixXd>(covariance).matrixL()) {}

  VectorXd sample(RngStream& rng) const {
    VectorXd xi(chol_.rows());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
    return chol_ * xi;
  }

 private:
  MatrixXd chol_;
};

}  // namespace waoi
