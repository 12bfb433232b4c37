#include <catch2/catch.hpp>

#include "waoi/meanfield.hpp"
#include "waoi/model.hpp"

using namespace waoi;

namespace {

AgentType two_dim_type() {
  AgentType t;
  t.id = "planar";
  t.A = (MatrixXd(2, 2) << 0.9, 0.1, 0.0, 0.8).finished();
  t.B = (MatrixXd(2, 1) << 0.0, 1.0).finished();
  t.Q = MatrixXd::Identity(2, 2);
  t.R = MatrixXd::Identity(1, 1);
  t.K_W = (MatrixXd(2, 2) << 1.0, 0.3, 0.3, 0.5).finished();
  t.nu0 = VectorXd::Zero(2);
  t.Sigma_x = MatrixXd::Identity(2, 2);
  return t;
}

}  // namespace

TEST_CASE("build_population: single type") {
  PopulationSpec spec;
  spec.types = {AgentType::make_scalar(0.5, 1.0)};
  spec.N = 7;
  const Population pop = build_population(spec);
  REQUIRE(pop.N == 7);
  REQUIRE(pop.type_counts == std::vector<int>{7});
  for (int a : pop.assignment) REQUIRE(a == 0);
  REQUIRE(pop.weights == std::vector<double>{1.0});
}

TEST_CASE("build_population: exact quota") {
  PopulationSpec spec;
  spec.types = {AgentType::make_scalar(0.5, 1.0), AgentType::make_scalar(0.7, 2.0)};
  spec.weights = {0.5, 0.5};
  spec.N = 6;
  const Population pop = build_population(spec);
  REQUIRE(pop.type_counts == std::vector<int>{3, 3});
}

TEST_CASE("build_population: largest-remainder rounding") {
  PopulationSpec spec;
  spec.types = {AgentType::make_scalar(0.5, 1.0), AgentType::make_scalar(0.7, 2.0)};
  spec.weights = {0.3, 0.7};
  spec.N = 10;
  const Population pop = build_population(spec);
  // largest-remainder enumeration: 0.3*10 = 3 exactly, 0.7*10 = 7 exactly
  REQUIRE(pop.type_counts == std::vector<int>{3, 7});
  for (std::size_t t = 0; t < pop.types.size(); ++t)
    REQUIRE(std::abs(pop.empirical_weight(t) - pop.weights[t]) <= 1.0 / pop.N + 1e-15);
}

TEST_CASE("build_population: |P_N - P| <= 1/N on uneven weights") {
  PopulationSpec spec;
  spec.types = {AgentType::make_scalar(0.2, 1.0), AgentType::make_scalar(0.4, 1.0),
                AgentType::make_scalar(0.6, 1.0)};
  spec.weights = {0.2, 0.3, 0.5};
  for (int N : {1, 2, 3, 7, 11, 97}) {
    spec.N = N;
    const Population pop = build_population(spec);
    int total = 0;
    for (std::size_t t = 0; t < pop.types.size(); ++t) {
      total += pop.type_counts[t];
      REQUIRE(std::abs(pop.empirical_weight(t) - pop.weights[t]) <= 1.0 / N + 1e-15);
    }
    REQUIRE(total == N);
  }
}

TEST_CASE("build_population: determinism, no RNG consumed") {
  PopulationSpec spec;
  spec.types = {AgentType::make_scalar(0.5, 1.0), AgentType::make_scalar(0.7, 2.0)};
  spec.weights = {0.25, 0.75};
  spec.N = 13;
  const Population a = build_population(spec);
  const Population b = build_population(spec);
  REQUIRE(a.assignment == b.assignment);
}

TEST_CASE("build_population: validation errors") {
  PopulationSpec spec;
  spec.types = {AgentType::make_scalar(0.5, 1.0)};
  spec.N = 0;
  REQUIRE_THROWS_AS(build_population(spec), ConfigError);

  spec.N = 3;
  spec.weights = {0.5, 0.5};
  REQUIRE_THROWS_AS(build_population(spec), ConfigError);  // length mismatch

  spec.weights = {0.9};
  REQUIRE_THROWS_AS(build_population(spec), ConfigError);  // does not sum to 1

  spec.weights.clear();
  spec.types[0].K_W = MatrixXd::Constant(1, 1, -1.0);  // not PD
  REQUIRE_THROWS_AS(build_population(spec), ConfigError);

  spec.types = {AgentType::make_scalar(0.5, 1.0), two_dim_type()};  // mixed dims
  REQUIRE_THROWS_AS(build_population(spec), ConfigError);
}

TEST_CASE("step_plant: fixed point and direct substitution") {
  const AgentType t = AgentType::make_scalar(2.0, 1.0);
  AgentRuntimeState s;
  s.x = VectorXd::Zero(1);
  s.z = VectorXd::Zero(1);
  s.u_prev = VectorXd::Zero(1);

  const auto zero = step_plant(s, t, VectorXd::Zero(1), VectorXd::Zero(1));
  REQUIRE(zero.x(0) == 0.0);

  s.x = VectorXd::Constant(1, 1.0);
  const auto next = step_plant(s, t, VectorXd::Constant(1, 0.5), VectorXd::Zero(1));
  REQUIRE(next.x(0) == Approx(2.5).margin(1e-15));
  REQUIRE(next.delta == s.delta);
}

TEST_CASE("step_plant: closed loop with Riccati gains reproduces H") {
  // u = -Pi x (z = x, r = 0) must give x' = H x with H from the gain set.
  const AgentType t = AgentType::make_scalar(1.15, 2.0);
  const GainSet g = solve_riccati(t);
  AgentRuntimeState s;
  s.x = VectorXd::Constant(1, 1.0);
  s.z = s.x;
  s.u_prev = VectorXd::Zero(1);
  const VectorXd u = -g.Pi * s.x;
  const auto next = step_plant(s, t, u, VectorXd::Zero(1));
  REQUIRE(next.x(0) == Approx((g.H * s.x)(0)).epsilon(1e-12));
}

TEST_CASE("step_plant: affine superposition") {
  const AgentType t = two_dim_type();
  RngStream rng(11, {0, 0, StreamPurpose::generic});
  for (int it = 0; it < 20; ++it) {
    VectorXd x1(2), x2(2), w1(2), w2(2);
    VectorXd u1(1), u2(1);
    for (int j = 0; j < 2; ++j) {
      x1(j) = rng.normal();
      x2(j) = rng.normal();
      w1(j) = rng.normal();
      w2(j) = rng.normal();
    }
    u1(0) = rng.normal();
    u2(0) = rng.normal();
    AgentRuntimeState s1, s2, s12;
    s1.x = x1;
    s2.x = x2;
    s12.x = x1 + x2;
    const VectorXd lhs = step_plant(s12, t, u1 + u2, w1 + w2).x;
    const VectorXd rhs = step_plant(s1, t, u1, w1).x + step_plant(s2, t, u2, w2).x;
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("noise sampler: sample covariance matches K_W within 5 SE") {
  const AgentType t = two_dim_type();
  GaussianVectorSampler sampler(t.K_W);
  RngStream rng(2024, {0, 1, StreamPurpose::plant_noise});
  const long n = 1'000'000;
  MatrixXd acc = MatrixXd::Zero(2, 2);
  for (long i = 0; i < n; ++i) {
    const VectorXd w = sampler.sample(rng);
    acc += w * w.transpose();
  }
  acc /= n;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double se = std::sqrt(
          (t.K_W(r, r) * t.K_W(c, c) + t.K_W(r, c) * t.K_W(r, c)) / n);
      REQUIRE(std::abs(acc(r, c) - t.K_W(r, c)) <= 5.0 * se);
    }
  }
}

TEST_CASE("rng: reproducibility and stream separation") {
  RngStream a(42, {1, 7, StreamPurpose::decision});
  RngStream b(42, {1, 7, StreamPurpose::decision});
  RngStream c(42, {1, 8, StreamPurpose::decision});
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a();
    all_equal = all_equal && (va == b());
    any_diff = any_diff || (va != c());
  }
  REQUIRE(all_equal);
  REQUIRE(any_diff);
}

TEST_CASE("rng: uniform lies in [0,1) and normal is standardized") {
  RngStream rng(7, {0, 0, StreamPurpose::generic});
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  REQUIRE(std::abs(sum / n) <= 5.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(std::abs(sumsq / n - 1.0) <= 5.0 * std::sqrt(2.0 / n));
}
