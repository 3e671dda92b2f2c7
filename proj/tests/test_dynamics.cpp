#include <doctest.h>

#include <cmath>

#include "rexhmc/dynamics.hpp"
#include "rexhmc/models.hpp"
#include "rexhmc/samplers.hpp"
#include "rexhmc/validation.hpp"
#include "support/oracles.hpp"

using namespace rexhmc;

namespace {

Vector vec2(double x, double y) { return (Vector(2) << x, y).finished(); }

Potential quadratic_potential(int dim) {
  Potential pot;
  pot.value = [](const Vector& q) { return 0.5 * q.squaredNorm(); };
  pot.gradient = [dim](const Vector& q) { return q.eval(); };
  (void)dim;
  return pot;
}

}  // namespace

TEST_CASE("leapfrog free flight") {
  const Potential pot = zero_potential(2);
  const PhaseState s{vec2(0.3, -0.2), vec2(1.0, 2.0)};
  const PhaseState out = leapfrog_step(pot, s, 0.25);
  CHECK((out.position - (s.position + 0.25 * s.momentum)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((out.momentum - s.momentum).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("leapfrog on the harmonic potential, hand-evaluated step") {
  const Potential pot = quadratic_potential(2);
  const PhaseState s{vec2(1.0, 0.0), vec2(0.0, 0.0)};
  const PhaseState out = leapfrog_step(pot, s, 0.1);
  CHECK(out.position[0] == doctest::Approx(0.995).epsilon(1e-15));
  CHECK(out.momentum[0] == doctest::Approx(-0.0997500).epsilon(1e-10));
}

TEST_CASE("leapfrog reversibility under momentum flip") {
  const Potential pot = quadratic_potential(2);
  PhaseState s{vec2(0.7, -1.1), vec2(0.4, 0.9)};
  PhaseState fwd = s;
  for (int i = 0; i < 50; ++i) fwd = leapfrog_step(pot, fwd, 0.05);
  PhaseState back{fwd.position, -fwd.momentum};
  for (int i = 0; i < 50; ++i) back = leapfrog_step(pot, back, 0.05);
  CHECK((back.position - s.position).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((back.momentum + s.momentum).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("leapfrog preserves phase-space volume") {
  // Non-quadratic potential so the Jacobian is state-dependent.
  Potential pot;
  pot.value = [](const Vector& q) { return 0.5 * q.squaredNorm() + 0.1 * std::pow(q[0], 4); };
  pot.gradient = [](const Vector& q) {
    Vector g = q;
    g[0] += 0.4 * std::pow(q[0], 3);
    return g;
  };
  const int n = 2;
  const Vector q0 = vec2(0.4, -0.3);
  const Vector p0 = vec2(0.8, 0.1);
  const double h = 0.05;
  const double fd = 1e-6;
  Matrix jac(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    PhaseState plus{q0, p0}, minus{q0, p0};
    if (i < n) {
      plus.position[i] += fd;
      minus.position[i] -= fd;
    } else {
      plus.momentum[i - n] += fd;
      minus.momentum[i - n] -= fd;
    }
    const PhaseState sp = leapfrog_step(pot, plus, h);
    const PhaseState sm = leapfrog_step(pot, minus, h);
    Vector col(2 * n);
    col.head(n) = sp.position - sm.position;
    col.tail(n) = sp.momentum - sm.momentum;
    jac.col(i) = col / (2.0 * fd);
  }
  CHECK(std::abs(std::abs(jac.determinant()) - 1.0) < 1e-8);
}

TEST_CASE("rattle on the circle stays on the constraint and preserves speed") {
  const auto circle = make_circle();
  const Potential pot = zero_potential(2);
  const SolverConfig cfg;
  PhaseState s{vec2(1.0, 0.0), vec2(0.0, 0.1)};
  const double h = 0.01;

  double max_violation = 0.0, max_cotangency = 0.0;
  PhaseState state = s;
  for (int i = 0; i < 100; ++i) {
    const RattleResult r = rattle_step(circle.constraint, pot, state, h, cfg);
    REQUIRE(r.ok());
    state = r.state;
    max_violation = std::max(
        max_violation, circle.constraint.residual(state.position).lpNorm<Eigen::Infinity>());
    const Vector cot = circle.constraint.jacobian(state.position).transpose() * state.momentum;
    max_cotangency = std::max(max_cotangency, cot.lpNorm<Eigen::Infinity>());
  }
  CHECK(max_violation < 1e-10);
  CHECK(max_cotangency < 1e-10);
  CHECK(std::abs(state.momentum.norm() - 0.1) < 1e-4);

  // Free constrained motion on the circle is uniform rotation.
  const double angle = std::atan2(state.position[1], state.position[0]);
  CHECK(angle == doctest::Approx(0.1 * 100 * h).epsilon(1e-3));
}

TEST_CASE("rattle fixed point at zero momentum") {
  const auto tetra = build_tetrahedron();
  const Potential pot = zero_potential(9);
  const SolverConfig cfg;
  const PhaseState s{tetra.reference_point, Vector::Zero(9)};
  const RattleResult r = rattle_step(tetra.constraint, pot, s, 0.05, cfg);
  REQUIRE(r.ok());
  CHECK((r.state.position - s.position).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(r.state.momentum.lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(r.multipliers.half_step.lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(r.multipliers.full_step.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("rattle drift stays bounded on the tetrahedron") {
  const auto tetra = build_tetrahedron();
  const SolverConfig cfg;
  RngStream rng(5, 0);
  const Vector p0 = cotangent_projector(tetra.constraint, tetra.reference_point) *
                    rng.normal_vector(9);
  PhaseState state{tetra.reference_point, p0};
  double drift = 0.0;
  for (int i = 0; i < 100; ++i) {
    const RattleResult r = rattle_step(tetra.constraint, tetra.potential, state, 0.005, cfg);
    REQUIRE(r.ok());
    state = r.state;
    drift = std::max(drift, tetra.constraint.residual(state.position).lpNorm<Eigen::Infinity>());
  }
  CHECK(drift < 1e-9);
}

TEST_CASE("rattle multipliers satisfy the update equations") {
  const auto circle = make_circle();
  const Potential pot = quadratic_potential(2);
  const SolverConfig cfg;
  const PhaseState s{vec2(0.0, 1.0), vec2(0.3, 0.0)};
  const double h = 0.02;
  const RattleResult r = rattle_step(circle.constraint, pot, s, h, cfg);
  REQUIRE(r.ok());
  // Rebuild the step from the multipliers and compare.
  const Vector p_half = s.momentum - 0.5 * h * pot.gradient(s.position) +
                        circle.constraint.jacobian(s.position) * r.multipliers.half_step;
  const Vector q_next = s.position + h * p_half;
  CHECK((q_next - r.state.position).lpNorm<Eigen::Infinity>() < 1e-14);
  const Vector p_next = p_half - 0.5 * h * pot.gradient(q_next) +
                        circle.constraint.jacobian(q_next) * r.multipliers.full_step;
  CHECK((p_next - r.state.momentum).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("energy error scales as h^2 over fixed physical time") {
  const auto circle = make_circle();
  Potential pot;
  pot.value = [](const Vector& q) { return q[0]; };
  pot.gradient = [](const Vector& q) {
    Vector g = Vector::Zero(q.size());
    g[0] = 1.0;
    return g;
  };
  const SolverConfig cfg;
  RngStream rng(11, 0);

  auto energy_error = [&](double h, int steps, const PhaseState& start) {
    PhaseState state = start;
    const double h0 = pot.value(state.position) + 0.5 * state.momentum.squaredNorm();
    for (int i = 0; i < steps; ++i) {
      const RattleResult r = rattle_step(circle.constraint, pot, state, h, cfg);
      REQUIRE(r.ok());
      state = r.state;
    }
    const double h1 = pot.value(state.position) + 0.5 * state.momentum.squaredNorm();
    return std::abs(h1 - h0);
  };

  double ratio_sum = 0.0;
  const int trials = 8;
  for (int t = 0; t < trials; ++t) {
    const Vector p0 = cotangent_projector(circle.constraint, vec2(1.0, 0.0)) *
                      (1.5 * rng.normal_vector(2));
    const PhaseState start{vec2(1.0, 0.0), p0};
    const double coarse = energy_error(0.1, 20, start);
    const double fine = energy_error(0.05, 40, start);
    ratio_sum += coarse / fine;
  }
  const double mean_ratio = ratio_sum / trials;
  CHECK(mean_ratio > 2.8);
  CHECK(mean_ratio < 5.5);
}

TEST_CASE("reversible trajectory basics") {
  const auto circle = make_circle();
  const Potential pot = zero_potential(2);
  const SolverConfig cfg;
  const PhaseState s{vec2(1.0, 0.0), vec2(0.0, 0.4)};

  // Empty trajectory returns the flipped start.
  const TrajectoryResult empty = reversible_trajectory(circle.constraint, pot, s, 0.01, 0, cfg);
  CHECK(empty.accepted);
  CHECK((empty.state.position - s.position).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((empty.state.momentum + s.momentum).lpNorm<Eigen::Infinity>() == 0.0);

  // Smooth regime: accepted, and the end state matches a plain forward run.
  const TrajectoryResult traj = reversible_trajectory(circle.constraint, pot, s, 0.01, 10, cfg);
  REQUIRE(traj.accepted);
  PhaseState fwd = s;
  for (int i = 0; i < 10; ++i) {
    const RattleResult r = rattle_step(circle.constraint, pot, fwd, 0.01, cfg);
    REQUIRE(r.ok());
    fwd = r.state;
  }
  CHECK((traj.state.position - fwd.position).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK((traj.state.momentum + fwd.momentum).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("reversibility check rejects wild steps on the ellipse suite") {
  const auto suite = build_ellipse_suite();
  const SolverConfig cfg;
  RngStream rng(3, 2);
  int rejected = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const auto q = random_manifold_point(suite.constraint, suite.potential,
                                         suite.reference_point, 0.2, cfg, rng);
    REQUIRE(q.has_value());
    const Vector p = cotangent_projector(suite.constraint, *q) * rng.normal_vector(2);
    const TrajectoryResult traj =
        reversible_trajectory(suite.constraint, suite.potential, PhaseState{*q, p}, 2.0, 5, cfg);
    if (!traj.accepted) rejected += 1;
  }
  CHECK(rejected > trials / 2);
}

TEST_CASE("constraint drift below ten times the solver tolerance over 1000 steps") {
  const SolverConfig cfg;
  RngStream rng(17, 4);
  for (const std::string& name : {"circle", "tetrahedron"}) {
    CAPTURE(name);
    const ModelBundle bundle = build_benchmark(name);
    const int n = bundle.constraint.ambient_dim;
    const Vector p0 = cotangent_projector(bundle.constraint, bundle.reference_point) *
                      rng.normal_vector(n);
    PhaseState state{bundle.reference_point, p0};
    double drift = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const RattleResult r = rattle_step(bundle.constraint, bundle.potential, state, 0.01, cfg);
      REQUIRE(r.ok());
      state = r.state;
      drift = std::max(drift,
                       bundle.constraint.residual(state.position).lpNorm<Eigen::Infinity>());
    }
    CHECK(drift <= 10.0 * cfg.constraint_tol);
  }
}
