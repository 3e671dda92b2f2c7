#include "rexhmc/samplers.hpp"

#include <cmath>
#include <limits>

namespace rexhmc {

Potential RelaxedTarget::as_potential() const {
  Potential pot;
  const RelaxedTarget copy = *this;
  pot.value = [copy](const Vector& x) { return copy.value(x); };
  pot.gradient = [copy](const Vector& x) { return copy.gradient(x); };
  pot.in_domain = base.in_domain;
  return pot;
}

namespace {

bool metropolis_accept(double delta_h, RngStream& rng) {
  if (!std::isfinite(delta_h)) return false;
  if (delta_h <= 0.0) return true;
  return rng.uniform() < std::exp(-delta_h);
}

}  // namespace

StepResult hmc_step(const RelaxedTarget& target, const Vector& q, const KernelConfig& cfg,
                    RngStream& rng) {
  const Potential pot = target.as_potential();
  const Vector p0 = rng.normal_vector(q.size());
  const double h0 = target.value(q) + 0.5 * p0.squaredNorm();

  PhaseState state{q, p0};
  bool diverged = false;
  for (int step = 0; step < cfg.n_steps; ++step) {
    state = leapfrog_step(pot, state, cfg.step_size);
    if (!state.all_finite() || !pot.contains(state.position)) {
      diverged = true;
      break;
    }
  }

  StepResult out{q, false};
  if (diverged) return out;

  const double h1 = target.value(state.position) + 0.5 * state.momentum.squaredNorm();
  if (metropolis_accept(h1 - h0, rng)) {
    out.point = state.position;
    out.accepted = true;
  }
  return out;
}

Matrix cotangent_projector(const ConstraintModel& model, const Vector& q) {
  const Matrix jac = model.jacobian(q);
  const Matrix g = jac.transpose() * jac;
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw SingularGramError("cotangent_projector: Gram matrix not positive definite");
  }
  const int n = model.ambient_dim;
  return Matrix::Identity(n, n) - jac * llt.solve(jac.transpose());
}

StepResult chmc_step(const ConstraintModel& model, const Potential& pot, const Vector& q,
                     const KernelConfig& cfg, const SolverConfig& solver, RngStream& rng) {
  const Vector raw = rng.normal_vector(q.size());
  const Vector p0 = cotangent_projector(model, q) * raw;
  const double h0 = pot.value(q) + 0.5 * p0.squaredNorm();

  StepResult out{q, false};
  const TrajectoryResult traj =
      reversible_trajectory(model, pot, PhaseState{q, p0}, cfg.step_size, cfg.n_steps, solver);
  if (!traj.accepted) return out;

  const double h1 = pot.value(traj.state.position) + 0.5 * traj.state.momentum.squaredNorm();
  if (metropolis_accept(h1 - h0, rng)) {
    out.point = traj.state.position;
    out.accepted = true;
  }
  return out;
}

}  // namespace rexhmc
