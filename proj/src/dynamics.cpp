#include "rexhmc/dynamics.hpp"

#include <cmath>

namespace rexhmc {

Potential zero_potential(int dim) {
  Potential pot;
  pot.value = [](const Vector&) { return 0.0; };
  pot.gradient = [dim](const Vector&) { return Vector::Zero(dim); };
  return pot;
}

PhaseState leapfrog_step(const Potential& pot, const PhaseState& s, double h) {
  PhaseState out;
  const Vector p_half = s.momentum - 0.5 * h * pot.gradient(s.position);
  out.position = s.position + h * p_half;
  out.momentum = p_half - 0.5 * h * pot.gradient(out.position);
  return out;
}

RattleResult rattle_step(const ConstraintModel& model, const Potential& pot,
                         const PhaseState& s, double h, const SolverConfig& cfg) {
  const int m = model.codim;
  RattleResult result;

  const Matrix jac_n = model.jacobian(s.position);
  const Vector grad_n = pot.gradient(s.position);
  const Vector drift_base = s.position + h * (s.momentum - 0.5 * h * grad_n);

  // Position stage: Newton on lambda with residual xi(drift_base + h J(q_n) lambda).
  Vector lambda_half = Vector::Zero(m);
  Vector q_next = drift_base;
  Vector r = model.residual(q_next);
  double rnorm = m > 0 ? r.lpNorm<Eigen::Infinity>() : 0.0;
  bool converged = rnorm <= cfg.constraint_tol;
  for (int iter = 0; iter < cfg.max_iterations && !converged; ++iter) {
    const Matrix sys = h * model.jacobian(q_next).transpose() * jac_n;
    const Vector delta = sys.partialPivLu().solve(-r);
    if (!delta.allFinite()) break;

    double t = 1.0;
    bool improved = false;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      const Vector lambda_try = lambda_half + t * delta;
      const Vector q_try = drift_base + h * (jac_n * lambda_try);
      const Vector r_try = model.residual(q_try);
      const double rnorm_try = r_try.lpNorm<Eigen::Infinity>();
      if (std::isfinite(rnorm_try) && rnorm_try < rnorm) {
        lambda_half = lambda_try;
        q_next = q_try;
        r = r_try;
        rnorm = rnorm_try;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    converged = rnorm <= cfg.constraint_tol;
  }
  if (!converged) return result;  // position_solve_failed

  const Vector p_half = s.momentum - 0.5 * h * grad_n + jac_n * lambda_half;

  // Momentum stage: the cotangency constraint is linear in p.
  const Matrix jac_next = model.jacobian(q_next);
  const Vector p_unconstrained = p_half - 0.5 * h * pot.gradient(q_next);
  Vector lambda_full = Vector::Zero(m);
  Vector p_next = p_unconstrained;
  if (m > 0) {
    const Matrix gram_next = jac_next.transpose() * jac_next;
    lambda_full = gram_next.partialPivLu().solve(-(jac_next.transpose() * p_unconstrained));
    if (!lambda_full.allFinite()) return result;
    p_next += jac_next * lambda_full;
  }
  if (!q_next.allFinite() || !p_next.allFinite()) return result;

  result.status = RattleStatus::ok;
  result.state = PhaseState{q_next, p_next};
  result.multipliers = LagrangeMultipliers{lambda_half, lambda_full};
  return result;
}

TrajectoryResult reversible_trajectory(const ConstraintModel& model, const Potential& pot,
                                       const PhaseState& s, double h, int n_steps,
                                       const SolverConfig& cfg) {
  TrajectoryResult result;

  PhaseState forward = s;
  for (int step = 0; step < n_steps; ++step) {
    const RattleResult r = rattle_step(model, pot, forward, h, cfg);
    if (!r.ok()) return result;
    if (pot.in_domain && !pot.in_domain(r.state.position)) return result;
    forward = r.state;
  }

  PhaseState flipped{forward.position, -forward.momentum};

  PhaseState backward = flipped;
  for (int step = 0; step < n_steps; ++step) {
    const RattleResult r = rattle_step(model, pot, backward, h, cfg);
    if (!r.ok()) return result;
    backward = r.state;
  }
  const double position_gap = (backward.position - s.position).lpNorm<Eigen::Infinity>();
  if (!(position_gap <= cfg.reversibility_tol)) return result;

  result.accepted = true;
  result.state = flipped;
  return result;
}

}  // namespace rexhmc
