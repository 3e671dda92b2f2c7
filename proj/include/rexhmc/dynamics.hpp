#pragma once

#include <functional>

#include "rexhmc/geometry.hpp"

namespace rexhmc {

struct PhaseState {
  Vector position;
  Vector momentum;

  bool all_finite() const { return position.allFinite() && momentum.allFinite(); }
};

/// Potential energy with gradient. `in_domain` implements hard parameter
/// boxes: trajectories touching a point outside the domain are rejected.
/// Divergent trajectories surface as non-finite coordinates or values, which
/// the Metropolis step maps to rejection.
struct Potential {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<bool(const Vector&)> in_domain;  // null means all of R^n

  bool contains(const Vector& q) const { return !in_domain || in_domain(q); }
};

Potential zero_potential(int dim);

struct LagrangeMultipliers {
  Vector half_step;
  Vector full_step;
};

/// One Stormer-Verlet step: half kick, drift, half kick.
PhaseState leapfrog_step(const Potential& pot, const PhaseState& s, double h);

enum class RattleStatus { ok, position_solve_failed };

struct RattleResult {
  RattleStatus status = RattleStatus::position_solve_failed;
  PhaseState state;
  LagrangeMultipliers multipliers;

  bool ok() const { return status == RattleStatus::ok; }
};

/// One RATTLE step. The position-stage multiplier is found by Newton
/// iteration on the drifted constraint; the momentum-stage multiplier is an
/// exact linear solve. A failed position solve is an expected outcome near
/// high curvature and is reported, not thrown.
RattleResult rattle_step(const ConstraintModel& model, const Potential& pot,
                         const PhaseState& s, double h, const SolverConfig& cfg);

struct TrajectoryResult {
  bool accepted = false;  // false = rejected (solver failure or reversibility violation)
  PhaseState state;       // (q_L, -p_L) when accepted
};

/// Run n_steps RATTLE steps, then rerun the trajectory from the flipped end
/// state and require it to recover the start position within
/// cfg.reversibility_tol. Rejection is a legal result; the caller keeps the
/// current chain state.
TrajectoryResult reversible_trajectory(const ConstraintModel& model, const Potential& pot,
                                       const PhaseState& s, double h, int n_steps,
                                       const SolverConfig& cfg);

}  // namespace rexhmc
