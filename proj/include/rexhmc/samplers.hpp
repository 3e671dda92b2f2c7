#pragma once

#include "rexhmc/dynamics.hpp"
#include "rexhmc/geometry.hpp"
#include "rexhmc/rng.hpp"

namespace rexhmc {

/// Tubular relaxation of the constrained target:
/// value(x) = V(x) + ||xi(x)||^2 / epsilon.
struct RelaxedTarget {
  const ConstraintModel* model = nullptr;
  Potential base;
  double epsilon = 1.0;

  double value(const Vector& x) const {
    if (!base.contains(x)) return std::numeric_limits<double>::infinity();
    const Vector res = model->residual(x);
    return base.value(x) + res.squaredNorm() / epsilon;
  }

  Vector gradient(const Vector& x) const {
    const Vector res = model->residual(x);
    return base.gradient(x) + (2.0 / epsilon) * (model->jacobian(x) * res);
  }

  Potential as_potential() const;
};

struct KernelConfig {
  double step_size = 0.1;
  int n_steps = 10;
};

struct StepResult {
  Vector point;
  bool accepted = false;
};

/// One HMC update targeting the relaxed density. Divergences and domain
/// violations reject; the chain never leaves the finite-value region.
StepResult hmc_step(const RelaxedTarget& target, const Vector& q, const KernelConfig& cfg,
                    RngStream& rng);

/// Orthogonal projector onto the cotangent space at q: I - J G^{-1} J^T.
Matrix cotangent_projector(const ConstraintModel& model, const Vector& q);

/// One constrained HMC update targeting exp(-V) dsigma on the manifold.
/// Momentum is drawn N(0, I) and projected onto the cotangent space; the
/// trajectory runs through the reversibility-checked RATTLE integrator.
StepResult chmc_step(const ConstraintModel& model, const Potential& pot, const Vector& q,
                     const KernelConfig& cfg, const SolverConfig& solver, RngStream& rng);

}  // namespace rexhmc
