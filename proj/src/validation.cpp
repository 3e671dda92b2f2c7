#include "rexhmc/validation.hpp"

#include <algorithm>
#include <cmath>

#include "rexhmc/samplers.hpp"

namespace rexhmc {

std::optional<Vector> random_manifold_point(const ConstraintModel& model, const Potential& pot,
                                            const Vector& anchor, double scale,
                                            const SolverConfig& cfg, RngStream& rng,
                                            int attempts) {
  for (int k = 0; k < attempts; ++k) {
    const Vector x = anchor + scale * rng.normal_vector(anchor.size());
    const ProjectionResult proj = project_to_manifold(model, x, cfg);
    if (proj.ok() && pot.contains(proj.decomposition.base)) return proj.decomposition.base;
  }
  return std::nullopt;
}

std::optional<JointState> random_admissible_state(const ConstraintModel& model,
                                                  const Potential& pot, const Vector& anchor,
                                                  double point_scale, double normal_scale,
                                                  const SolverConfig& cfg, RngStream& rng,
                                                  int attempts) {
  for (int k = 0; k < attempts; ++k) {
    const auto cold = random_manifold_point(model, pot, anchor, point_scale, cfg, rng);
    const auto hot_base = random_manifold_point(model, pot, anchor, point_scale, cfg, rng);
    if (!cold || !hot_base) continue;
    const Vector v = normal_scale * rng.normal_vector(model.codim);
    const JointState z{*cold, reconstruct(model, *hot_base, v)};
    if (propose_exchange(model, z, cfg, JacobianMode::gram)) return z;
  }
  return std::nullopt;
}

namespace {

double fd_jacobian_error(const ConstraintModel& model, const Vector& q) {
  const Matrix jac = model.jacobian(q);
  double worst = 0.0;
  for (int j = 0; j < model.ambient_dim; ++j) {
    Vector qp = q, qm = q;
    const double h = 1e-6 * std::max(1.0, std::abs(q[j]));
    qp[j] += h;
    qm[j] -= h;
    const Vector col = (model.residual(qp) - model.residual(qm)) / (2.0 * h);
    for (int i = 0; i < model.codim; ++i) {
      const double scale = std::max(1.0, std::abs(jac(j, i)));
      worst = std::max(worst, std::abs(jac(j, i) - col[i]) / scale);
    }
  }
  return worst;
}

double fd_hessian_error(const ConstraintModel& model, const Vector& q) {
  const std::vector<Matrix> hess = model.hessians(q);
  double worst = 0.0;
  for (int j = 0; j < model.ambient_dim; ++j) {
    Vector qp = q, qm = q;
    const double h = 5e-6 * std::max(1.0, std::abs(q[j]));
    qp[j] += h;
    qm[j] -= h;
    const Matrix col = (model.jacobian(qp) - model.jacobian(qm)) / (2.0 * h);
    for (int i = 0; i < model.codim; ++i) {
      for (int r = 0; r < model.ambient_dim; ++r) {
        const double scale = std::max(1.0, std::abs(hess[i](r, j)));
        worst = std::max(worst, std::abs(hess[i](r, j) - col(r, i)) / scale);
      }
    }
  }
  return worst;
}

}  // namespace

ValidationReport run_validation(const ModelBundle& bundle, const SolverConfig& cfg,
                                std::uint64_t seed) {
  const ConstraintModel& model = bundle.constraint;
  ValidationReport report;
  RngStream rng(seed, 77);

  auto add = [&](const std::string& name, double measured, double tol) {
    report.checks.push_back(
        ValidationCheck{name, tol, measured, std::isfinite(measured) && measured <= tol});
  };

  const double point_scale = 0.15;
  std::vector<Vector> points;
  for (int k = 0; k < 20; ++k) {
    const auto q =
        random_manifold_point(model, bundle.potential, bundle.reference_point, point_scale, cfg, rng);
    if (q) points.push_back(*q);
  }
  if (points.empty()) {
    add("manifold_point_generation", 1.0, 0.0);
    return report;
  }

  // Derivative consistency against central differences.
  double jac_err = 0.0, hess_err = 0.0;
  for (const Vector& q : points) {
    jac_err = std::max(jac_err, fd_jacobian_error(model, q));
    if (model.analytic_hessians) hess_err = std::max(hess_err, fd_hessian_error(model, q));
  }
  add("jacobian_vs_finite_differences", jac_err, 1e-5);
  if (model.analytic_hessians) add("hessians_vs_finite_differences", hess_err, 1e-4);

  // Tangent basis: orthonormal and orthogonal to the constraint gradients.
  double basis_err = 0.0;
  for (const Vector& q : points) {
    const Matrix u = tangent_basis(model, q);
    const Matrix gram_gap = u.transpose() * u - Matrix::Identity(u.cols(), u.cols());
    basis_err = std::max(basis_err, gram_gap.cwiseAbs().maxCoeff());
    basis_err = std::max(basis_err, (model.jacobian(q).transpose() * u).cwiseAbs().maxCoeff());
  }
  add("tangent_basis_orthogonality", basis_err, 1e-10);

  // Projection round trip for points in a thin tube.
  double round_trip_err = 0.0;
  for (const Vector& q : points) {
    const Vector v = 0.02 * rng.normal_vector(model.codim);
    const Vector x = reconstruct(model, q, v);
    const ProjectionResult proj = project_to_manifold(model, x, cfg);
    if (!proj.ok()) {
      round_trip_err = std::numeric_limits<double>::infinity();
      break;
    }
    const Vector rebuilt = reconstruct(model, proj.decomposition.base, proj.decomposition.normal);
    round_trip_err = std::max(round_trip_err, (rebuilt - x).lpNorm<Eigen::Infinity>());
  }
  add("projection_round_trip", round_trip_err, 1e-8);

  // Exchange involution, Jacobian oracle agreement, and reciprocity.
  double involution_err = 0.0, oracle_err = 0.0, reciprocity_err = 0.0;
  int found = 0;
  for (int k = 0; k < 10 && found < 5; ++k) {
    const auto z = random_admissible_state(model, bundle.potential, bundle.reference_point,
                                           point_scale, 0.02, cfg, rng);
    if (!z) continue;
    const auto prop = propose_exchange(model, *z, cfg, JacobianMode::exact);
    if (!prop) continue;
    found += 1;

    const JointState swapped{prop->cold_new, prop->hot_new};
    const auto back = propose_exchange(model, swapped, cfg, JacobianMode::exact);
    if (!back) {
      involution_err = std::numeric_limits<double>::infinity();
      continue;
    }
    involution_err = std::max(involution_err,
                              (back->cold_new - z->cold).lpNorm<Eigen::Infinity>());
    involution_err = std::max(involution_err,
                              (back->hot_new - z->hot).lpNorm<Eigen::Infinity>());
    reciprocity_err = std::max(reciprocity_err,
                               std::abs(prop->jacobian_factor * back->jacobian_factor - 1.0));
    const double fd = fd_jacobian_oracle(model, *z, cfg);
    oracle_err = std::max(oracle_err,
                          std::abs(fd - prop->jacobian_factor) / prop->jacobian_factor);
  }
  if (found > 0) {
    add("exchange_involution", involution_err, 1e-8);
    add("jacobian_reciprocity", reciprocity_err, 1e-10);
    add("jacobian_vs_fd_oracle", oracle_err, 1e-5);
  } else {
    add("admissible_state_generation", 1.0, 0.0);
  }

  // Constraint drift under RATTLE. A failed position solve is a legal
  // rejection in the samplers, so the drift is measured inside the
  // integrator's stability envelope: halve the step and restart when the
  // solve gives out.
  {
    const Vector q0 = points.front();
    const Vector p0 = cotangent_projector(model, q0) * rng.normal_vector(model.ambient_dim);
    double h = 0.01;
    double drift = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 5; ++attempt) {
      PhaseState state{q0, p0};
      double worst = 0.0;
      bool completed = true;
      for (int step = 0; step < 1000; ++step) {
        const RattleResult r = rattle_step(model, bundle.potential, state, h, cfg);
        if (!r.ok()) {
          completed = false;
          break;
        }
        state = r.state;
        worst = std::max(worst, model.residual(state.position).lpNorm<Eigen::Infinity>());
      }
      if (completed) {
        drift = worst;
        break;
      }
      h *= 0.5;
    }
    add("rattle_constraint_drift", drift, 10.0 * cfg.constraint_tol);
  }

  // Leapfrog phase-space volume on the relaxed target.
  {
    const RelaxedTarget target{&model, bundle.potential, 0.5};
    const Potential pot = target.as_potential();
    const int n = model.ambient_dim;
    const Vector q0 = points.front();
    const Vector p0 = rng.normal_vector(n);
    const double h = 0.01;
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
      Vector diff(2 * n);
      diff.head(n) = sp.position - sm.position;
      diff.tail(n) = sp.momentum - sm.momentum;
      jac.col(i) = diff / (2.0 * fd);
    }
    add("leapfrog_volume_determinant", std::abs(std::abs(jac.determinant()) - 1.0), 1e-8);
  }

  return report;
}

}  // namespace rexhmc
