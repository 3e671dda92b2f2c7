#include "rexhmc/exchange.hpp"

#include <cmath>

namespace rexhmc {

namespace {

// det(I + sum_i v_i U^T H_i U) at a manifold point.
double tangent_curvature_det(const ConstraintModel& model, const Vector& q, const Vector& v) {
  const Matrix basis = tangent_basis(model, q);
  const std::vector<Matrix> hess = model.hessians(q);
  Matrix a = Matrix::Identity(basis.cols(), basis.cols());
  for (int i = 0; i < model.codim; ++i) {
    a += v[i] * (basis.transpose() * hess[i] * basis);
  }
  return a.determinant();
}

}  // namespace

std::optional<ExchangeProposal> propose_exchange(const ConstraintModel& model,
                                                 const JointState& z, const SolverConfig& cfg,
                                                 JacobianMode mode) {
  const ProjectionResult hot_proj = project_to_manifold(model, z.hot, cfg);
  if (!hot_proj.ok()) return std::nullopt;

  const Vector& base = hot_proj.decomposition.base;
  const Vector& v = hot_proj.decomposition.normal;

  const Vector hot_new = reconstruct(model, z.cold, v);
  if (!hot_new.allFinite()) return std::nullopt;

  // The swapped hot point must project back onto the current cold point,
  // otherwise the numerical map is not involutive there.
  const ProjectionResult back_proj = project_to_manifold(model, hot_new, cfg);
  if (!back_proj.ok()) return std::nullopt;
  const double base_gap = (back_proj.decomposition.base - z.cold).lpNorm<Eigen::Infinity>();
  if (!(base_gap < cfg.involution_tol)) return std::nullopt;

  ExchangeProposal prop;
  prop.cold_new = base;
  prop.hot_new = hot_new;
  prop.normal = v;
  prop.mode = mode;
  try {
    prop.jacobian_factor = mode == JacobianMode::exact
                               ? jacobian_exact(model, z.cold, base, v)
                               : jacobian_gram(model, z.cold, base);
  } catch (const SingularGramError&) {
    return std::nullopt;
  } catch (const SingularCurvatureError&) {
    return std::nullopt;
  }
  if (!std::isfinite(prop.jacobian_factor) || prop.jacobian_factor <= 0.0) return std::nullopt;
  return prop;
}

double jacobian_exact(const ConstraintModel& model, const Vector& q, const Vector& q_x,
                      const Vector& v) {
  const double log_gram_ratio = gram(model, q).log_det - gram(model, q_x).log_det;
  const double det_q = tangent_curvature_det(model, q, v);
  const double det_qx = tangent_curvature_det(model, q_x, v);
  if (std::abs(det_q) <= 1e-14 || std::abs(det_qx) <= 1e-14) {
    throw SingularCurvatureError("jacobian_exact: curvature determinant vanishes");
  }
  return std::exp(0.5 * log_gram_ratio) * std::abs(det_q) / std::abs(det_qx);
}

double jacobian_gram(const ConstraintModel& model, const Vector& q, const Vector& q_x) {
  return std::exp(0.5 * (gram(model, q).log_det - gram(model, q_x).log_det));
}

double exchange_accept_prob(const Potential& cold_pot, const RelaxedTarget& hot,
                            const JointState& z, const ExchangeProposal& prop) {
  const double log_ratio = -cold_pot.value(prop.cold_new) - hot.value(prop.hot_new) +
                           cold_pot.value(z.cold) + hot.value(z.hot) +
                           std::log(prop.jacobian_factor);
  if (!std::isfinite(log_ratio)) return 0.0;
  return std::min(1.0, std::exp(log_ratio));
}

ExchangeOutcome exchange_step(const ConstraintModel& model, const Potential& cold_pot,
                              const RelaxedTarget& hot, const JointState& z,
                              const SolverConfig& cfg, JacobianMode mode, RngStream& rng) {
  ExchangeOutcome out{z, false, false};
  const std::optional<ExchangeProposal> prop = propose_exchange(model, z, cfg, mode);
  if (!prop) return out;
  out.admissible = true;

  const double alpha = exchange_accept_prob(cold_pot, hot, z, *prop);
  if (rng.uniform() < alpha) {
    out.state = JointState{prop->cold_new, prop->hot_new};
    out.accepted = true;
  }
  return out;
}

}  // namespace rexhmc
