#pragma once

#include <optional>

#include "rexhmc/samplers.hpp"

namespace rexhmc {

enum class JacobianMode { exact, gram };

/// Joint state of the constrained chain (cold, on the manifold) and one
/// relaxed chain (hot, ambient).
struct JointState {
  Vector cold;
  Vector hot;
};

/// Deterministic swap proposal: the cold chain moves to the projection base
/// of the hot point, the hot chain is rebuilt from the old cold point with
/// the same normal coordinate.
struct ExchangeProposal {
  Vector cold_new;         // projection base of the hot point
  Vector hot_new;          // cold + J(cold) * normal
  Vector normal;           // shared normal coordinate
  double jacobian_factor = 1.0;
  JacobianMode mode = JacobianMode::exact;
};

/// Reversible involution check. Projects the hot point, rebuilds the swapped
/// hot point, re-projects it, and requires the recovered base to match the
/// current cold point within cfg.involution_tol. Any failure returns nullopt
/// and the chain keeps its state.
std::optional<ExchangeProposal> propose_exchange(const ConstraintModel& model,
                                                 const JointState& z, const SolverConfig& cfg,
                                                 JacobianMode mode);

/// Exact absolute Jacobian of the swap map at (q, x) with x = q_x + J(q_x) v:
/// sqrt(det G(q) / det G(q_x)) times the ratio of tangent curvature
/// determinants det(I + sum_i v_i U^T H_i U) at q and q_x.
double jacobian_exact(const ConstraintModel& model, const Vector& q, const Vector& q_x,
                      const Vector& v);

/// Gram-determinant approximation sqrt(det G(q) / det G(q_x)).
double jacobian_gram(const ConstraintModel& model, const Vector& q, const Vector& q_x);

/// Metropolis--Hastings acceptance probability for the swap, with the cold
/// factor exp(-V(q)) and the hot factor the unnormalized relaxed density.
/// Non-finite ratios map to zero.
double exchange_accept_prob(const Potential& cold_pot, const RelaxedTarget& hot,
                            const JointState& z, const ExchangeProposal& prop);

struct ExchangeOutcome {
  JointState state;
  bool admissible = false;
  bool accepted = false;
};

/// One exchange transition: propose the swap, accept with the Metropolis
/// probability, otherwise keep the state. Never produces an off-manifold
/// cold point.
ExchangeOutcome exchange_step(const ConstraintModel& model, const Potential& cold_pot,
                              const RelaxedTarget& hot, const JointState& z,
                              const SolverConfig& cfg, JacobianMode mode, RngStream& rng);

}  // namespace rexhmc
