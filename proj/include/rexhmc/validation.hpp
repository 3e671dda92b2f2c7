#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rexhmc/diagnostics.hpp"
#include "rexhmc/models.hpp"

namespace rexhmc {

/// Random manifold point: Gaussian perturbation of `anchor` projected back to
/// the constraint set (and into the potential's domain). Returns nullopt when
/// no admissible point is found within `attempts`.
std::optional<Vector> random_manifold_point(const ConstraintModel& model, const Potential& pot,
                                            const Vector& anchor, double scale,
                                            const SolverConfig& cfg, RngStream& rng,
                                            int attempts = 50);

/// Random admissible joint state: cold point near `anchor`, hot point rebuilt
/// from a second manifold point with a small random normal coordinate, kept
/// only if the exchange check passes.
std::optional<JointState> random_admissible_state(const ConstraintModel& model,
                                                  const Potential& pot, const Vector& anchor,
                                                  double point_scale, double normal_scale,
                                                  const SolverConfig& cfg, RngStream& rng,
                                                  int attempts = 100);

struct ValidationCheck {
  std::string name;
  double tolerance = 0.0;
  double measured = 0.0;
  bool passed = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool all_passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
};

/// Fast invariant battery for a benchmark model: derivative consistency,
/// tangent-basis orthogonality, projection round trip, exchange involution,
/// Jacobian-oracle agreement and reciprocity, constraint drift under RATTLE,
/// and leapfrog volume preservation.
ValidationReport run_validation(const ModelBundle& bundle, const SolverConfig& cfg,
                                std::uint64_t seed);

}  // namespace rexhmc
