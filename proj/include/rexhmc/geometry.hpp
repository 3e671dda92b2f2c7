#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rexhmc/rng.hpp"

namespace rexhmc {

/// Implicitly defined manifold {q : residual(q) = 0} in R^n with m scalar
/// constraints, m < n. `jacobian` returns the n x m matrix whose columns are
/// the constraint gradients; `hessians` returns the m symmetric n x n second
/// derivative matrices. Immutable after construction; all evaluations are
/// thread-safe as long as the stored callables are.
struct ConstraintModel {
  int ambient_dim = 0;
  int codim = 0;
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
  std::function<std::vector<Matrix>(const Vector&)> hessians;
  bool analytic_hessians = true;

  int tangent_dim() const { return ambient_dim - codim; }
};

/// Attach finite-difference Hessians (central differences of the Jacobian)
/// to a model that only supplies residual and Jacobian.
void attach_fd_hessians(ConstraintModel& model, double step = 1e-5);

/// Tolerances for the nonlinear projection solves and the exchange checks.
struct SolverConfig {
  double constraint_tol = 1e-10;      // infinity-norm on the projection residual
  double reconstruction_tol = 1e-8;   // ||x - (q + J(q) v)||
  int max_iterations = 50;
  int max_backtracks = 20;
  double normal_cap = 1.0;            // reject decompositions with ||v|| beyond this
  double involution_tol = 1e-6;       // infinity-norm base-point match in the exchange check
  double reversibility_tol = 1e-8;    // infinity-norm position match for trajectory reversal
};

/// Normal-bundle coordinates of an ambient point: source = base + J(base) * normal.
struct TubularDecomposition {
  Vector base;
  Vector normal;
  Vector source;
};

enum class ProjectionStatus { ok, no_convergence, normal_cap_exceeded };

struct ProjectionResult {
  ProjectionStatus status = ProjectionStatus::no_convergence;
  TubularDecomposition decomposition;

  bool ok() const { return status == ProjectionStatus::ok; }
};

struct GramMatrix {
  Matrix value;
  double log_det = 0.0;
};

class SingularGramError : public std::runtime_error {
 public:
  explicit SingularGramError(const std::string& what) : std::runtime_error(what) {}
};

class SingularCurvatureError : public std::runtime_error {
 public:
  explicit SingularCurvatureError(const std::string& what) : std::runtime_error(what) {}
};

/// Gram matrix G(q) = J(q)^T J(q) and its log-determinant.
/// Throws SingularGramError when G is not positive definite.
GramMatrix gram(const ConstraintModel& model, const Vector& q);

/// Deterministic orthonormal basis U(q) of the tangent space at q:
/// U^T U = I and J(q)^T U = 0. Sign convention: the first entry of each
/// column with magnitude above 1e-12 is positive.
Matrix tangent_basis(const ConstraintModel& model, const Vector& q);

/// Solve x = q + J(q) v, residual(q) = 0 for (q, v) by Newton iteration with
/// step halving, starting from (x, 0). Failure to converge and a normal
/// coordinate beyond cfg.normal_cap are expected outcomes, not errors.
ProjectionResult project_to_manifold(const ConstraintModel& model, const Vector& x,
                                     const SolverConfig& cfg);

/// Evaluate q + J(q) v.
Vector reconstruct(const ConstraintModel& model, const Vector& q, const Vector& v);

}  // namespace rexhmc
