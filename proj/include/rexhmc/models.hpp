#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "rexhmc/dynamics.hpp"
#include "rexhmc/geometry.hpp"

namespace rexhmc {

class ConstructionError : public std::invalid_argument {
 public:
  explicit ConstructionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A benchmark: constraint model, potential, component labeler, and a point
/// on the manifold to start from. `output_scales`, when nonempty, maps the
/// model's working coordinates back to natural parameter units.
struct ModelBundle {
  std::string name;
  ConstraintModel constraint;
  Potential potential;
  std::function<int(const Vector&)> component_label;
  int n_components = 1;
  Vector reference_point;
  Vector output_scales;
  // Cap on the normal coordinate in projections. The natural scale of v is
  // set by the inverse Gram matrix, so models with weak constraint gradients
  // need a larger cap.
  double normal_cap = 1.0;
};

struct EllipseSuiteParams {
  std::vector<std::array<double, 2>> centers = {{{2.0, 0.0}, {-2.0, 0.0}, {0.0, 2.0}, {0.0, -2.0}}};
  std::vector<double> a = {1.6, 0.8, 1.2, 0.6};
  std::vector<double> b = {0.6, 1.4, 0.9, 1.3};
};

struct SirParams {
  // Natural-unit true parameters (beta1, beta2, gamma1, gamma2, rho); the
  // target combination is the regularized identifiable map evaluated here.
  Vector theta_star = (Vector(5) << 1.6e-7, 1.3e-7, 0.2, 0.1, 0.3).finished();
  double delta = 1e-8;
  Vector box_lo = (Vector(5) << 1e-8, 1e-8, 0.01, 0.01, 0.01).finished();
  Vector box_hi = (Vector(5) << 1e-6, 1e-6, 1.0, 1.0, 1.0).finished();
  // Working-coordinate scales; sampling runs in theta / scales.
  Vector scales = (Vector(5) << 1e-7, 1e-7, 0.1, 0.1, 0.1).finished();
};

struct TetrahedronParams {
  // Coefficient of the signed bond-vector volume in the chiral potential.
  // The default makes the component log-ratio equal to -sqrt(2).
  double chiral_strength = 3.0 * std::sqrt(6.0) / 8.0;
};

/// Unit circle ||q||^2 - 1 with zero potential.
ModelBundle make_circle();

/// Single axis-aligned ellipse q1^2/a^2 + q2^2/b^2 - 1 with zero potential.
ModelBundle make_ellipse(double a, double b);

/// Four disconnected ellipses as one scalar constraint (n = 2, m = 1).
/// The residual is the product of the per-ellipse factors, normalized by the
/// root-sum-square of the leave-one-out partial products, so near each
/// component it behaves like that component's own factor and stays O(1)
/// between components. Throws ConstructionError on overlapping ellipses.
ModelBundle build_ellipse_suite(const EllipseSuiteParams& params = {});

/// Identifiable-combination level set of the two-strain SIR model
/// (n = 5, m = 4, one-dimensional manifold). Works in scaled coordinates
/// u = theta / scales with a componentwise-normalized residual; the box
/// prior is a hard domain constraint. Throws ConstructionError on an
/// invalid box.
ModelBundle build_sir(const SirParams& params = {});

/// Rigid tetrahedron with unit bonds and tetrahedral angles (n = 9, m = 6)
/// and chiral potential proportional to det[q2 q3 q4].
ModelBundle build_tetrahedron(const TetrahedronParams& params = {});

ModelBundle build_benchmark(const std::string& name);

struct ReferenceQuantities {
  std::string benchmark;
  std::string method;
  std::vector<double> component_occupancy;
  double component_ratio = std::numeric_limits<double>::quiet_NaN();
};

ReferenceQuantities reference_quantities(const std::string& benchmark);

/// Arc-length CDF of the q1 marginal of the uniform distribution on the
/// four-ellipse manifold, built by dense quadrature. Used as the reference
/// for total-variation error measurements.
std::function<double(double)> ellipse_q1_reference_cdf(const EllipseSuiteParams& params = {},
                                                       int grid = 1 << 20);

/// Perimeter of an axis-aligned ellipse by composite Simpson quadrature.
double ellipse_perimeter(double a, double b);

}  // namespace rexhmc
