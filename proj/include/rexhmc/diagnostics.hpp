#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rexhmc/exchange.hpp"

namespace rexhmc {

class DiagnosticsError : public std::invalid_argument {
 public:
  explicit DiagnosticsError(const std::string& what) : std::invalid_argument(what) {}
};

/// Effective sample size from the initial monotone positive autocorrelation
/// sequence. A constant series has ESS 0 by convention; the estimate is
/// capped at the series length. Throws DiagnosticsError for fewer than 10
/// points.
double ess(std::span<const double> series);

/// Split potential scale reduction over two or more equal-length chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Proportion of samples per component label; proportions sum to one.
std::vector<double> component_occupancy(const std::vector<Vector>& samples,
                                        const std::function<int(const Vector&)>& labeler,
                                        int n_components);

/// Binned total variation distance between the empirical distribution of
/// `samples` and the reference CDF, over `bins` equal-width bins on [lo, hi]
/// plus two tail bins.
double tv_error_1d(std::span<const double> samples,
                   const std::function<double(double)>& reference_cdf, double lo, double hi,
                   int bins = 50);

struct NormalMomentEstimate {
  double moment = 0.0;  // Monte Carlo estimate of E ||v||^2
  long n_used = 0;
  long n_excluded = 0;  // samples without a converged projection
};

/// Mean squared normal displacement of ambient samples under the tubular
/// decomposition. Non-projectable samples are excluded and counted.
NormalMomentEstimate normal_moment(const std::vector<Vector>& hot_samples,
                                   const ConstraintModel& model, const SolverConfig& cfg);

class NotAdmissibleError : public std::runtime_error {
 public:
  explicit NotAdmissibleError(const std::string& what) : std::runtime_error(what) {}
};

/// Finite-difference determinant of the numerical exchange map in chart
/// coordinates: orthonormal tangent coordinates for the manifold factor,
/// ambient coordinates for the hot factor. Independent oracle for the
/// analytic Jacobian; throws NotAdmissibleError when the state or one of its
/// perturbations fails the projection.
double fd_jacobian_oracle(const ConstraintModel& model, const JointState& z,
                          const SolverConfig& cfg);

}  // namespace rexhmc
