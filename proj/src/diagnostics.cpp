#include "rexhmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rexhmc {

double ess(std::span<const double> series) {
  const long n = static_cast<long>(series.size());
  if (n < 10) throw DiagnosticsError("ess: need at least 10 points");

  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  std::vector<double> centered(n);
  for (long i = 0; i < n; ++i) centered[i] = series[i] - mean;

  auto autocov = [&](long lag) {
    double acc = 0.0;
    for (long i = 0; i + lag < n; ++i) acc += centered[i] * centered[i + lag];
    return acc / n;
  };

  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 0.0;  // constant series

  // Geyer initial monotone positive sequence over lag pairs.
  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (long k = 1; k + 1 < n; k += 2) {
    double pair = (autocov(k) + autocov(k + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return std::min(static_cast<double>(n), n / tau);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw DiagnosticsError("split_rhat: need at least 2 chains");
  const size_t len = chains.front().size();
  if (len < 4) throw DiagnosticsError("split_rhat: chains too short");
  for (const auto& c : chains) {
    if (c.size() != len) throw DiagnosticsError("split_rhat: chains must have equal length");
  }

  // Split each chain in half; drop the middle point of odd-length chains.
  const size_t half = len / 2;
  std::vector<std::vector<double>> split;
  for (const auto& c : chains) {
    split.emplace_back(c.begin(), c.begin() + half);
    split.emplace_back(c.end() - half, c.end());
  }

  const size_t m = split.size();
  const double nd = static_cast<double>(half);
  std::vector<double> means(m), vars(m);
  for (size_t j = 0; j < m; ++j) {
    means[j] = std::accumulate(split[j].begin(), split[j].end(), 0.0) / nd;
    double acc = 0.0;
    for (double x : split[j]) acc += (x - means[j]) * (x - means[j]);
    vars[j] = acc / (nd - 1.0);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= nd / (m - 1.0);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (!(w > 0.0)) return 1.0;  // all chains constant
  const double var_hat = (nd - 1.0) / nd * w + b / nd;
  return std::sqrt(var_hat / w);
}

std::vector<double> component_occupancy(const std::vector<Vector>& samples,
                                        const std::function<int(const Vector&)>& labeler,
                                        int n_components) {
  std::vector<double> counts(n_components, 0.0);
  for (const Vector& q : samples) {
    const int label = labeler(q);
    if (label < 0 || label >= n_components) {
      throw DiagnosticsError("component_occupancy: label out of range");
    }
    counts[label] += 1.0;
  }
  if (!samples.empty()) {
    for (double& c : counts) c /= static_cast<double>(samples.size());
  }
  return counts;
}

double tv_error_1d(std::span<const double> samples,
                   const std::function<double(double)>& reference_cdf, double lo, double hi,
                   int bins) {
  if (samples.empty() || !(hi > lo) || bins < 1) {
    throw DiagnosticsError("tv_error_1d: bad inputs");
  }
  const double width = (hi - lo) / bins;

  // bins interior bins plus two tail bins so both vectors are probabilities.
  std::vector<double> empirical(bins + 2, 0.0);
  for (double x : samples) {
    int idx;
    if (x < lo) {
      idx = 0;
    } else if (x >= hi) {
      idx = bins + 1;
    } else {
      idx = 1 + static_cast<int>((x - lo) / width);
      idx = std::clamp(idx, 1, bins);
    }
    empirical[idx] += 1.0;
  }
  for (double& p : empirical) p /= static_cast<double>(samples.size());

  std::vector<double> reference(bins + 2, 0.0);
  reference[0] = reference_cdf(lo);
  for (int b = 0; b < bins; ++b) {
    reference[1 + b] = reference_cdf(lo + (b + 1) * width) - reference_cdf(lo + b * width);
  }
  reference[bins + 1] = 1.0 - reference_cdf(hi);

  double tv = 0.0;
  for (int b = 0; b < bins + 2; ++b) tv += std::abs(empirical[b] - reference[b]);
  return 0.5 * tv;
}

NormalMomentEstimate normal_moment(const std::vector<Vector>& hot_samples,
                                   const ConstraintModel& model, const SolverConfig& cfg) {
  NormalMomentEstimate est;
  double acc = 0.0;
  for (const Vector& x : hot_samples) {
    const ProjectionResult proj = project_to_manifold(model, x, cfg);
    if (!proj.ok()) {
      est.n_excluded += 1;
      continue;
    }
    acc += proj.decomposition.normal.squaredNorm();
    est.n_used += 1;
  }
  if (est.n_used > 0) est.moment = acc / static_cast<double>(est.n_used);
  return est;
}

double fd_jacobian_oracle(const ConstraintModel& model, const JointState& z,
                          const SolverConfig& cfg) {
  const int n = model.ambient_dim;
  const int m = model.codim;
  const int t = n - m;

  // Tight projection tolerances keep the finite-difference noise well below
  // the comparison tolerance.
  SolverConfig tight = cfg;
  tight.constraint_tol = std::min(cfg.constraint_tol, 1e-13);
  tight.max_iterations = std::max(cfg.max_iterations, 100);

  const std::optional<ExchangeProposal> center =
      propose_exchange(model, z, tight, JacobianMode::gram);
  if (!center) throw NotAdmissibleError("fd_jacobian_oracle: center state not admissible");

  const Matrix basis_in = tangent_basis(model, z.cold);
  const Matrix basis_out = tangent_basis(model, center->cold_new);

  const double scale =
      std::max({1.0, z.cold.lpNorm<Eigen::Infinity>(), z.hot.lpNorm<Eigen::Infinity>()});
  const double delta = 1e-6 * scale;

  // The exchange map in chart coordinates: tangent coordinates u around the
  // cold point, ambient coordinates for the hot point.
  auto mapped = [&](const Vector& u, const Vector& x) -> Vector {
    Vector cold_pt = z.cold;
    if (u.size() > 0) {
      const ProjectionResult moved = project_to_manifold(model, z.cold + basis_in * u, tight);
      if (!moved.ok()) throw NotAdmissibleError("fd_jacobian_oracle: cold perturbation failed");
      cold_pt = moved.decomposition.base;
    }
    const ProjectionResult hot_proj = project_to_manifold(model, x, tight);
    if (!hot_proj.ok()) throw NotAdmissibleError("fd_jacobian_oracle: hot projection failed");

    Vector out(t + n);
    out.head(t) = basis_out.transpose() * (hot_proj.decomposition.base - center->cold_new);
    out.tail(n) = reconstruct(model, cold_pt, hot_proj.decomposition.normal);
    return out;
  };

  Matrix jac(t + n, t + n);
  for (int i = 0; i < t + n; ++i) {
    Vector u_plus = Vector::Zero(t), u_minus = Vector::Zero(t);
    Vector x_plus = z.hot, x_minus = z.hot;
    if (i < t) {
      u_plus[i] += delta;
      u_minus[i] -= delta;
    } else {
      x_plus[i - t] += delta;
      x_minus[i - t] -= delta;
    }
    jac.col(i) = (mapped(u_plus, x_plus) - mapped(u_minus, x_minus)) / (2.0 * delta);
  }
  return std::abs(jac.determinant());
}

}  // namespace rexhmc
