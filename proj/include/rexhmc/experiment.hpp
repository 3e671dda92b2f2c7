#pragma once

#include <iosfwd>
#include <optional>

#include "rexhmc/config.hpp"
#include "rexhmc/models.hpp"
#include "rexhmc/replica.hpp"
#include "rexhmc/validation.hpp"

namespace rexhmc {

/// Benchmark bundle for a parsed configuration (including custom models).
ModelBundle bundle_from_config(const ExperimentConfig& cfg);

/// Replica-exchange driver configuration with per-benchmark kernel defaults
/// filled in wherever the config leaves them unset.
ReplicaConfig replica_config_from(const ExperimentConfig& cfg, const ModelBundle& bundle);

struct TvSweepResult {
  std::vector<double> epsilons;
  std::vector<double> tv_gram;
  std::vector<double> tv_exact;
  std::optional<double> gram_loglog_slope;    // present when >= 2 epsilons
  std::optional<double> exact_spearman_rho;   // rank correlation of tv_exact vs epsilon
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  int bins = 50;
  // Direct Monte Carlo of the Jacobian approximation error and the normal
  // displacement over admissible joint states of the gram-mode runs.
  std::vector<double> jacobian_gap;
  std::vector<double> mean_normal;
};

/// Gram-vs-exact bias sweep on the four-ellipse benchmark: one replica run
/// per (epsilon, mode), total-variation error of the cold q1 marginal
/// against the arc-length reference.
TvSweepResult run_tv_sweep(const ExperimentConfig& cfg);

// Experiment commands. Exit codes: 0 success, 1 failed validation,
// 2 configuration error (raised by the caller at parse time), 3 runtime
// failure.
int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_tv_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_validate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace rexhmc
