#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rexhmc/replica.hpp"

namespace rexhmc {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct LadderEntryConfig {
  double epsilon = 0.0;
  std::optional<double> step_size;
  std::optional<int> n_steps;
};

/// Parsed experiment configuration. Unset kernel parameters and an empty
/// ladder fall back to per-benchmark defaults at resolution time.
struct ExperimentConfig {
  std::string benchmark;  // ellipses | sir | tetrahedron | custom
  std::uint64_t seed = 0;
  long iterations = 10000;
  int exchange_period = 10;
  // Unset: exact up to ambient + constraint dimension 64, gram beyond.
  std::optional<JacobianMode> jacobian_mode;
  double discard_fraction = 0.0;
  std::string output_dir = "out";
  bool emit_traces = true;
  bool emit_summary = true;
  std::optional<int> threads;

  std::optional<double> cold_step_size;
  std::optional<int> cold_n_steps;
  std::vector<LadderEntryConfig> ladder;

  // Benchmark parameter overrides.
  std::optional<double> tetra_chiral_strength;
  std::optional<double> sir_delta;
  std::string custom_kind = "circle";  // circle | ellipse
  double custom_a = 1.0;
  double custom_b = 1.0;
  std::string custom_potential = "none";  // none | linear_q1

  // tv-sweep settings (benchmark must be ellipses).
  std::vector<double> tv_epsilons = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  long tv_iterations = 150000;
};

/// Parse `key = value` lines with '#' comments. Ladder entries use one
/// nesting level: ladder.<i>.epsilon, ladder.<i>.step_size,
/// ladder.<i>.n_steps with i starting at 1. Unknown keys and malformed
/// values throw ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace rexhmc
