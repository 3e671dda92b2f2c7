#include "rexhmc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "rexhmc/diagnostics.hpp"

namespace rexhmc {

namespace {

using nlohmann::json;

struct KernelDefaults {
  double cold_step;
  int cold_steps;
  double hot_step_coef;  // hot step size = coef * sqrt(epsilon)
  int hot_steps;
  std::vector<double> ladder;
};

KernelDefaults defaults_for(const std::string& benchmark, const std::string& custom_kind) {
  if (benchmark == "ellipses") return {0.05, 8, 0.25, 20, {0.3}};
  if (benchmark == "sir") return {0.02, 14, 0.10, 8, {0.05, 0.12, 0.3, 0.8, 2.0}};
  if (benchmark == "tetrahedron") return {0.08, 10, 0.35, 15, {0.05, 0.15, 0.30, 0.60}};
  if (custom_kind == "ellipse") return {0.05, 10, 0.5, 20, {0.25}};
  return {0.1, 25, 0.5, 20, {0.25}};  // circle
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<Vector>& samples,
                     const Vector& scales, const std::function<int(const Vector&)>& labeler) {
  std::ofstream out(path);
  const int dim = samples.empty() ? 0 : static_cast<int>(samples.front().size());
  out << "iteration";
  for (int i = 0; i < dim; ++i) out << ",q" << (i + 1);
  if (labeler) out << ",component";
  out << "\n";
  for (size_t k = 0; k < samples.size(); ++k) {
    out << k;
    for (int i = 0; i < dim; ++i) {
      const double value = scales.size() > 0 ? samples[k][i] * scales[i] : samples[k][i];
      out << ',' << format_double(value);
    }
    if (labeler) out << ',' << labeler(samples[k]);
    out << "\n";
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  return x ^ (x >> 31);
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i + 1);
    return r;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0.0;
  for (size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

json counters_to_json(const ChainTrace& trace) {
  const ReplicaCounters& c = trace.counters;
  json rates;
  rates["cold"] = c.cold_attempts > 0 ? static_cast<double>(c.cold_accepts) / c.cold_attempts : 0.0;
  for (size_t i = 0; i < c.level_attempts.size(); ++i) {
    rates["level_" + std::to_string(i + 1)] =
        c.level_attempts[i] > 0 ? static_cast<double>(c.level_accepts[i]) / c.level_attempts[i]
                                : 0.0;
  }
  for (size_t i = 0; i < c.ladder_swap_attempts.size(); ++i) {
    const std::string name = "swap_" + std::to_string(i + 1) + "_" + std::to_string(i + 2);
    rates[name] = c.ladder_swap_attempts[i] > 0
                      ? static_cast<double>(c.ladder_swap_accepts[i]) / c.ladder_swap_attempts[i]
                      : 0.0;
  }
  rates["exchange_manifold"] =
      c.exchange_attempts > 0 ? static_cast<double>(c.exchange_accepts) / c.exchange_attempts : 0.0;
  rates["exchange_admissible_fraction"] =
      c.exchange_attempts > 0 ? static_cast<double>(c.exchange_admissible) / c.exchange_attempts
                              : 0.0;
  return rates;
}

json resolved_config_json(const ExperimentConfig& cfg, const ReplicaConfig& replica) {
  json j;
  j["benchmark"] = cfg.benchmark;
  j["seed"] = cfg.seed;
  j["iterations"] = replica.n_iterations;
  j["exchange_period"] = replica.exchange_period;
  j["jacobian_mode"] = replica.jacobian_mode == JacobianMode::exact ? "exact" : "gram";
  j["discard_fraction"] = cfg.discard_fraction;
  j["threads"] = replica.threads;
  j["cold_kernel"] = {{"step_size", replica.cold_kernel.step_size},
                      {"n_steps", replica.cold_kernel.n_steps}};
  json ladder = json::array();
  for (const LadderLevel& level : replica.ladder) {
    ladder.push_back({{"epsilon", level.epsilon},
                      {"step_size", level.kernel.step_size},
                      {"n_steps", level.kernel.n_steps}});
  }
  j["ladder"] = ladder;
  j["solver"] = {{"constraint_tol", replica.solver.constraint_tol},
                 {"reconstruction_tol", replica.solver.reconstruction_tol},
                 {"max_iterations", replica.solver.max_iterations},
                 {"normal_cap", replica.solver.normal_cap},
                 {"involution_tol", replica.solver.involution_tol},
                 {"reversibility_tol", replica.solver.reversibility_tol}};
  return j;
}

}  // namespace

ModelBundle bundle_from_config(const ExperimentConfig& cfg) {
  if (cfg.benchmark == "ellipses") return build_ellipse_suite();
  if (cfg.benchmark == "sir") {
    SirParams params;
    if (cfg.sir_delta) params.delta = *cfg.sir_delta;
    return build_sir(params);
  }
  if (cfg.benchmark == "tetrahedron") {
    TetrahedronParams params;
    if (cfg.tetra_chiral_strength) params.chiral_strength = *cfg.tetra_chiral_strength;
    return build_tetrahedron(params);
  }
  // custom: the simple conic models with an optional linear potential.
  ModelBundle bundle;
  if (cfg.custom_kind == "circle") {
    bundle = make_circle();
  } else if (cfg.custom_kind == "ellipse") {
    bundle = make_ellipse(cfg.custom_a, cfg.custom_b);
  } else {
    throw ConfigError("config: custom.kind must be 'circle' or 'ellipse'");
  }
  if (cfg.custom_potential == "linear_q1") {
    bundle.potential.value = [](const Vector& q) { return q[0]; };
    bundle.potential.gradient = [](const Vector& q) {
      Vector g = Vector::Zero(q.size());
      g[0] = 1.0;
      return g;
    };
  } else if (cfg.custom_potential != "none") {
    throw ConfigError("config: custom.potential must be 'none' or 'linear_q1'");
  }
  return bundle;
}

ReplicaConfig replica_config_from(const ExperimentConfig& cfg, const ModelBundle& bundle) {
  const KernelDefaults defs = defaults_for(cfg.benchmark, cfg.custom_kind);

  ReplicaConfig replica;
  replica.n_iterations = cfg.iterations;
  replica.exchange_period = cfg.exchange_period;
  replica.master_seed = cfg.seed;
  // The exact Jacobian needs the constraint Hessians and two tangent
  // determinants per proposal; beyond moderate dimensions default to the
  // Gram approximation.
  const int problem_size = bundle.constraint.ambient_dim + bundle.constraint.codim;
  replica.jacobian_mode =
      cfg.jacobian_mode.value_or(problem_size <= 64 ? JacobianMode::exact : JacobianMode::gram);
  replica.threads = cfg.threads.value_or(1);
  replica.solver.normal_cap = bundle.normal_cap;
  replica.cold_initial = bundle.reference_point;
  replica.cold_kernel.step_size = cfg.cold_step_size.value_or(defs.cold_step);
  replica.cold_kernel.n_steps = cfg.cold_n_steps.value_or(defs.cold_steps);

  std::vector<LadderEntryConfig> entries = cfg.ladder;
  if (entries.empty()) {
    for (double eps : defs.ladder) entries.push_back(LadderEntryConfig{eps, {}, {}});
  }
  for (const LadderEntryConfig& entry : entries) {
    LadderLevel level;
    level.epsilon = entry.epsilon;
    level.kernel.step_size = entry.step_size.value_or(defs.hot_step_coef * std::sqrt(entry.epsilon));
    level.kernel.n_steps = entry.n_steps.value_or(defs.hot_steps);
    level.initial_state = bundle.reference_point;
    replica.ladder.push_back(level);
  }
  return replica;
}

TvSweepResult run_tv_sweep(const ExperimentConfig& cfg) {
  if (cfg.benchmark != "ellipses") {
    throw ConfigError("tv-sweep: benchmark must be 'ellipses'");
  }
  const ModelBundle bundle = bundle_from_config(cfg);
  const auto reference = ellipse_q1_reference_cdf();

  TvSweepResult result;
  result.bin_lo = -2.8;
  result.bin_hi = 3.6;
  result.bins = 50;

  std::uint64_t run_index = 0;
  for (double eps : cfg.tv_epsilons) {
    double tv_by_mode[2] = {0.0, 0.0};
    double gap = 0.0, mean_v = 0.0;
    for (int mode = 0; mode < 2; ++mode) {
      ExperimentConfig local = cfg;
      local.iterations = cfg.tv_iterations;
      local.ladder = {LadderEntryConfig{eps, {}, {}}};
      local.jacobian_mode = mode == 0 ? JacobianMode::gram : JacobianMode::exact;
      ReplicaConfig replica = replica_config_from(local, bundle);
      replica.master_seed = derive_seed(cfg.seed, run_index++);
      replica.hot_record_every = mode == 0 ? 16 : 0;

      const ChainTrace trace = run_replica(bundle.constraint, bundle.potential, replica);
      const size_t discard =
          static_cast<size_t>(cfg.discard_fraction * static_cast<double>(trace.cold_samples.size()));
      std::vector<double> q1;
      q1.reserve(trace.cold_samples.size() - discard);
      for (size_t k = discard; k < trace.cold_samples.size(); ++k) {
        q1.push_back(trace.cold_samples[k][0]);
      }
      tv_by_mode[mode] = tv_error_1d(q1, reference, result.bin_lo, result.bin_hi, result.bins);

      if (mode == 0) {
        // Jacobian approximation error over the run's own joint states.
        long n_states = 0;
        const auto& hot = trace.hot_samples[0];
        for (size_t j = discard / 16; j < hot.size(); ++j) {
          const JointState z{trace.cold_samples[std::min(j * 16, trace.cold_samples.size() - 1)],
                             hot[j]};
          const auto prop = propose_exchange(bundle.constraint, z, replica.solver,
                                             JacobianMode::exact);
          if (!prop) continue;
          gap += std::abs(jacobian_gram(bundle.constraint, z.cold, prop->cold_new) -
                          prop->jacobian_factor);
          mean_v += prop->normal.norm();
          n_states += 1;
        }
        if (n_states > 0) {
          gap /= static_cast<double>(n_states);
          mean_v /= static_cast<double>(n_states);
        }
      }
    }
    result.epsilons.push_back(eps);
    result.tv_gram.push_back(tv_by_mode[0]);
    result.tv_exact.push_back(tv_by_mode[1]);
    result.jacobian_gap.push_back(gap);
    result.mean_normal.push_back(mean_v);
  }

  if (result.epsilons.size() >= 2) {
    std::vector<double> log_eps, log_tv;
    for (size_t i = 0; i < result.epsilons.size(); ++i) {
      log_eps.push_back(std::log(result.epsilons[i]));
      log_tv.push_back(std::log(std::max(result.tv_gram[i], 1e-12)));
    }
    result.gram_loglog_slope = ols_slope(log_eps, log_tv);
    result.exact_spearman_rho = spearman_rho(result.epsilons, result.tv_exact);
  }
  return result;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelBundle bundle = bundle_from_config(cfg);
    ReplicaConfig replica = replica_config_from(cfg, bundle);
    replica.hot_record_every = cfg.emit_traces ? 1 : 0;

    // Fail on an unwritable output directory before the run, not after.
    const std::filesystem::path dir(cfg.output_dir);
    if (cfg.emit_traces || cfg.emit_summary) std::filesystem::create_directories(dir);

    const ChainTrace trace = run_replica(bundle.constraint, bundle.potential, replica);

    if (cfg.emit_traces) {
      write_trace_csv(dir / "cold_trace.csv", trace.cold_samples, bundle.output_scales,
                      bundle.component_label);
      for (size_t level = 0; level < trace.hot_samples.size(); ++level) {
        write_trace_csv(dir / ("hot_trace_" + std::to_string(level + 1) + ".csv"),
                        trace.hot_samples[level], bundle.output_scales, nullptr);
      }
    }

    if (cfg.emit_summary) {
      const auto discard = static_cast<std::ptrdiff_t>(
          cfg.discard_fraction * static_cast<double>(trace.cold_samples.size()));
      std::vector<Vector> kept(trace.cold_samples.begin() + discard, trace.cold_samples.end());

      const std::vector<double> occupancy =
          component_occupancy(kept, bundle.component_label, bundle.n_components);

      std::vector<double> first_coord;
      std::vector<double> component_series;
      first_coord.reserve(kept.size());
      for (const Vector& q : kept) {
        first_coord.push_back(q[0]);
        component_series.push_back(static_cast<double>(bundle.component_label(q)));
      }

      json summary;
      summary["config"] = resolved_config_json(cfg, replica);
      summary["accept_rates"] = counters_to_json(trace);
      summary["occupancy"] = occupancy;
      summary["post_burn_in_samples"] = kept.size();
      if (kept.size() >= 10) {
        const double ess_q1 = ess(first_coord);
        summary["ess"] = {{"first_coordinate", ess_q1},
                          {"first_coordinate_per_n", ess_q1 / static_cast<double>(kept.size())}};
        // Component indicator mixes slowest; report it when it moves at all.
        const auto minmax = std::minmax_element(component_series.begin(), component_series.end());
        if (*minmax.first != *minmax.second) {
          const double ess_label = ess(component_series);
          summary["ess"]["component"] = ess_label;
          summary["ess"]["component_per_n"] = ess_label / static_cast<double>(kept.size());
        }
        // Single-run split R-hat over four consecutive segments.
        const size_t quarter = first_coord.size() / 4;
        if (quarter >= 4) {
          std::vector<std::vector<double>> segments;
          for (int s = 0; s < 4; ++s) {
            segments.emplace_back(first_coord.begin() + s * quarter,
                                  first_coord.begin() + (s + 1) * quarter);
          }
          summary["split_rhat_first_coordinate"] = split_rhat(segments);
        }
      }
      const auto t1 = std::chrono::steady_clock::now();
      summary["runtime_seconds"] = std::chrono::duration<double>(t1 - t0).count();
      std::ofstream jf(dir / "summary.json");
      jf << summary.dump(2) << "\n";
    }

    out << "run complete: " << cfg.benchmark << ", " << cfg.iterations << " iterations, outputs in "
        << cfg.output_dir << "\n";
    return 0;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 3;
  }
}

int cmd_tv_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const TvSweepResult result = run_tv_sweep(cfg);

    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path dir(cfg.output_dir);
    {
      std::ofstream csv(dir / "tv_sweep.csv");
      csv << "epsilon,tv_gram,tv_exact\n";
      for (size_t i = 0; i < result.epsilons.size(); ++i) {
        csv << format_double(result.epsilons[i]) << ',' << format_double(result.tv_gram[i]) << ','
            << format_double(result.tv_exact[i]) << "\n";
      }
    }
    json summary;
    summary["epsilons"] = result.epsilons;
    summary["tv_gram"] = result.tv_gram;
    summary["tv_exact"] = result.tv_exact;
    summary["jacobian_gap"] = result.jacobian_gap;
    summary["mean_normal"] = result.mean_normal;
    summary["binning"] = {{"lo", result.bin_lo}, {"hi", result.bin_hi}, {"bins", result.bins}};
    if (result.gram_loglog_slope) summary["gram_loglog_slope"] = *result.gram_loglog_slope;
    if (result.exact_spearman_rho) summary["exact_spearman_rho"] = *result.exact_spearman_rho;
    std::ofstream jf(dir / "tv_summary.json");
    jf << summary.dump(2) << "\n";

    out << "tv-sweep complete: " << result.epsilons.size() << " epsilons";
    if (result.gram_loglog_slope) out << ", gram log-log slope " << *result.gram_loglog_slope;
    out << "\n";
    return 0;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 3;
  }
}

int cmd_validate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const ModelBundle bundle = bundle_from_config(cfg);
    SolverConfig solver;
    solver.normal_cap = bundle.normal_cap;
    const ValidationReport report = run_validation(bundle, solver, cfg.seed);

    json j;
    j["benchmark"] = cfg.benchmark;
    j["passed"] = report.all_passed();
    json checks = json::array();
    for (const ValidationCheck& c : report.checks) {
      checks.push_back({{"name", c.name},
                        {"tolerance", c.tolerance},
                        {"measured", c.measured},
                        {"passed", c.passed}});
    }
    j["checks"] = checks;
    out << j.dump(2) << "\n";
    return report.all_passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace rexhmc
