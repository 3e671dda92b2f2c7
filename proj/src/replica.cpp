#include "rexhmc/replica.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace rexhmc {

double ladder_swap_accept_prob(const RelaxedTarget& lo, const RelaxedTarget& hi,
                               const Vector& x_lo, const Vector& x_hi) {
  const double log_ratio =
      lo.value(x_lo) + hi.value(x_hi) - lo.value(x_hi) - hi.value(x_lo);
  if (!std::isfinite(log_ratio)) return 0.0;
  return std::min(1.0, std::exp(log_ratio));
}

void ladder_swap(const std::vector<RelaxedTarget>& targets, std::vector<Vector>& states,
                 int parity, RngStream& rng, std::vector<long>& attempts,
                 std::vector<long>& accepts, std::vector<ExchangeEvent>& log, long iteration) {
  const int n_levels = static_cast<int>(targets.size());
  for (int i = parity; i + 1 < n_levels; i += 2) {
    attempts[i] += 1;
    const double alpha =
        ladder_swap_accept_prob(targets[i], targets[i + 1], states[i], states[i + 1]);
    const bool accept = rng.uniform() < alpha;
    if (accept) {
      std::swap(states[i], states[i + 1]);
      accepts[i] += 1;
    }
    log.push_back(ExchangeEvent{iteration, i, accept});
  }
}

ChainTrace run_replica(const ConstraintModel& model, const Potential& cold_pot,
                       const ReplicaConfig& cfg) {
  const long n_iter = cfg.n_iterations;
  const int n_levels = static_cast<int>(cfg.ladder.size());
  const long period = std::max<long>(1, cfg.exchange_period);

  if (!cfg.cold_initial.allFinite() ||
      model.residual(cfg.cold_initial).lpNorm<Eigen::Infinity>() > cfg.solver.constraint_tol) {
    throw InvalidInitialPointError("run_replica: cold initial point violates the constraint");
  }
  for (int i = 0; i + 1 < n_levels; ++i) {
    if (!(cfg.ladder[i].epsilon < cfg.ladder[i + 1].epsilon)) {
      throw std::invalid_argument("run_replica: ladder epsilons must be strictly increasing");
    }
  }

  std::vector<RelaxedTarget> targets;
  targets.reserve(n_levels);
  for (const LadderLevel& level : cfg.ladder) {
    targets.push_back(RelaxedTarget{&model, cold_pot, level.epsilon});
  }

  Vector cold = cfg.cold_initial;
  std::vector<Vector> hot(n_levels);
  for (int i = 0; i < n_levels; ++i) {
    hot[i] = cfg.ladder[i].initial_state.size() > 0 ? cfg.ladder[i].initial_state
                                                    : cfg.cold_initial;
    if (!hot[i].allFinite()) {
      throw InvalidInitialPointError("run_replica: hot initial point not finite");
    }
  }

  // Stream layout: cold chain 0, ladder level i at 1 + i, exchange phase last.
  RngStream cold_rng(cfg.master_seed, 0);
  std::vector<RngStream> hot_rng;
  hot_rng.reserve(n_levels);
  for (int i = 0; i < n_levels; ++i) hot_rng.emplace_back(cfg.master_seed, 1 + i);
  RngStream exchange_rng(cfg.master_seed, 1 + static_cast<std::uint64_t>(n_levels));

  ChainTrace trace;
  trace.hot_record_every = cfg.hot_record_every;
  trace.cold_samples.reserve(n_iter + 1);
  trace.cold_samples.push_back(cold);
  trace.hot_samples.assign(n_levels, {});
  if (cfg.hot_record_every > 0) {
    for (int i = 0; i < n_levels; ++i) {
      trace.hot_samples[i].reserve(n_iter / cfg.hot_record_every + 2);
      trace.hot_samples[i].push_back(hot[i]);
    }
  }
  trace.counters.level_attempts.assign(n_levels, 0);
  trace.counters.level_accepts.assign(n_levels, 0);
  trace.counters.ladder_swap_attempts.assign(std::max(0, n_levels - 1), 0);
  trace.counters.ladder_swap_accepts.assign(std::max(0, n_levels - 1), 0);

  // Per-segment scratch written by workers; merged on the barrier thread.
  std::vector<Vector> cold_segment;
  std::vector<std::vector<Vector>> hot_segment(n_levels);
  std::vector<long> cold_acc_segment(1, 0);
  std::vector<long> hot_acc_segment(n_levels, 0);

  auto advance_cold = [&](long steps) {
    cold_acc_segment[0] = 0;
    cold_segment.clear();
    Vector q = cold;
    for (long s = 0; s < steps; ++s) {
      const StepResult r = chmc_step(model, cold_pot, q, cfg.cold_kernel, cfg.solver, cold_rng);
      q = r.point;
      cold_acc_segment[0] += r.accepted ? 1 : 0;
      cold_segment.push_back(q);
    }
    cold = q;
  };

  auto advance_level = [&](int level, long steps) {
    hot_acc_segment[level] = 0;
    hot_segment[level].clear();
    Vector x = hot[level];
    for (long s = 0; s < steps; ++s) {
      const StepResult r = hmc_step(targets[level], x, cfg.ladder[level].kernel, hot_rng[level]);
      x = r.point;
      hot_acc_segment[level] += r.accepted ? 1 : 0;
      hot_segment[level].push_back(x);
    }
    hot[level] = x;
  };

  int swap_parity = 0;
  long iter = 0;
  while (iter < n_iter) {
    const long barrier = std::min(n_iter, (iter / period + 1) * period);
    const long steps = barrier - iter;

    if (cfg.threads <= 1 || n_levels == 0) {
      advance_cold(steps);
      for (int i = 0; i < n_levels; ++i) advance_level(i, steps);
    } else {
      // Chains are independent between barriers; distribute them round-robin.
      const int n_workers = std::min(cfg.threads, n_levels + 1);
      std::vector<std::thread> pool;
      pool.reserve(n_workers);
      for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&, w]() {
          for (int chain = w; chain <= n_levels; chain += n_workers) {
            if (chain == 0) {
              advance_cold(steps);
            } else {
              advance_level(chain - 1, steps);
            }
          }
        });
      }
      for (std::thread& t : pool) t.join();
    }

    trace.counters.cold_attempts += steps;
    trace.counters.cold_accepts += cold_acc_segment[0];
    for (int i = 0; i < n_levels; ++i) {
      trace.counters.level_attempts[i] += steps;
      trace.counters.level_accepts[i] += hot_acc_segment[i];
    }

    const bool exchange_now = (barrier % period == 0);
    if (exchange_now && n_levels > 0) {
      ladder_swap(targets, hot, swap_parity, exchange_rng, trace.counters.ladder_swap_attempts,
                  trace.counters.ladder_swap_accepts, trace.exchange_log, barrier);
      swap_parity = 1 - swap_parity;

      trace.counters.exchange_attempts += 1;
      const ExchangeOutcome outcome =
          exchange_step(model, cold_pot, targets[0], JointState{cold, hot[0]}, cfg.solver,
                        cfg.jacobian_mode, exchange_rng);
      if (outcome.admissible) trace.counters.exchange_admissible += 1;
      trace.exchange_log.push_back(ExchangeEvent{barrier, -1, outcome.accepted});
      if (outcome.accepted) {
        trace.counters.exchange_accepts += 1;
        cold = outcome.state.cold;
        hot[0] = outcome.state.hot;
      }

      // The barrier iteration's recorded samples are the post-exchange states.
      cold_segment.back() = cold;
      for (int i = 0; i < n_levels; ++i) hot_segment[i].back() = hot[i];
    }

    for (long s = 0; s < steps; ++s) {
      trace.cold_samples.push_back(cold_segment[s]);
    }
    if (cfg.hot_record_every > 0) {
      for (int i = 0; i < n_levels; ++i) {
        for (long s = 0; s < steps; ++s) {
          const long k = iter + s + 1;
          if (k % cfg.hot_record_every == 0) trace.hot_samples[i].push_back(hot_segment[i][s]);
        }
      }
    }
    iter = barrier;
  }

  return trace;
}

}  // namespace rexhmc
