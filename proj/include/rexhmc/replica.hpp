#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rexhmc/exchange.hpp"

namespace rexhmc {

struct LadderLevel {
  double epsilon = 0.1;
  KernelConfig kernel;
  Vector initial_state;  // empty = start at the cold initial point
};

struct ReplicaConfig {
  long n_iterations = 1000;
  int exchange_period = 10;
  std::vector<LadderLevel> ladder;  // epsilons strictly increasing
  KernelConfig cold_kernel;
  Vector cold_initial;
  std::uint64_t master_seed = 0;
  JacobianMode jacobian_mode = JacobianMode::exact;
  SolverConfig solver;
  int threads = 1;
  int hot_record_every = 1;  // 0 = do not record hot samples
};

struct ReplicaCounters {
  long cold_attempts = 0;
  long cold_accepts = 0;
  std::vector<long> level_attempts;
  std::vector<long> level_accepts;
  std::vector<long> ladder_swap_attempts;  // pair (i, i+1)
  std::vector<long> ladder_swap_accepts;
  long exchange_attempts = 0;    // manifold <-> coldest relaxed level
  long exchange_admissible = 0;
  long exchange_accepts = 0;
};

struct ExchangeEvent {
  long iteration = 0;
  int pair = -1;  // -1: manifold <-> level 0; k >= 0: ladder pair (k, k+1)
  bool accepted = false;
};

struct ChainTrace {
  std::vector<Vector> cold_samples;               // n_iterations + 1 states
  std::vector<std::vector<Vector>> hot_samples;   // per level, strided
  int hot_record_every = 1;
  ReplicaCounters counters;
  std::vector<ExchangeEvent> exchange_log;
};

class InvalidInitialPointError : public std::invalid_argument {
 public:
  explicit InvalidInitialPointError(const std::string& what) : std::invalid_argument(what) {}
};

/// Parallel-tempering acceptance probability for swapping states between two
/// relaxed targets.
double ladder_swap_accept_prob(const RelaxedTarget& lo, const RelaxedTarget& hi,
                               const Vector& x_lo, const Vector& x_hi);

/// One round of adjacent-pair swaps among the relaxed levels. `parity`
/// selects the even or odd pairing; rounds alternate. Returns per-pair
/// attempt/accept increments through the counter arrays.
void ladder_swap(const std::vector<RelaxedTarget>& targets, std::vector<Vector>& states,
                 int parity, RngStream& rng, std::vector<long>& attempts,
                 std::vector<long>& accepts, std::vector<ExchangeEvent>& log, long iteration);

/// Full replica-exchange driver: per iteration one constrained update and one
/// relaxed update per ladder level; every exchange_period iterations, ladder
/// swaps among the relaxed chains followed by one manifold <-> coldest-level
/// exchange. Bitwise reproducible for a fixed master seed, independent of the
/// thread count.
ChainTrace run_replica(const ConstraintModel& model, const Potential& cold_pot,
                       const ReplicaConfig& cfg);

}  // namespace rexhmc
