#include <doctest.h>

#include <cmath>

#include "rexhmc/diagnostics.hpp"
#include "rexhmc/models.hpp"
#include "rexhmc/replica.hpp"
#include "support/oracles.hpp"

using namespace rexhmc;

namespace {

ReplicaConfig circle_config(long n, int period) {
  ReplicaConfig cfg;
  cfg.n_iterations = n;
  cfg.exchange_period = period;
  cfg.cold_kernel = KernelConfig{0.1, 25};
  cfg.ladder = {LadderLevel{0.25, KernelConfig{0.25, 20}, {}}};
  cfg.master_seed = 99;
  cfg.cold_initial = (Vector(2) << 1.0, 0.0).finished();
  return cfg;
}

bool traces_equal(const ChainTrace& a, const ChainTrace& b) {
  if (a.cold_samples.size() != b.cold_samples.size()) return false;
  for (size_t k = 0; k < a.cold_samples.size(); ++k) {
    if ((a.cold_samples[k] - b.cold_samples[k]).lpNorm<Eigen::Infinity>() != 0.0) return false;
  }
  if (a.hot_samples.size() != b.hot_samples.size()) return false;
  for (size_t l = 0; l < a.hot_samples.size(); ++l) {
    if (a.hot_samples[l].size() != b.hot_samples[l].size()) return false;
    for (size_t k = 0; k < a.hot_samples[l].size(); ++k) {
      if ((a.hot_samples[l][k] - b.hot_samples[l][k]).lpNorm<Eigen::Infinity>() != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("ladder swap acceptance identities") {
  const auto circle = make_circle();
  const RelaxedTarget lo{&circle.constraint, circle.potential, 0.1};
  const RelaxedTarget hi{&circle.constraint, circle.potential, 0.4};
  const Vector x1 = (Vector(2) << 1.05, 0.0).finished();
  const Vector x2 = (Vector(2) << 0.0, 1.2).finished();

  SUBCASE("identical states always swap") {
    CHECK(ladder_swap_accept_prob(lo, hi, x1, x1) == doctest::Approx(1.0));
  }

  SUBCASE("acceptance matches the hand-evaluated tempering formula") {
    const double xi1 = circle.constraint.residual(x1).squaredNorm();
    const double xi2 = circle.constraint.residual(x2).squaredNorm();
    const double expected =
        std::min(1.0, std::exp((1.0 / 0.1 - 1.0 / 0.4) * (xi1 - xi2)));
    CHECK(ladder_swap_accept_prob(lo, hi, x1, x2) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("a swap moving the tighter state to the colder level always accepts") {
    // xi(x1) < xi(x2): proposing (x2 cold, x1 hot) -> (x1 cold, x2 hot).
    CHECK(ladder_swap_accept_prob(lo, hi, x2, x1) == doctest::Approx(1.0));
  }
}

TEST_CASE("one-level ladder swap is a no-op") {
  const auto circle = make_circle();
  const std::vector<RelaxedTarget> targets{{&circle.constraint, circle.potential, 0.2}};
  std::vector<Vector> states{(Vector(2) << 1.1, 0.0).finished()};
  const Vector before = states[0];
  std::vector<long> attempts, accepts;
  std::vector<ExchangeEvent> log;
  RngStream rng(1, 0);
  ladder_swap(targets, states, 0, rng, attempts, accepts, log, 0);
  ladder_swap(targets, states, 1, rng, attempts, accepts, log, 1);
  CHECK((states[0] - before).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(log.empty());
}

TEST_CASE("without exchanges the driver reduces to independent kernels") {
  const auto circle = make_circle();
  ReplicaConfig cfg = circle_config(400, 1000000);  // period beyond n: no exchange ever fires
  const ChainTrace trace = run_replica(circle.constraint, circle.potential, cfg);

  // Replay the cold chain with the same stream: must agree bit for bit.
  RngStream rng(cfg.master_seed, 0);
  Vector q = cfg.cold_initial;
  SolverConfig solver = cfg.solver;
  for (long k = 0; k < cfg.n_iterations; ++k) {
    q = chmc_step(circle.constraint, circle.potential, q, cfg.cold_kernel, solver, rng).point;
    CHECK((trace.cold_samples[k + 1] - q).lpNorm<Eigen::Infinity>() == 0.0);
  }
  CHECK(trace.counters.exchange_attempts == 0);
}

TEST_CASE("runs are deterministic and independent of the thread count") {
  const auto suite = build_ellipse_suite();
  ReplicaConfig cfg;
  cfg.n_iterations = 600;
  cfg.exchange_period = 10;
  cfg.cold_kernel = KernelConfig{0.05, 8};
  cfg.ladder = {LadderLevel{0.3, KernelConfig{0.14, 20}, {}}};
  cfg.master_seed = 2024;
  cfg.cold_initial = suite.reference_point;

  const ChainTrace a = run_replica(suite.constraint, suite.potential, cfg);
  const ChainTrace b = run_replica(suite.constraint, suite.potential, cfg);
  CHECK(traces_equal(a, b));

  ReplicaConfig threaded = cfg;
  threaded.threads = 2;
  const ChainTrace c = run_replica(suite.constraint, suite.potential, threaded);
  CHECK(traces_equal(a, c));
}

TEST_CASE("cold chain samples always satisfy the constraint") {
  const auto suite = build_ellipse_suite();
  ReplicaConfig cfg;
  cfg.n_iterations = 2000;
  cfg.exchange_period = 5;
  cfg.cold_kernel = KernelConfig{0.05, 8};
  cfg.ladder = {LadderLevel{0.3, KernelConfig{0.14, 20}, {}}};
  cfg.master_seed = 7;
  cfg.cold_initial = suite.reference_point;
  cfg.hot_record_every = 0;

  const ChainTrace trace = run_replica(suite.constraint, suite.potential, cfg);
  double worst = 0.0;
  for (const Vector& q : trace.cold_samples) {
    worst = std::max(worst, suite.constraint.residual(q).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst <= 10.0 * cfg.solver.constraint_tol);
}

TEST_CASE("exchanges do not bias a symmetric target") {
  const auto circle = make_circle();
  ReplicaConfig cfg = circle_config(60000, 10);
  cfg.hot_record_every = 0;
  const ChainTrace trace = run_replica(circle.constraint, circle.potential, cfg);
  REQUIRE(trace.counters.exchange_accepts > 100);

  std::vector<double> angles;
  angles.reserve(trace.cold_samples.size());
  for (const Vector& q : trace.cold_samples) angles.push_back(std::atan2(q[1], q[0]));
  const double critical = 1.628 / std::sqrt(static_cast<double>(angles.size()));
  CHECK(oracles::ks_uniform_angle(angles) < critical);
}

TEST_CASE("component label changes at a healthy rate on the ellipse suite") {
  const auto suite = build_ellipse_suite();
  ReplicaConfig cfg;
  cfg.n_iterations = 20000;
  cfg.exchange_period = 10;
  cfg.cold_kernel = KernelConfig{0.05, 8};
  cfg.ladder = {LadderLevel{0.3, KernelConfig{0.14, 20}, {}}};
  cfg.master_seed = 12;
  cfg.cold_initial = suite.reference_point;
  cfg.hot_record_every = 0;

  const ChainTrace trace = run_replica(suite.constraint, suite.potential, cfg);
  long flips = 0;
  int prev = suite.component_label(trace.cold_samples.front());
  for (const Vector& q : trace.cold_samples) {
    const int label = suite.component_label(q);
    if (label != prev) {
      flips += 1;
      prev = label;
    }
  }
  // At least one label change per 1000 iterations on average.
  CHECK(flips >= cfg.n_iterations / 1000);
}

TEST_CASE("invalid initial points are rejected up front") {
  const auto circle = make_circle();
  ReplicaConfig cfg = circle_config(10, 5);
  cfg.cold_initial = (Vector(2) << 1.3, 0.0).finished();  // off the manifold
  CHECK_THROWS_AS(run_replica(circle.constraint, circle.potential, cfg),
                  InvalidInitialPointError);

  ReplicaConfig bad_ladder = circle_config(10, 5);
  bad_ladder.ladder.push_back(LadderLevel{0.1, KernelConfig{0.1, 5}, {}});  // not increasing
  CHECK_THROWS_AS(run_replica(circle.constraint, circle.potential, bad_ladder),
                  std::invalid_argument);
}

TEST_CASE("trace bookkeeping is consistent with the configuration") {
  const auto circle = make_circle();
  ReplicaConfig cfg = circle_config(57, 10);
  cfg.hot_record_every = 2;
  const ChainTrace trace = run_replica(circle.constraint, circle.potential, cfg);
  CHECK(trace.cold_samples.size() == 58);
  CHECK(trace.hot_samples.size() == 1);
  // initial sample plus every second iteration
  CHECK(trace.hot_samples[0].size() == 1 + 57 / 2);
  CHECK(trace.counters.cold_attempts == 57);
  CHECK(trace.counters.exchange_attempts == 5);
  for (const ExchangeEvent& event : trace.exchange_log) {
    CHECK(event.iteration % 10 == 0);
    CHECK(event.pair == -1);  // single level: only manifold exchanges
  }
}
