#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rexhmc/experiment.hpp"

using namespace rexhmc;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("rexhmc_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kTetraConfig = R"(
# small smoke run
benchmark = tetrahedron
seed = 42
iterations = 400
exchange_period = 10
jacobian_mode = exact
discard_fraction = 0.25
cold_step_size = 0.08
cold_n_steps = 6
ladder.1.epsilon = 0.05
ladder.1.step_size = 0.08
ladder.1.n_steps = 8
ladder.2.epsilon = 0.3
)";

}  // namespace

TEST_CASE("config parsing accepts the documented grammar") {
  const ExperimentConfig cfg = parse_config_text(kTetraConfig);
  CHECK(cfg.benchmark == "tetrahedron");
  CHECK(cfg.seed == 42);
  CHECK(cfg.iterations == 400);
  CHECK(cfg.exchange_period == 10);
  CHECK(cfg.discard_fraction == doctest::Approx(0.25));
  REQUIRE(cfg.ladder.size() == 2);
  CHECK(cfg.ladder[0].epsilon == doctest::Approx(0.05));
  CHECK(cfg.ladder[0].step_size.value() == doctest::Approx(0.08));
  CHECK(cfg.ladder[0].n_steps.value() == 8);
  CHECK(!cfg.ladder[1].step_size.has_value());  // resolved later from defaults
  CHECK(cfg.cold_step_size.value() == doctest::Approx(0.08));
}

TEST_CASE("config parsing fails fast") {
  CHECK_THROWS_AS(parse_config_text("benchmark = tetrahedron\nunknown_key = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("iterations = 100\n"), ConfigError);  // missing benchmark
  CHECK_THROWS_AS(parse_config_text("benchmark = nonsense\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("benchmark = sir\niterations = zero\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("benchmark = sir\ndiscard_fraction = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("benchmark = sir\nladder.2.epsilon = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("benchmark = sir\nladder.1.epsilon = 0.4\nladder.2.epsilon = 0.1\n"),
      ConfigError);
  CHECK_THROWS_AS(parse_config_text("benchmark = sir\nthis line has no equals\n"), ConfigError);
}

TEST_CASE("kernel defaults are resolved per benchmark") {
  ExperimentConfig cfg = parse_config_text("benchmark = ellipses\niterations = 10\n");
  const ModelBundle bundle = bundle_from_config(cfg);
  const ReplicaConfig replica = replica_config_from(cfg, bundle);
  CHECK(replica.ladder.size() == 1);
  CHECK(replica.ladder[0].epsilon == doctest::Approx(0.3));
  CHECK(replica.cold_kernel.step_size > 0.0);
  CHECK(replica.solver.normal_cap == bundle.normal_cap);
}

TEST_CASE("cmd_run writes traces and a summary with the resolved config") {
  ExperimentConfig cfg = parse_config_text(kTetraConfig);
  const fs::path dir = fresh_dir("run");
  cfg.output_dir = dir.string();

  std::ostringstream out, err;
  const int code = cmd_run(cfg, out, err);
  CHECK(code == 0);
  CHECK(err.str().empty());
  REQUIRE(fs::exists(dir / "cold_trace.csv"));
  REQUIRE(fs::exists(dir / "hot_trace_1.csv"));
  REQUIRE(fs::exists(dir / "hot_trace_2.csv"));
  REQUIRE(fs::exists(dir / "summary.json"));

  const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  CHECK(summary["config"]["seed"] == 42);
  CHECK(summary["config"]["benchmark"] == "tetrahedron");
  CHECK(summary["config"]["ladder"].size() == 2);
  CHECK(summary["accept_rates"].contains("cold"));
  CHECK(summary["occupancy"].size() == 2);

  // Header plus one row per recorded state.
  std::istringstream trace(read_file(dir / "cold_trace.csv"));
  std::string line;
  long rows = 0;
  std::getline(trace, line);
  CHECK(line == "iteration,q1,q2,q3,q4,q5,q6,q7,q8,q9,component");
  while (std::getline(trace, line)) rows += 1;
  CHECK(rows == cfg.iterations + 1);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  ExperimentConfig cfg = parse_config_text(kTetraConfig);
  const fs::path dir_a = fresh_dir("repro_a");
  const fs::path dir_b = fresh_dir("repro_b");

  std::ostringstream out, err;
  cfg.output_dir = dir_a.string();
  REQUIRE(cmd_run(cfg, out, err) == 0);
  cfg.output_dir = dir_b.string();
  REQUIRE(cmd_run(cfg, out, err) == 0);

  CHECK(read_file(dir_a / "cold_trace.csv") == read_file(dir_b / "cold_trace.csv"));
  CHECK(read_file(dir_a / "hot_trace_1.csv") == read_file(dir_b / "hot_trace_1.csv"));
  CHECK(read_file(dir_a / "hot_trace_2.csv") == read_file(dir_b / "hot_trace_2.csv"));
}

TEST_CASE("thread count does not change the outputs") {
  ExperimentConfig cfg = parse_config_text(kTetraConfig);
  const fs::path dir_a = fresh_dir("thr_a");
  const fs::path dir_b = fresh_dir("thr_b");

  std::ostringstream out, err;
  cfg.output_dir = dir_a.string();
  cfg.threads = 1;
  REQUIRE(cmd_run(cfg, out, err) == 0);
  cfg.output_dir = dir_b.string();
  cfg.threads = 2;
  REQUIRE(cmd_run(cfg, out, err) == 0);
  CHECK(read_file(dir_a / "cold_trace.csv") == read_file(dir_b / "cold_trace.csv"));
}

TEST_CASE("ellipses without exchanges stay on the starting component") {
  ExperimentConfig cfg =
      parse_config_text("benchmark = ellipses\nseed = 3\niterations = 3000\n"
                        "exchange_period = 1000000\n");
  const fs::path dir = fresh_dir("confined");
  cfg.output_dir = dir.string();
  cfg.emit_traces = false;

  std::ostringstream out, err;
  REQUIRE(cmd_run(cfg, out, err) == 0);
  const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  const auto occupancy = summary["occupancy"];
  CHECK(occupancy[0].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("custom circle benchmark with a linear potential") {
  ExperimentConfig cfg = parse_config_text(
      "benchmark = custom\ncustom.kind = circle\ncustom.potential = linear_q1\n"
      "seed = 8\niterations = 2000\n");
  const ModelBundle bundle = bundle_from_config(cfg);
  CHECK(bundle.potential.value((Vector(2) << 0.7, 0.1).finished()) == doctest::Approx(0.7));
  const fs::path dir = fresh_dir("custom");
  cfg.output_dir = dir.string();
  cfg.emit_traces = false;
  std::ostringstream out, err;
  CHECK(cmd_run(cfg, out, err) == 0);
}

TEST_CASE("tv sweep with a single epsilon has no slope") {
  ExperimentConfig cfg = parse_config_text(
      "benchmark = ellipses\nseed = 4\ntv.epsilons = 0.3\ntv.iterations = 2000\n");
  const TvSweepResult result = run_tv_sweep(cfg);
  CHECK(result.epsilons.size() == 1);
  CHECK(!result.gram_loglog_slope.has_value());
  CHECK(result.tv_gram[0] >= 0.0);
  CHECK(result.tv_gram[0] <= 1.0);
}

TEST_CASE("tv sweep requires the ellipse benchmark") {
  ExperimentConfig cfg = parse_config_text("benchmark = sir\n");
  std::ostringstream out, err;
  CHECK(cmd_tv_sweep(cfg, out, err) == 2);
}

TEST_CASE("cmd_validate reports every check with tolerances") {
  ExperimentConfig cfg = parse_config_text("benchmark = custom\ncustom.kind = circle\nseed = 1\n");
  std::ostringstream out, err;
  const int code = cmd_validate(cfg, out, err);
  CHECK(code == 0);
  const auto report = nlohmann::json::parse(out.str());
  CHECK(report["passed"].get<bool>());
  REQUIRE(report["checks"].size() > 5);
  for (const auto& check : report["checks"]) {
    CHECK(check.contains("name"));
    CHECK(check.contains("tolerance"));
    CHECK(check.contains("measured"));
    CHECK(check.contains("passed"));
  }
}

TEST_CASE("the shipped preset configs parse and validate") {
  const char* dir = std::getenv("REXHMC_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  int found = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    found += 1;
    CAPTURE(entry.path().string());
    const ExperimentConfig cfg = parse_config_file(entry.path().string());
    const ModelBundle bundle = bundle_from_config(cfg);
    const ReplicaConfig replica = replica_config_from(cfg, bundle);
    CHECK(replica.n_iterations >= 1);
    CHECK(!replica.ladder.empty());
  }
  CHECK(found >= 4);
}

TEST_CASE("the installed binary honors the documented exit codes") {
  const char* bin = std::getenv("REXHMC_BIN");
  REQUIRE(bin != nullptr);
  const fs::path dir = fresh_dir("bin");

  const fs::path bad_config = dir / "bad.cfg";
  std::ofstream(bad_config) << "benchmark = tetrahedron\nbogus = 1\n";
  const fs::path bad_out = dir / "bad_out";
  const std::string bad_cmd = std::string(bin) + " run " + bad_config.string() +
                              " --output-dir " + bad_out.string() + " 2>/dev/null";
  const int bad_status = std::system(bad_cmd.c_str());
  CHECK(WEXITSTATUS(bad_status) == 2);
  CHECK(!fs::exists(bad_out));  // no partial outputs on config errors

  const fs::path good_config = dir / "good.cfg";
  std::ofstream(good_config) << "benchmark = custom\ncustom.kind = circle\niterations = 200\n"
                             << "output_dir = " << (dir / "out").string() << "\n";
  const std::string good_cmd =
      std::string(bin) + " run " + good_config.string() + " --seed 7 >/dev/null";
  CHECK(WEXITSTATUS(std::system(good_cmd.c_str())) == 0);
  CHECK(fs::exists(dir / "out" / "summary.json"));

  const std::string validate_cmd =
      std::string(bin) + " validate " + good_config.string() + " >/dev/null";
  CHECK(WEXITSTATUS(std::system(validate_cmd.c_str())) == 0);
}
