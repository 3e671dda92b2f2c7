#include "rexhmc/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace rexhmc {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double out = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for '" + key + "': " + value);
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long out = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for '" + key + "': " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: bad boolean value for '" + key + "': " + value);
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::map<int, LadderEntryConfig> ladder;

  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    line_no += 1;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config: line " + std::to_string(line_no) + " has an empty key or value");
    }

    if (key.rfind("ladder.", 0) == 0) {
      const std::string rest = key.substr(7);
      const auto dot = rest.find('.');
      if (dot == std::string::npos) throw ConfigError("config: malformed ladder key '" + key + "'");
      const long index = parse_long(key, rest.substr(0, dot));
      if (index < 1 || index > 64) throw ConfigError("config: ladder index out of range in '" + key + "'");
      const std::string field = rest.substr(dot + 1);
      LadderEntryConfig& entry = ladder[static_cast<int>(index)];
      if (field == "epsilon") {
        entry.epsilon = parse_double(key, value);
      } else if (field == "step_size") {
        entry.step_size = parse_double(key, value);
      } else if (field == "n_steps") {
        entry.n_steps = static_cast<int>(parse_long(key, value));
      } else {
        throw ConfigError("config: unknown ladder field '" + key + "'");
      }
      continue;
    }

    if (key == "benchmark") {
      cfg.benchmark = value;
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "iterations") {
      cfg.iterations = parse_long(key, value);
    } else if (key == "exchange_period") {
      cfg.exchange_period = static_cast<int>(parse_long(key, value));
    } else if (key == "jacobian_mode") {
      if (value == "exact") {
        cfg.jacobian_mode = JacobianMode::exact;
      } else if (value == "gram") {
        cfg.jacobian_mode = JacobianMode::gram;
      } else {
        throw ConfigError("config: jacobian_mode must be 'exact' or 'gram'");
      }
    } else if (key == "discard_fraction") {
      cfg.discard_fraction = parse_double(key, value);
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "emit_traces") {
      cfg.emit_traces = parse_bool(key, value);
    } else if (key == "emit_summary") {
      cfg.emit_summary = parse_bool(key, value);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_long(key, value));
    } else if (key == "cold_step_size") {
      cfg.cold_step_size = parse_double(key, value);
    } else if (key == "cold_n_steps") {
      cfg.cold_n_steps = static_cast<int>(parse_long(key, value));
    } else if (key == "tetrahedron.chiral_strength") {
      cfg.tetra_chiral_strength = parse_double(key, value);
    } else if (key == "sir.delta") {
      cfg.sir_delta = parse_double(key, value);
    } else if (key == "custom.kind") {
      cfg.custom_kind = value;
    } else if (key == "custom.a") {
      cfg.custom_a = parse_double(key, value);
    } else if (key == "custom.b") {
      cfg.custom_b = parse_double(key, value);
    } else if (key == "custom.potential") {
      cfg.custom_potential = value;
    } else if (key == "tv.epsilons") {
      cfg.tv_epsilons = parse_double_list(key, value);
    } else if (key == "tv.iterations") {
      cfg.tv_iterations = parse_long(key, value);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  if (cfg.benchmark.empty()) throw ConfigError("config: missing required key 'benchmark'");
  if (cfg.benchmark != "ellipses" && cfg.benchmark != "sir" && cfg.benchmark != "tetrahedron" &&
      cfg.benchmark != "custom") {
    throw ConfigError("config: benchmark must be ellipses, sir, tetrahedron, or custom");
  }
  if (cfg.iterations < 1) throw ConfigError("config: iterations must be >= 1");
  if (cfg.exchange_period < 1) throw ConfigError("config: exchange_period must be >= 1");
  if (!(cfg.discard_fraction >= 0.0 && cfg.discard_fraction < 1.0)) {
    throw ConfigError("config: discard_fraction must be in [0, 1)");
  }
  if (cfg.threads && *cfg.threads < 1) throw ConfigError("config: threads must be >= 1");
  if (cfg.cold_step_size && !(*cfg.cold_step_size > 0.0)) {
    throw ConfigError("config: cold_step_size must be positive");
  }
  if (cfg.cold_n_steps && *cfg.cold_n_steps < 1) {
    throw ConfigError("config: cold_n_steps must be >= 1");
  }
  if (cfg.tv_iterations < 1) throw ConfigError("config: tv.iterations must be >= 1");

  int expected = 1;
  for (const auto& [index, entry] : ladder) {
    if (index != expected) {
      throw ConfigError("config: ladder indices must be contiguous starting at 1");
    }
    if (!(entry.epsilon > 0.0)) {
      throw ConfigError("config: ladder." + std::to_string(index) + ".epsilon must be positive");
    }
    if (entry.step_size && !(*entry.step_size > 0.0)) {
      throw ConfigError("config: ladder step_size must be positive");
    }
    if (entry.n_steps && *entry.n_steps < 1) {
      throw ConfigError("config: ladder n_steps must be >= 1");
    }
    cfg.ladder.push_back(entry);
    expected += 1;
  }
  for (size_t i = 0; i + 1 < cfg.ladder.size(); ++i) {
    if (!(cfg.ladder[i].epsilon < cfg.ladder[i + 1].epsilon)) {
      throw ConfigError("config: ladder epsilons must be strictly increasing");
    }
  }
  for (double eps : cfg.tv_epsilons) {
    if (!(eps > 0.0)) throw ConfigError("config: tv.epsilons must be positive");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace rexhmc
