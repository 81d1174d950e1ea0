#include "app/config.hpp"

#include <fstream>

#include "core/errors.hpp"

namespace d3fcnn {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " wants an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ConfigError("config: " + key + " wants a boolean, got '" + value + "'");
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key,
                   const std::string& value) {
  if (key == "root") cfg.root = value;
  else if (key == "naming") cfg.naming = value;
  else if (key == "protocol") cfg.protocol = value;
  else if (key == "pad") cfg.pad = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "n_classes") cfg.n_classes = parse_int(key, value);
  else if (key == "tail") cfg.tail = int(parse_int(key, value));
  else if (key == "swap_head") cfg.swap_head = parse_bool(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
  else if (key == "epochs") cfg.epochs = int(parse_int(key, value));
  else if (key == "seed") cfg.seed = std::uint64_t(parse_int(key, value));
  else if (key == "repetitions") cfg.repetitions = parse_int(key, value);
  else if (key == "warmup") cfg.warmup = parse_int(key, value);
  else if (key == "bench_clips") cfg.bench_clips = parse_int(key, value);
  else if (key == "clip") cfg.clip = value;
  else if (key == "top_k") cfg.top_k = parse_int(key, value);
  else if (key == "out_dir") cfg.out_dir = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        " expected key=value");
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

RunConfig build_config(const std::string& config_path,
                       const std::vector<std::pair<std::string, std::string>>&
                           overrides) {
  RunConfig cfg;
  if (!config_path.empty()) apply_config_file(cfg, config_path);
  for (const auto& [key, value] : overrides) apply_setting(cfg, key, value);
  validate_config(cfg);
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.naming != "ntu" && cfg.naming != "generic")
    throw ConfigError("config: naming must be ntu or generic");
  if (cfg.pad != "reflect" && cfg.pad != "repeat-last")
    throw ConfigError("config: pad must be reflect or repeat-last");
  if (cfg.n_classes < 2) throw ConfigError("config: n_classes must be >= 2");
  if (cfg.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (cfg.tail < 1) throw ConfigError("config: tail must be >= 1");
  if (cfg.top_k < 1) throw ConfigError("config: top_k must be >= 1");
  if (cfg.repetitions < 1) throw ConfigError("config: repetitions must be >= 1");
  if (cfg.warmup < 0) throw ConfigError("config: warmup must be >= 0");
  if (cfg.bench_clips < 1) throw ConfigError("config: bench_clips must be >= 1");
}

}  // namespace d3fcnn
