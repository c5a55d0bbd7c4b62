#include "vblc/config.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "vblc/errors.hpp"

namespace vblc {

namespace {

// Keys a manifest adds on top of the config proper; accepted so that
// `--config run_manifest.txt` reproduces a run.
constexpr std::array<const char*, 9> kMetaKeys = {
    "command", "artifact_version", "started_at", "source", "target",
    "out",     "images",           "labels",     "checkpoint",
};

bool is_meta_key(const std::string& key) {
  for (const char* k : kMetaKeys) {
    if (key == k) return true;
  }
  return false;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ValidationError("config: bad numeric value for " + key + ": '" + value + "'");
  }
  if (used != value.size()) {
    throw ValidationError("config: bad numeric value for " + key + ": '" + value + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ValidationError("config: bad integer value for " + key + ": '" + value + "'");
  }
  if (used != value.size()) {
    throw ValidationError("config: bad integer value for " + key + ": '" + value + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw ValidationError("config: bad seed value for " + key + ": '" + value + "'");
  }
  if (used != value.size()) {
    throw ValidationError("config: bad seed value for " + key + ": '" + value + "'");
  }
  return v;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError("config: " + message);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return {};
  return s.substr(a, b - a + 1);
}

void apply_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "delta") {
    cfg.delta = parse_double(key, value);
    require(cfg.delta > 0.0 && cfg.delta < 1.0, "delta must be in (0, 1), got " + value);
  } else if (key == "alpha") {
    cfg.alpha = parse_double(key, value);
    require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, "alpha must be in [0, 1], got " + value);
  } else if (key == "max_iters") {
    const long long v = parse_int(key, value);
    require(v >= 1, "max_iters must be >= 1, got " + value);
    cfg.max_iters = static_cast<int>(v);
  } else if (key == "batch") {
    const long long v = parse_int(key, value);
    require(v >= 1, "batch must be >= 1, got " + value);
    cfg.batch = static_cast<int>(v);
  } else if (key == "lr") {
    cfg.lr = parse_double(key, value);
    require(cfg.lr > 0.0, "lr must be > 0, got " + value);
  } else if (key == "momentum") {
    cfg.momentum = parse_double(key, value);
    require(cfg.momentum >= 0.0 && cfg.momentum < 1.0,
            "momentum must be in [0, 1), got " + value);
  } else if (key == "seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "ablation") {
    cfg.ablation = parse_ablation(value);
  } else if (key == "gamma") {
    cfg.vbm.gamma = parse_double(key, value);
    require(cfg.vbm.gamma > 0.0, "gamma must be > 0, got " + value);
  } else if (key == "patch_radius") {
    const long long v = parse_int(key, value);
    require(v >= 0, "patch_radius must be >= 0, got " + value);
    cfg.vbm.patch_radius = static_cast<int>(v);
  } else if (key == "light_sample_count") {
    const long long v = parse_int(key, value);
    require(v >= 1, "light_sample_count must be >= 1, got " + value);
    cfg.vbm.light_sample_count = static_cast<int>(v);
  } else if (key == "night_luminance_threshold") {
    cfg.vbm.night_luminance_threshold = parse_double(key, value);
    require(cfg.vbm.night_luminance_threshold >= 0.0 &&
                cfg.vbm.night_luminance_threshold <= 1.0,
            "night_luminance_threshold must be in [0, 1], got " + value);
  } else if (key == "t_floor") {
    cfg.vbm.t_floor = parse_double(key, value);
    require(cfg.vbm.t_floor > 0.0 && cfg.vbm.t_floor < 1.0,
            "t_floor must be in (0, 1), got " + value);
  } else if (key == "norm_epsilon") {
    cfg.loss.norm_epsilon = parse_double(key, value);
    require(cfg.loss.norm_epsilon > 0.0, "norm_epsilon must be > 0, got " + value);
  } else {
    throw ValidationError("config: unknown key '" + key + "'");
  }
}

}  // namespace

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config: line " + std::to_string(lineno) +
                            " is not key=value: '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError("config: empty key on line " + std::to_string(lineno));
    }
    if (is_meta_key(key)) continue;
    apply_key(cfg, key, value);
  }
  return cfg;
}

TrainConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed on " + path.string());
  return parse_config_text(buf.str());
}

std::string serialize_config(const TrainConfig& cfg) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "delta=%.17g\n"
                "alpha=%.17g\n"
                "max_iters=%d\n"
                "batch=%d\n"
                "lr=%.17g\n"
                "momentum=%.17g\n"
                "seed=%llu\n"
                "ablation=%s\n"
                "gamma=%.17g\n"
                "patch_radius=%d\n"
                "light_sample_count=%d\n"
                "night_luminance_threshold=%.17g\n"
                "t_floor=%.17g\n"
                "norm_epsilon=%.17g\n",
                cfg.delta, cfg.alpha, cfg.max_iters, cfg.batch, cfg.lr, cfg.momentum,
                static_cast<unsigned long long>(cfg.seed), ablation_name(cfg.ablation),
                cfg.vbm.gamma, cfg.vbm.patch_radius, cfg.vbm.light_sample_count,
                cfg.vbm.night_luminance_threshold, cfg.vbm.t_floor, cfg.loss.norm_epsilon);
  return buf;
}

void write_run_manifest(const std::filesystem::path& path, const std::string& command,
                        const TrainConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& extras) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "command=" << command << "\n";
  out << "artifact_version=" << kArtifactVersion << "\n";
  out << "started_at=" << stamp << "\n";
  for (const auto& [key, value] : extras) out << key << "=" << value << "\n";
  out << serialize_config(cfg);
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace vblc
