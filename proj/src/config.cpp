#include "billiards/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "billiards/chain.hpp"
#include "billiards/error.hpp"

namespace billiards {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view s, int line) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    throw ParseError(line, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t to_u64(std::string_view s, int line) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(line, "not a nonnegative integer: '" + std::string(s) + "'");
  }
  return v;
}

int to_int(std::string_view s, int line) {
  const auto v = to_u64(s, line);
  if (v > 2000000000ull) throw ParseError(line, "integer out of range");
  return static_cast<int>(v);
}

std::vector<double> to_list(std::string_view s, int line) {
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(to_double(s.substr(0, comma), line));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

BoundaryLayer to_layer(std::string_view s, int line, const std::string& key) {
  auto betas = to_list(s, line);
  try {
    return derive_rates(std::move(betas));
  } catch (const InvalidInput& e) {
    throw ValidationError(key + " (line " + std::to_string(line) + "): " + e.what());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

BoundaryLayer ExperimentConfig::lower_layer() const {
  if (beta_minus) return *beta_minus;
  if (beta) return *beta;
  return hard_layer();
}

BoundaryLayer ExperimentConfig::upper_layer() const {
  if (beta_plus) return *beta_plus;
  if (beta) return *beta;
  return hard_layer();
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    if (value.empty()) throw ParseError(line_no, "missing value for '" + key + "'");
    if (!seen.insert(key).second) throw ParseError(line_no, "duplicate key '" + key + "'");

    if (key == "beta") {
      cfg.beta = to_layer(value, line_no, key);
    } else if (key == "beta_minus") {
      cfg.beta_minus = to_layer(value, line_no, key);
    } else if (key == "beta_plus") {
      cfg.beta_plus = to_layer(value, line_no, key);
    } else if (key == "mode") {
      if (value == "noiseless") {
        cfg.mode = LawMode::Noiseless;
      } else if (value == "noisy") {
        cfg.mode = LawMode::Noisy;
      } else if (value == "infinite") {
        cfg.mode = LawMode::Infinite;
      } else {
        throw ParseError(line_no, "mode must be noiseless, noisy or infinite");
      }
    } else if (key == "beta_ratio") {
      cfg.beta_ratio = to_double(value, line_no);
    } else if (key == "theta1") {
      cfg.theta1 = to_double(value, line_no);
    } else if (key == "n") {
      cfg.n = to_int(value, line_no);
    } else if (key == "ell0") {
      cfg.ell0 = to_double(value, line_no);
    } else if (key == "x0") {
      cfg.x0 = to_double(value, line_no);
    } else if (key == "events") {
      cfg.events = to_u64(value, line_no);
    } else if (key == "horizon") {
      cfg.horizon = to_double(value, line_no);
    } else if (key == "samples") {
      cfg.samples = to_u64(value, line_no);
    } else if (key == "level") {
      cfg.level = to_int(value, line_no);
    } else if (key == "r_max") {
      cfg.r_max = to_double(value, line_no);
    } else if (key == "points") {
      cfg.points = to_int(value, line_no);
    } else if (key == "eps") {
      cfg.eps = to_double(value, line_no);
    } else if (key == "tol") {
      cfg.tol = to_double(value, line_no);
    } else if (key == "d_threshold") {
      cfg.d_threshold = to_double(value, line_no);
    } else if (key == "seed") {
      cfg.seed = to_u64(value, line_no);
    } else if (key == "replicas") {
      cfg.replicas = to_int(value, line_no);
    } else if (key == "bins") {
      cfg.bins = to_int(value, line_no);
    } else {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
  }

  require(cfg.replicas >= 1, "replicas must be at least 1");
  require(cfg.bins >= 1, "bins must be at least 1");
  if (cfg.theta1) require(*cfg.theta1 >= 0.0, "theta1 must be >= 0");
  if (cfg.beta_ratio) require(*cfg.beta_ratio > 0.0 && *cfg.beta_ratio < 1.0, "beta_ratio must lie in (0, 1)");
  if (cfg.x0) require(*cfg.x0 > 0.0 && *cfg.x0 < 1.0, "x0 must lie in (0, 1)");
  if (cfg.eps) require(*cfg.eps > 0.0, "eps must be positive");
  if (cfg.tol) require(*cfg.tol > 0.0, "tol must be positive");
  if (cfg.d_threshold) require(*cfg.d_threshold > 0.0, "d_threshold must be positive");
  if (cfg.horizon) require(*cfg.horizon > 0.0, "horizon must be positive");
  if (cfg.r_max) require(*cfg.r_max > 0.0, "r_max must be positive");
  if (cfg.points) require(*cfg.points >= 2, "points must be at least 2");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace billiards
