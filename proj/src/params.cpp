#include "cp3/params.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>

namespace cp3 {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw InvalidInputError("parameter " + key + ": not an integer: '" + value + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw InvalidInputError("parameter " + key + ": not an unsigned integer: '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw InvalidInputError("parameter " + key + ": not a number: '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw InvalidInputError("parameter " + key + ": not a boolean: '" + value + "'");
}

}  // namespace

std::map<std::string, std::string> params_to_map(const ModelParams& p) {
  std::map<std::string, std::string> m;
  m["k_supports"] = std::to_string(p.k_supports);
  m["pf_threshold"] = fmt_double(p.pf_threshold);
  m["gauss_c"] = fmt_double(p.gauss_c);
  m["alpha"] = fmt_double(p.alpha);
  m["candidate_multiplier"] = std::to_string(p.candidate_multiplier);
  m["gamma_scale"] = fmt_double(p.gamma_scale);
  m["gamma_floor"] = fmt_double(p.gamma_floor);
  m["range_margin_lo"] = fmt_double(p.range_margin_lo);
  m["range_margin_hi"] = fmt_double(p.range_margin_hi);
  m["range_check_enabled"] = p.range_check_enabled ? "true" : "false";
  m["cov_epsilon"] = fmt_double(p.cov_epsilon);
  m["seed"] = std::to_string(p.seed);
  m["training_frames"] = std::to_string(p.training_frames);
  return m;
}

void apply_param(ModelParams& p, const std::string& key, const std::string& value) {
  if (key == "k_supports")
    p.k_supports = static_cast<int>(parse_int(key, value));
  else if (key == "pf_threshold")
    p.pf_threshold = parse_double(key, value);
  else if (key == "gauss_c")
    p.gauss_c = parse_double(key, value);
  else if (key == "alpha")
    p.alpha = parse_double(key, value);
  else if (key == "candidate_multiplier")
    p.candidate_multiplier = static_cast<int>(parse_int(key, value));
  else if (key == "gamma_scale")
    p.gamma_scale = parse_double(key, value);
  else if (key == "gamma_floor")
    p.gamma_floor = parse_double(key, value);
  else if (key == "range_margin_lo")
    p.range_margin_lo = parse_double(key, value);
  else if (key == "range_margin_hi")
    p.range_margin_hi = parse_double(key, value);
  else if (key == "range_check_enabled")
    p.range_check_enabled = parse_bool(key, value);
  else if (key == "cov_epsilon")
    p.cov_epsilon = parse_double(key, value);
  else if (key == "seed")
    p.seed = parse_u64(key, value);
  else if (key == "training_frames")
    p.training_frames = static_cast<int>(parse_int(key, value));
  else
    throw InvalidInputError("unknown parameter '" + key + "'");
}

}  // namespace cp3
