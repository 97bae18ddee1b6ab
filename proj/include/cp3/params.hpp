#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "cp3/errors.hpp"

namespace cp3 {

// Everything that shapes a model. Stored with the model so a detection run
// is reproducible from the model file alone.
struct ModelParams {
  int k_supports = 20;            // supporting pixels per target
  double pf_threshold = 0.35;     // failing-fraction above which the vote is foreground
  double gauss_c = 3.0;           // Mahalanobis gate: pair fails when D^2 > gauss_c^2
  double alpha = 0.01;            // online update learning rate
  int candidate_multiplier = 4;   // retain candidate_multiplier * k_supports candidates
  double gamma_scale = 0.75;      // correlation threshold scale
  double gamma_floor = 0.5;       // correlation threshold floor
  double range_margin_lo = 10.0;  // slack below the observed minimum
  double range_margin_hi = 10.0;  // slack above the observed maximum
  bool range_check_enabled = true;
  double cov_epsilon = 1e-3;      // ridge added to covariances before inversion
  std::uint64_t seed = 1;
  int training_frames = 100;

  void validate() const {
    require(k_supports >= 1, "k_supports must be >= 1");
    require(std::isfinite(pf_threshold) && pf_threshold >= 0.0 && pf_threshold < 1.0,
            "pf_threshold must lie in [0, 1)");
    require(std::isfinite(gauss_c) && gauss_c > 0.0, "gauss_c must be > 0");
    require(std::isfinite(alpha) && alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
    require(candidate_multiplier >= 1, "candidate_multiplier must be >= 1");
    require(std::isfinite(gamma_scale) && gamma_scale > 0.0 && gamma_scale <= 1.0,
            "gamma_scale must lie in (0, 1]");
    require(std::isfinite(gamma_floor) && gamma_floor >= 0.0 && gamma_floor < 1.0,
            "gamma_floor must lie in [0, 1)");
    require(std::isfinite(range_margin_lo) && range_margin_lo >= 0.0,
            "range_margin_lo must be >= 0");
    require(std::isfinite(range_margin_hi) && range_margin_hi >= 0.0,
            "range_margin_hi must be >= 0");
    require(std::isfinite(cov_epsilon) && cov_epsilon > 0.0, "cov_epsilon must be > 0");
    require(training_frames >= 2, "training_frames must be >= 2");
  }

  int candidate_budget() const { return candidate_multiplier * k_supports; }
};

// Key/value view used by the config parser, CLI overrides, and manifests.
// Keys follow the parameter names above.
std::map<std::string, std::string> params_to_map(const ModelParams& p);
void apply_param(ModelParams& p, const std::string& key, const std::string& value);

}  // namespace cp3
