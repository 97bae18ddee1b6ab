#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "cp3/frame.hpp"
#include "cp3/model.hpp"
#include "cp3/parallel.hpp"

namespace cp3 {

// Rational form of a squared Mahalanobis distance: value = num / det with
// det > 0. Keeping numerator and denominator separate lets callers test
// num > t * det instead of num / det > t — the same predicate without the
// per-pair division, which is what the throughput budget hinges on.
struct QuadForm {
  double num = 0.0;
  double det = 1.0;
  double value() const { return num / det; }
};

// r^T (sigma + epsilon I)^-1 r for symmetric positive semi-definite sigma.
// Closed forms for 1x1 and 3x3 (the supported channel counts); LDLT fallback
// keeps the function usable for any other size in generic code.
template <typename DR, typename DS>
QuadForm quad_form(const Eigen::MatrixBase<DR>& r, const Eigen::MatrixBase<DS>& sigma,
                   double epsilon) {
  constexpr int N = DR::SizeAtCompileTime;
  if constexpr (N == 1) {
    const double x = r[0];
    return {x * x, sigma(0, 0) + epsilon};
  } else if constexpr (N == 3) {
    // Adjugate of sigma + epsilon I, with the ridge folded into the diagonal
    // terms instead of materialising the shifted matrix.
    const double a = sigma(0, 0) + epsilon;
    const double b = sigma(0, 1);
    const double c = sigma(0, 2);
    const double d = sigma(1, 1) + epsilon;
    const double e = sigma(1, 2);
    const double f = sigma(2, 2) + epsilon;
    const double adj00 = d * f - e * e;
    const double adj01 = c * e - b * f;
    const double adj02 = b * e - c * d;
    const double adj11 = a * f - c * c;
    const double adj12 = b * c - a * e;
    const double adj22 = a * d - b * b;
    const double det = a * adj00 + b * adj01 + c * adj02;
    const double x = r[0];
    const double y = r[1];
    const double z = r[2];
    const double num = adj00 * x * x + adj11 * y * y + adj22 * z * z +
                       2.0 * (adj01 * x * y + adj02 * x * z + adj12 * y * z);
    return {num, det};
  } else {
    Eigen::MatrixXd m = sigma;
    m.diagonal().array() += epsilon;
    const Eigen::VectorXd rv = r;
    return {rv.dot(Eigen::LDLT<Eigen::MatrixXd>(m).solve(rv)), 1.0};
  }
}

// Squared Mahalanobis distance with the ridge applied. Generic entry point;
// the detection loop below uses the rational form directly.
template <typename DR, typename DS>
double mahalanobis2(const Eigen::MatrixBase<DR>& r, const Eigen::MatrixBase<DS>& sigma,
                    double epsilon) {
  return quad_form(r, sigma, epsilon).value();
}

// Squared distance of an observed deviation from a pair's Gaussian.
template <int C>
double pair_distance2(const typename PairModel<C>::Vec& dev, const PairModel<C>& pair,
                      double epsilon) {
  require(dev.allFinite(), "pair_distance2: non-finite deviation");
  return quad_form(dev - pair.delta, pair.sigma, epsilon).value();
}

// True when the pair votes foreground: D^2 strictly above gauss_c^2.
template <int C>
inline bool pair_fails(const PairModel<C>& pair, const typename PairModel<C>::Vec& dev, double c2,
                       double epsilon) {
  const QuadForm q = quad_form((dev - pair.delta).eval(), pair.sigma, epsilon);
  return q.num > c2 * q.det;
}

// True when any channel of p falls outside [lo - margin_lo, hi + margin_hi].
template <int C>
inline bool range_exceeded(const PixelModel<C>& pm, const typename PairModel<C>::Vec& p,
                           const ModelParams& params) {
  return (p.array() < pm.range_lo.array() - params.range_margin_lo).any() ||
         (p.array() > pm.range_hi.array() + params.range_margin_hi).any();
}

struct PixelDecision {
  Label label = Label::Background;
  double failing_fraction = 0.0;
};

// Smallest failing count that makes decide() vote foreground — the exact
// integer boundary of `fails / k > pf_threshold`, found by probing the same
// floating-point predicate. Returns k + 1 when no count can (k == 0).
inline int min_failing_for_foreground(int k, double pf_threshold) {
  int f = std::max(0, std::min(k, static_cast<int>(pf_threshold * k)));
  while (f <= k && !(static_cast<double>(f) / k > pf_threshold)) ++f;
  while (f > 0 && static_cast<double>(f - 1) / k > pf_threshold) --f;
  return f;
}

// Combines the two background tests: a pixel stays background only when both
// the pair vote and the (optional) range test accept it.
inline PixelDecision decide(int fails, int k, double pf_threshold, bool range_fg) {
  PixelDecision d;
  d.failing_fraction = static_cast<double>(fails) / static_cast<double>(k);
  d.label = (d.failing_fraction > pf_threshold || range_fg) ? Label::Foreground
                                                            : Label::Background;
  return d;
}

// Classifies one pixel against the current model state, no updates.
template <int C>
PixelDecision classify_pixel(const PixelModel<C>& pm, const Frame& frame, int u, int v,
                             const ModelParams& params) {
  using Vec = typename PairModel<C>::Vec;
  const Vec p = Eigen::Map<const Vec>(frame.pixel(u, v));
  const double c2 = params.gauss_c * params.gauss_c;
  int fails = 0;
  for (const PairModel<C>& pair : pm.pairs) {
    const Vec q = Eigen::Map<const Vec>(frame.pixel(pair.q.x(), pair.q.y()));
    fails += pair_fails(pair, Vec(p - q), c2, params.cov_epsilon);
  }
  const bool range_fg = params.range_check_enabled && range_exceeded(pm, p, params);
  return decide(fails, static_cast<int>(pm.pairs.size()), params.pf_threshold, range_fg);
}

// Exponential update of a pair's Gaussian. The covariance uses the residual
// against the already-updated mean, and its update is elementwise, so exact
// symmetry is preserved bit-for-bit.
template <int C>
void update_pair(PairModel<C>& pair, const typename PairModel<C>::Vec& dev, double alpha) {
  pair.delta = alpha * dev + (1.0 - alpha) * pair.delta;
  const typename PairModel<C>::Vec r = dev - pair.delta;
  pair.sigma = alpha * (r * r.transpose()) + (1.0 - alpha) * pair.sigma;
}

// Drifts both range endpoints toward the current value, then widens them if
// the value still falls outside — a fresh out-of-range sample is absorbed
// immediately, matching the blind-update policy of the pair models.
template <int C>
void update_range(PixelModel<C>& pm, const typename PairModel<C>::Vec& p, double alpha) {
  pm.range_lo = (alpha * p + (1.0 - alpha) * pm.range_lo).cwiseMin(p);
  pm.range_hi = (alpha * p + (1.0 - alpha) * pm.range_hi).cwiseMax(p);
}

template <int C>
void validate_frame_for(const BackgroundModel<C>& model, const Frame& frame) {
  require(frame.width == model.width && frame.height == model.height,
          "step: frame size does not match model");
  require(frame.channels == C, "step: frame channel count does not match model");
  for (double s : frame.samples) require(std::isfinite(s), "step: non-finite sample");
}

// Classifies every pixel against the pre-frame model state, then applies the
// blind updates. Per-pixel work reads only that pixel's own model (supports
// are read from the frame, not the model), so classify-then-update can be
// fused per pixel; the result is identical to a full classification pass
// followed by a full update pass.
template <int C>
LabelMask step(BackgroundModel<C>& model, const Frame& frame, int threads = 1) {
  using Vec = typename PairModel<C>::Vec;
  validate_frame_for(model, frame);
  LabelMask mask(model.width, model.height);
  const ModelParams& prm = model.params;
  const double c2 = prm.gauss_c * prm.gauss_c;
  const double alpha = prm.alpha;
  const double eps = prm.cov_epsilon;
  parallel_for(static_cast<std::int64_t>(model.pixels.size()), threads,
               [&](std::int64_t begin, std::int64_t end) {
                 int cached_k = -1, fg_at = 0;
                 for (std::int64_t i = begin; i < end; ++i) {
                   PixelModel<C>& pm = model.pixels[static_cast<std::size_t>(i)];
                   const int u = static_cast<int>(i % model.width);
                   const int v = static_cast<int>(i / model.width);
                   const Vec p = Eigen::Map<const Vec>(frame.pixel(u, v));
                   const int k = static_cast<int>(pm.pairs.size());
                   if (k != cached_k) {
                     cached_k = k;
                     fg_at = min_failing_for_foreground(k, prm.pf_threshold);
                   }
                   // The vote only needs to know whether `fails` reaches fg_at,
                   // so the Gaussian test is skipped once the verdict is fixed
                   // either way; the blind update still runs for every pair.
                   int fails = 0, left = k;
                   for (PairModel<C>& pair : pm.pairs) {
                     const Vec q = Eigen::Map<const Vec>(frame.pixel(pair.q.x(), pair.q.y()));
                     const Vec dev = p - q;
                     if (fails < fg_at && fails + left >= fg_at)
                       fails += pair_fails(pair, dev, c2, eps);
                     --left;
                     update_pair(pair, dev, alpha);
                   }
                   const bool range_fg =
                       prm.range_check_enabled && range_exceeded(pm, p, prm);
                   update_range(pm, p, alpha);
                   mask.labels[static_cast<std::size_t>(i)] =
                       (fails >= fg_at || range_fg) ? Label::Foreground : Label::Background;
                 }
               });
  return mask;
}

inline LabelMask step(AnyModel& model, const Frame& frame, int threads = 1) {
  return std::visit([&](auto& m) { return step(m, frame, threads); }, model);
}

}  // namespace cp3
