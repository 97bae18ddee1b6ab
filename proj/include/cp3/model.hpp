#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <variant>
#include <vector>

#include "cp3/frame.hpp"
#include "cp3/params.hpp"

namespace cp3 {

// One (target, supporting) pixel pair: a Gaussian over the deviation p - q.
template <int C>
struct PairModel {
  using Vec = Eigen::Matrix<double, C, 1>;
  using Mat = Eigen::Matrix<double, C, C>;

  Eigen::Vector2i q{0, 0};  // supporting pixel as (u, v)
  Vec delta = Vec::Zero();  // running mean of p - q
  Mat sigma = Mat::Zero();  // running covariance of p - q
};

// Per-target state: its pair set plus the observed dynamic range.
template <int C>
struct PixelModel {
  using Vec = typename PairModel<C>::Vec;

  std::vector<PairModel<C>> pairs;
  Vec range_lo = Vec::Zero();
  Vec range_hi = Vec::Zero();
};

template <int C>
struct BackgroundModel {
  static constexpr int channels = C;

  int width = 0;
  int height = 0;
  ModelParams params;
  std::vector<PixelModel<C>> pixels;  // row-major

  BackgroundModel() = default;
  BackgroundModel(int w, int h, ModelParams p)
      : width(w), height(h), params(std::move(p)), pixels(static_cast<std::size_t>(w) * h) {}

  PixelModel<C>& pixel(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
  const PixelModel<C>& pixel(int u, int v) const {
    return pixels[static_cast<std::size_t>(v) * width + u];
  }
};

using GrayModel = BackgroundModel<1>;
using ColorModel = BackgroundModel<3>;
using AnyModel = std::variant<GrayModel, ColorModel>;

inline int model_width(const AnyModel& m) {
  return std::visit([](const auto& b) { return b.width; }, m);
}
inline int model_height(const AnyModel& m) {
  return std::visit([](const auto& b) { return b.height; }, m);
}
inline int model_channels(const AnyModel& m) {
  return std::visit([](const auto& b) { return static_cast<int>(b.channels); }, m);
}
inline const ModelParams& model_params(const AnyModel& m) {
  return std::visit([](const auto& b) -> const ModelParams& { return b.params; }, m);
}
inline ModelParams& model_params(AnyModel& m) {
  return std::visit([](auto& b) -> ModelParams& { return b.params; }, m);
}

}  // namespace cp3
