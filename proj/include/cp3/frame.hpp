#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cp3/errors.hpp"

namespace cp3 {

// A decoded image: row-major, channel-interleaved, values in [0, 255].
// Samples are doubles so model math never round-trips through integers.
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> samples;

  Frame() = default;
  Frame(int w, int h, int c, double fill = 0.0)
      : width(w),
        height(h),
        channels(c),
        samples(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(int u, int v, int c = 0) const {
    return (static_cast<std::size_t>(v) * width + u) * channels + c;
  }
  double& at(int u, int v, int c = 0) { return samples[index(u, v, c)]; }
  double at(int u, int v, int c = 0) const { return samples[index(u, v, c)]; }
  const double* pixel(int u, int v) const { return samples.data() + index(u, v); }
  double* pixel(int u, int v) { return samples.data() + index(u, v); }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Frame& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// BT.601 luma; single-channel input passes through unchanged.
inline double luma(const double* px, int channels) {
  return channels == 1 ? px[0] : 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
}
inline double luma(const Frame& f, int u, int v) { return luma(f.pixel(u, v), f.channels); }

enum class Label : std::uint8_t { Background = 0, Foreground = 1 };

// A binary detection result.
struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<Label> labels;

  LabelMask() = default;
  LabelMask(int w, int h, Label fill = Label::Background)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

  Label& at(int u, int v) { return labels[static_cast<std::size_t>(v) * width + u]; }
  Label at(int u, int v) const { return labels[static_cast<std::size_t>(v) * width + u]; }
};

// Reference annotation labels, following the changedetection.net convention of
// five gray levels (0, 50, 85, 170, 255 in the encoded image).
enum class GtLabel : std::uint8_t {
  BackgroundGt = 0,
  ShadowGt = 1,
  OutsideRoi = 2,
  UnknownGt = 3,
  ForegroundGt = 4,
};

struct GroundTruthFrame {
  int width = 0;
  int height = 0;
  std::vector<GtLabel> labels;

  GroundTruthFrame() = default;
  GroundTruthFrame(int w, int h, GtLabel fill = GtLabel::BackgroundGt)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

  GtLabel& at(int u, int v) { return labels[static_cast<std::size_t>(v) * width + u]; }
  GtLabel at(int u, int v) const { return labels[static_cast<std::size_t>(v) * width + u]; }
};

}  // namespace cp3
