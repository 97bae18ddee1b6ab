#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cp3/frame.hpp"

namespace cp3 {

// Scene events. All rectangles are in pixels, all times are 0-based frame
// indices. Ground truth marks moving and camouflage boxes as foreground;
// illumination and periodic regions stay background.

// From `start` on, shifts (or scales) every pixel of the frame.
struct IlluminationStep {
  double value = 30.0;
  int start = 0;
  bool multiplicative = false;  // additive by default: the pair model's sharp case
};

// An opaque square of fixed intensity moving with integer velocity. Without
// wrap it is clipped at the borders and disappears once fully outside.
struct MovingBox {
  int x0 = 0, y0 = 0;
  int size = 8;
  double intensity = 200.0;
  int vx = 1, vy = 0;
  int start = 0;
  bool wrap = false;
};

// A region whose intensity oscillates sinusoidally — regular dynamic
// background such as flickering lighting.
struct PeriodicRegion {
  int x = 0, y = 0, w = 1, h = 1;
  double amplitude = 20.0;
  int period = 10;
};

// An object that preserves all local pairwise differences and only adds a
// uniform offset — invisible to difference tests by construction.
struct CamouflageBox {
  int x = 0, y = 0, w = 1, h = 1;
  double offset = 40.0;
  int start = 0;
  int duration = 1;
};

enum class BackgroundKind { Flat, Gradient, TwoRegion };

struct SceneSpec {
  int width = 64;
  int height = 64;
  int frame_count = 200;
  int channels = 1;
  std::uint64_t seed = 1;
  BackgroundKind background = BackgroundKind::Flat;
  double base_level = 120.0;
  double noise_sigma = 2.0;
  std::vector<IlluminationStep> illumination;
  std::vector<PeriodicRegion> periodic;
  std::vector<CamouflageBox> camouflage;
  std::vector<MovingBox> boxes;

  // Throws listing the offending event ("event #1 (moving box): ...").
  void validate() const;
};

// One frame plus its ground truth: pure function of (spec, t), so frames can
// be generated in any order or in parallel and stay bit-identical. Pixel
// values are noise-corrupted, clamped to [0, 255], and rounded to integers —
// the same value class a decoded 8-bit image has.
std::pair<Frame, GroundTruthFrame> generate_frame(const SceneSpec& spec, int t);

std::vector<std::pair<Frame, GroundTruthFrame>> generate(const SceneSpec& spec, int threads = 1);

// Writes the sequence in the on-disk layout the dataset reader consumes:
// dir/input/in%06d.<ext>, dir/groundtruth/gt%06d.png, dir/temporalROI.txt.
// eval_from (1-based; 0 = frame 1) sets the first evaluated frame index.
void write_scene(const SceneSpec& spec, const std::string& dir, const std::string& ext = "pgm",
                 int eval_from = 0, int threads = 1);

}  // namespace cp3
