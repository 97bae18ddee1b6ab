#include "cp3/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cp3/dataset.hpp"
#include "cp3/image_io.hpp"
#include "cp3/parallel.hpp"
#include "cp3/rng.hpp"

namespace cp3 {

namespace {

// Domain-separates synth streams from the trainer's per-pixel streams, which
// may share the same root seed.
constexpr std::uint64_t kFrameDomain = 0x53594e5448ULL;  // "SYNTH"

struct BoxPlacement {
  int x = 0, y = 0;
  bool active = false;
};

BoxPlacement place_box(const MovingBox& b, int t, int width, int height) {
  BoxPlacement p;
  if (t < b.start) return p;
  const int dt = t - b.start;
  long long x = b.x0 + static_cast<long long>(b.vx) * dt;
  long long y = b.y0 + static_cast<long long>(b.vy) * dt;
  if (b.wrap) {
    const auto wrap_into = [](long long v, int extent) {
      v %= extent;
      return static_cast<int>(v < 0 ? v + extent : v);
    };
    p.x = wrap_into(x, width);
    p.y = wrap_into(y, height);
    p.active = true;
    return p;
  }
  // Clipped at the borders; gone once fully outside.
  if (x + b.size <= 0 || x >= width || y + b.size <= 0 || y >= height) return p;
  p.x = static_cast<int>(x);
  p.y = static_cast<int>(y);
  p.active = true;
  return p;
}

bool box_covers(const BoxPlacement& p, const MovingBox& b, int u, int v, int width, int height,
                bool wrap) {
  if (!p.active) return false;
  if (wrap) {
    const int du = (u - p.x + width) % width;
    const int dv = (v - p.y + height) % height;
    return du < b.size && dv < b.size;
  }
  return u >= p.x && u < p.x + b.size && v >= p.y && v < p.y + b.size;
}

bool rect_covers(int x, int y, int w, int h, int u, int v) {
  return u >= x && u < x + w && v >= y && v < y + h;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw InvalidInputError(what);
}

}  // namespace

void SceneSpec::validate() const {
  check(width >= 1 && height >= 1, "scene: dimensions must be positive");
  check(frame_count >= 1, "scene: frame_count must be >= 1");
  check(channels == 1 || channels == 3, "scene: channels must be 1 or 3");
  check(std::isfinite(base_level), "scene: base_level must be finite");
  check(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "scene: noise sigma must be >= 0");

  const auto event_err = [](std::size_t i, const char* kind, const std::string& what) {
    return "scene: event #" + std::to_string(i + 1) + " (" + kind + "): " + what;
  };
  for (std::size_t i = 0; i < illumination.size(); ++i) {
    const IlluminationStep& e = illumination[i];
    check(std::isfinite(e.value), event_err(i, "illumination step", "value must be finite"));
    check(!e.multiplicative || e.value > 0.0,
          event_err(i, "illumination step", "multiplicative factor must be > 0"));
    check(e.start >= 0 && e.start < frame_count,
          event_err(i, "illumination step",
                    "start frame " + std::to_string(e.start) + " outside [0, " +
                        std::to_string(frame_count) + ")"));
  }
  for (std::size_t i = 0; i < periodic.size(); ++i) {
    const PeriodicRegion& e = periodic[i];
    check(e.period >= 1, event_err(i, "periodic region", "period must be >= 1"));
    check(std::isfinite(e.amplitude), event_err(i, "periodic region", "amplitude must be finite"));
    check(e.w >= 1 && e.h >= 1 && e.x >= 0 && e.y >= 0 && e.x + e.w <= width &&
              e.y + e.h <= height,
          event_err(i, "periodic region", "rectangle outside the frame"));
  }
  for (std::size_t i = 0; i < camouflage.size(); ++i) {
    const CamouflageBox& e = camouflage[i];
    check(std::isfinite(e.offset), event_err(i, "camouflage box", "offset must be finite"));
    check(e.duration >= 1, event_err(i, "camouflage box", "duration must be >= 1"));
    check(e.start >= 0 && e.start < frame_count,
          event_err(i, "camouflage box",
                    "start frame " + std::to_string(e.start) + " outside [0, " +
                        std::to_string(frame_count) + ")"));
    check(e.w >= 1 && e.h >= 1 && e.x >= 0 && e.y >= 0 && e.x + e.w <= width &&
              e.y + e.h <= height,
          event_err(i, "camouflage box", "rectangle outside the frame"));
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const MovingBox& e = boxes[i];
    check(e.size >= 1, event_err(i, "moving box", "size must be >= 1"));
    check(std::isfinite(e.intensity), event_err(i, "moving box", "intensity must be finite"));
    check(e.start >= 0 && e.start < frame_count,
          event_err(i, "moving box",
                    "start frame " + std::to_string(e.start) + " outside [0, " +
                        std::to_string(frame_count) + ")"));
    check(e.x0 >= 0 && e.y0 >= 0 && e.x0 + e.size <= width && e.y0 + e.size <= height,
          event_err(i, "moving box", "initial position outside the frame"));
  }
}

std::pair<Frame, GroundTruthFrame> generate_frame(const SceneSpec& spec, int t) {
  spec.validate();
  require(t >= 0 && t < spec.frame_count,
          "generate_frame: frame index " + std::to_string(t) + " outside [0, " +
              std::to_string(spec.frame_count) + ")");

  Frame frame(spec.width, spec.height, spec.channels);
  GroundTruthFrame gt(spec.width, spec.height);

  std::vector<BoxPlacement> placements(spec.boxes.size());
  for (std::size_t i = 0; i < spec.boxes.size(); ++i)
    placements[i] = place_box(spec.boxes[i], t, spec.width, spec.height);

  // Small per-channel offsets keep 3-channel scenes from being trivially gray.
  const double channel_offset[3] = {-10.0, 0.0, 10.0};
  Rng rng(derive_seed(spec.seed ^ kFrameDomain, static_cast<std::uint64_t>(t)));

  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      double base = spec.base_level;
      switch (spec.background) {
        case BackgroundKind::Flat:
          break;
        case BackgroundKind::Gradient:
          // Horizontal ramp spanning base_level +/- 40.
          base += spec.width > 1 ? -40.0 + 80.0 * u / (spec.width - 1) : 0.0;
          break;
        case BackgroundKind::TwoRegion:
          // Two brightness plateaus sharing one temporal signal: pixels from
          // different halves co-vary perfectly, differing only by a constant.
          base += (u < spec.width / 2 ? -30.0 : 30.0) + static_cast<double>(t % 16) - 8.0;
          break;
      }
      for (const PeriodicRegion& e : spec.periodic)
        if (rect_covers(e.x, e.y, e.w, e.h, u, v))
          base += e.amplitude *
                  std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / e.period);
      for (const IlluminationStep& e : spec.illumination)
        if (t >= e.start) base = e.multiplicative ? base * e.value : base + e.value;

      bool fg = false;
      for (const CamouflageBox& e : spec.camouflage)
        if (t >= e.start && t < e.start + e.duration && rect_covers(e.x, e.y, e.w, e.h, u, v)) {
          base += e.offset;
          fg = true;
        }
      bool boxed = false;
      double box_value = 0.0;
      for (std::size_t i = 0; i < spec.boxes.size(); ++i)
        if (box_covers(placements[i], spec.boxes[i], u, v, spec.width, spec.height,
                       spec.boxes[i].wrap)) {
          boxed = true;
          box_value = spec.boxes[i].intensity;  // later boxes paint over earlier ones
          fg = true;
        }

      gt.at(u, v) = fg ? GtLabel::ForegroundGt : GtLabel::BackgroundGt;
      double* px = frame.pixel(u, v);
      for (int c = 0; c < spec.channels; ++c) {
        double x = boxed ? box_value : base + (spec.channels == 3 ? channel_offset[c] : 0.0);
        if (spec.noise_sigma > 0.0) x += spec.noise_sigma * rng.next_gaussian();
        x = std::clamp(x, 0.0, 255.0);
        px[c] = static_cast<double>(std::lround(x));
      }
    }
  }
  return {std::move(frame), std::move(gt)};
}

std::vector<std::pair<Frame, GroundTruthFrame>> generate(const SceneSpec& spec, int threads) {
  spec.validate();
  std::vector<std::pair<Frame, GroundTruthFrame>> out(
      static_cast<std::size_t>(spec.frame_count));
  parallel_for(spec.frame_count, threads, [&](std::int64_t t0, std::int64_t t1) {
    for (std::int64_t t = t0; t < t1; ++t)
      out[static_cast<std::size_t>(t)] = generate_frame(spec, static_cast<int>(t));
  });
  return out;
}

void write_scene(const SceneSpec& spec, const std::string& dir, const std::string& ext,
                 int eval_from, int threads) {
  spec.validate();
  require(ext == "pgm" || ext == "ppm" || ext == "png",
          "write_scene: extension must be pgm, ppm, or png");
  require(!(ext == "pgm" && spec.channels != 1), "write_scene: .pgm needs 1-channel scenes");
  require(!(ext == "ppm" && spec.channels != 3), "write_scene: .ppm needs 3-channel scenes");
  require(eval_from <= spec.frame_count,
          "write_scene: eval_from past the end of the sequence");

  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "input", ec);
  fs::create_directories(root / "groundtruth", ec);
  if (ec) throw IoError(dir + ": cannot create scene directories");

  const std::string frame_pattern = "in%06d." + ext;
  parallel_for(spec.frame_count, threads, [&](std::int64_t t0, std::int64_t t1) {
    for (std::int64_t t = t0; t < t1; ++t) {
      const auto [frame, gt] = generate_frame(spec, static_cast<int>(t));
      const int index = static_cast<int>(t) + 1;  // frame files are 1-based
      write_frame(frame, (root / "input" / format_pattern(frame_pattern, index)).string());
      write_frame(encode_groundtruth(gt),
                  (root / "groundtruth" / format_pattern("gt%06d.png", index)).string());
    }
  });

  std::ofstream roi((root / "temporalROI.txt").string(), std::ios::trunc);
  if (!roi) throw IoError(dir + ": cannot write temporalROI.txt");
  roi << std::max(1, eval_from) << ' ' << spec.frame_count << '\n';
  if (!roi.flush()) throw IoError(dir + ": cannot write temporalROI.txt");
}

}  // namespace cp3
