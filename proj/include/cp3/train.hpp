#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cp3/frame.hpp"
#include "cp3/model.hpp"
#include "cp3/parallel.hpp"
#include "cp3/params.hpp"
#include "cp3/rng.hpp"

namespace cp3 {

// Temporal statistics of one pixel's luma series.
struct PixelStats {
  double mean = 0.0;
  double variance = 0.0;   // unbiased
  double noise_var = 0.0;  // robust estimate from first differences
};

// mean, unbiased variance, and noise_var = (1.4826 * median|x_{t+1} - x_t| / sqrt(2))^2.
// The MAD-of-first-differences form stays immune to slow drifts and moving
// objects that would inflate a plain variance.
PixelStats compute_pixel_stats(std::span<const double> series);

// The retained training tensor: every pixel's luma series, mean-removed, one
// column per pixel (row-major pixel order). Correlations come from column
// dots, so memory stays O(pixels * frames) and the full pixel-pair matrix is
// never materialized.
struct LumaTensor {
  int width = 0;
  int height = 0;
  int frames = 0;
  Eigen::MatrixXd centered;        // frames x pixels
  Eigen::VectorXd norm;            // per-pixel L2 norm of its centered column
  std::vector<PixelStats> stats;   // per-pixel, row-major

  std::size_t pixel_index(int u, int v) const {
    return static_cast<std::size_t>(v) * width + u;
  }
};

LumaTensor build_luma_tensor(std::span<const Frame> frames, int threads = 1);

struct Candidate {
  Eigen::Vector2i coord{0, 0};
  double gamma = 0.0;
};

// Pearson correlation between the target pixel's series and every strided
// pixel's series (target excluded), in row-major coordinate order. A series
// with zero variance on either side yields gamma = 0, never NaN.
std::vector<Candidate> correlation_row(const LumaTensor& tensor, const Eigen::Vector2i& target,
                                       int stride = 1);
std::vector<Candidate> correlation_row(std::span<const Frame> frames,
                                       const Eigen::Vector2i& target, int stride = 1);
// Appends into `out` (cleared first); the reusable-buffer form of the above.
void correlation_row_into(const LumaTensor& tensor, const Eigen::Vector2i& target, int stride,
                          std::vector<Candidate>& out);

// Correlation threshold: max(gamma_floor, gamma_scale * v / (v + n)), where
// the ratio is the ceiling Pearson can reach between two noise-corrupted
// copies of the same signal. Returns gamma_floor when both variances vanish.
double adaptive_threshold(const PixelStats& stats, const ModelParams& params);

struct CandidateSet {
  std::vector<Candidate> entries;  // sorted by (gamma desc, row-major coord asc)
  bool fallback = false;           // set when fewer than k_min passed the threshold
};

// Keeps the top-n_max candidates with gamma strictly above gamma_check. When
// fewer than k_min qualify, takes the global top-n_max instead and flags the
// set as fallback so a pixel never ends up starved in flat regions.
CandidateSet select_candidates(std::vector<Candidate> row, double gamma_check, int n_max,
                               int k_min);

// Spreads k picks spatially: k-means on candidate coordinates (RNG-seeded
// initialization, <=25 Lloyd iterations, ties to the lowest cluster index),
// then the highest-gamma member of each cluster; clusters that end up empty
// backfill with the globally next-best unused candidate.
std::vector<Eigen::Vector2i> sample_supporting(const CandidateSet& cands, int k, Rng& rng);

// Stride default: subsample candidates at 2 from VGA upward, full grid below.
int auto_stride(int width, int height);

using ProgressFn = std::function<void(int rows_done, int rows_total)>;

struct TrainTimings {
  double tensor_s = 0.0;
  double correlation_s = 0.0;  // summed across worker threads
  double init_s = 0.0;         // summed across worker threads
  double total_s = 0.0;        // wall clock
};

// Builds a model from the first params.training_frames frames: per pixel,
// stats -> correlation row -> adaptive threshold -> candidate set -> k
// scattered supports -> pair Gaussians (two-pass mean/covariance over the
// window, epsilon floor on the diagonal) plus the per-channel min/max range.
// Deterministic for a given seed regardless of threads: per-pixel RNG streams
// are derived from (seed, u, v) and the work partition never feeds back into
// values. The progress hook, when set, is invoked under a lock once per
// completed pixel row.
template <int C>
BackgroundModel<C> train(std::span<const Frame> frames, const ModelParams& params,
                         int stride = 0, int threads = 1, const ProgressFn& progress = {},
                         TrainTimings* timings = nullptr);

// Channel-count dispatch over train<1> / train<3>.
AnyModel train_any(std::span<const Frame> frames, const ModelParams& params, int stride = 0,
                   int threads = 1, const ProgressFn& progress = {},
                   TrainTimings* timings = nullptr);

// ---------------------------------------------------------------------------
// Implementation of the training template.

template <int C>
BackgroundModel<C> train(std::span<const Frame> frames, const ModelParams& params, int stride,
                         int threads, const ProgressFn& progress, TrainTimings* timings) {
  using Vec = typename PairModel<C>::Vec;
  using Mat = typename PairModel<C>::Mat;
  using Clock = std::chrono::steady_clock;
  const auto wall_start = Clock::now();
  const auto seconds_since = [](Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  params.validate();
  const std::size_t window_len = static_cast<std::size_t>(params.training_frames);
  if (frames.size() < window_len)
    throw InsufficientDataError("train: training window needs " + std::to_string(window_len) +
                                " frames, got " + std::to_string(frames.size()));
  const std::span<const Frame> window_frames = frames.first(window_len);
  const Frame& f0 = window_frames[0];
  require(f0.width > 0 && f0.height > 0, "train: frames must be non-empty");
  require(f0.channels == C, "train: frame channel count does not match model");
  for (const Frame& f : window_frames) {
    require(f.same_shape(f0), "train: frame dimensions change inside the training window");
    for (double s : f.samples) require(std::isfinite(s), "train: non-finite sample");
  }
  threads = std::max(1, threads);
  if (stride <= 0) stride = auto_stride(f0.width, f0.height);

  const int width = f0.width, height = f0.height;
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const std::size_t T = window_len;

  // Pixel-major copy of the window so per-pair passes below read contiguous
  // memory instead of striding across whole frames.
  std::vector<double> window(pixels * T * C);
  parallel_for(height, threads, [&](std::int64_t v0, std::int64_t v1) {
    for (std::int64_t v = v0; v < v1; ++v)
      for (int u = 0; u < width; ++u) {
        double* dst = window.data() + (static_cast<std::size_t>(v) * width + u) * T * C;
        for (std::size_t t = 0; t < T; ++t) {
          const double* src = window_frames[t].pixel(u, static_cast<int>(v));
          for (int c = 0; c < C; ++c) dst[t * C + c] = src[c];
        }
      }
  });

  const auto tensor_start = Clock::now();
  const LumaTensor tensor = build_luma_tensor(window_frames, threads);
  const double tensor_s = seconds_since(tensor_start);

  BackgroundModel<C> model(width, height, params);
  const int k = params.k_supports;
  const int n_max = params.candidate_budget();

  struct Failure {
    std::int64_t pixel;
    std::string message;
    bool candidates;  // distinguishes which error type to rethrow
  };
  std::mutex failure_mutex;
  std::optional<Failure> failure;
  std::mutex progress_mutex;
  std::atomic<int> rows_done{0};
  std::atomic<long long> correlation_ns{0}, init_ns{0};

  parallel_for(height, threads, [&](std::int64_t v0, std::int64_t v1) {
    std::vector<Candidate> row;
    long long local_corr_ns = 0, local_init_ns = 0;
    for (std::int64_t v = v0; v < v1; ++v) {
      for (int u = 0; u < width; ++u) {
        const std::size_t p = static_cast<std::size_t>(v) * width + u;
        try {
          const auto corr_start = Clock::now();
          correlation_row_into(tensor, Eigen::Vector2i(u, static_cast<int>(v)), stride, row);
          local_corr_ns +=
              std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - corr_start)
                  .count();

          const auto init_start = Clock::now();
          const double gamma_check = adaptive_threshold(tensor.stats[p], params);
          CandidateSet set = select_candidates(std::move(row), gamma_check, n_max, k);
          Rng rng(pixel_seed(params.seed, u, static_cast<int>(v)));
          const std::vector<Eigen::Vector2i> supports = sample_supporting(set, k, rng);
          row = std::move(set.entries);  // recycle the buffer's capacity

          PixelModel<C>& pm = model.pixels[p];
          pm.pairs.resize(static_cast<std::size_t>(k));
          const double* pw = window.data() + p * T * C;
          for (int i = 0; i < k; ++i) {
            PairModel<C>& pair = pm.pairs[static_cast<std::size_t>(i)];
            pair.q = supports[static_cast<std::size_t>(i)];
            const std::size_t qp =
                static_cast<std::size_t>(pair.q.y()) * width + pair.q.x();
            const double* qw = window.data() + qp * T * C;
            Vec sum = Vec::Zero();
            for (std::size_t t = 0; t < T; ++t)
              for (int c = 0; c < C; ++c) sum[c] += pw[t * C + c] - qw[t * C + c];
            pair.delta = sum / static_cast<double>(T);
            Mat acc = Mat::Zero();
            for (std::size_t t = 0; t < T; ++t) {
              Vec r;
              for (int c = 0; c < C; ++c) r[c] = pw[t * C + c] - qw[t * C + c] - pair.delta[c];
              acc += r * r.transpose();
            }
            pair.sigma = acc / static_cast<double>(T - 1);
            pair.sigma.diagonal().array() += params.cov_epsilon;
          }
          Vec lo = Eigen::Map<const Vec>(pw), hi = lo;
          for (std::size_t t = 1; t < T; ++t) {
            const auto x = Eigen::Map<const Vec>(pw + t * C);
            lo = lo.cwiseMin(x);
            hi = hi.cwiseMax(x);
          }
          pm.range_lo = lo;
          pm.range_hi = hi;
          local_init_ns +=
              std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - init_start)
                  .count();
        } catch (const InsufficientCandidatesError& e) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure || p < static_cast<std::size_t>(failure->pixel))
            failure = Failure{static_cast<std::int64_t>(p), e.what(), true};
          correlation_ns += local_corr_ns;
          init_ns += local_init_ns;
          return;  // abandon this chunk; lowest failing pixel still wins below
        } catch (const InsufficientDataError& e) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure || p < static_cast<std::size_t>(failure->pixel))
            failure = Failure{static_cast<std::int64_t>(p), e.what(), false};
          correlation_ns += local_corr_ns;
          init_ns += local_init_ns;
          return;
        }
      }
      const int done = ++rows_done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(done, height);
      }
    }
    correlation_ns += local_corr_ns;
    init_ns += local_init_ns;
  });

  if (failure) {
    const int fu = static_cast<int>(failure->pixel % width);
    const int fv = static_cast<int>(failure->pixel / width);
    const std::string what = "train: pixel (" + std::to_string(fu) + ", " + std::to_string(fv) +
                             "): " + failure->message;
    if (failure->candidates) throw InsufficientCandidatesError(what);
    throw InsufficientDataError(what);
  }

  if (timings) {
    timings->tensor_s = tensor_s;
    timings->correlation_s = static_cast<double>(correlation_ns.load()) * 1e-9;
    timings->init_s = static_cast<double>(init_ns.load()) * 1e-9;
    timings->total_s = seconds_since(wall_start);
  }
  return model;
}

}  // namespace cp3
