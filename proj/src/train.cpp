#include "cp3/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cp3 {

PixelStats compute_pixel_stats(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2)
    throw InsufficientDataError("compute_pixel_stats: need at least 2 samples, got " +
                                std::to_string(n));
  PixelStats s;
  double sum = 0.0;
  for (double x : series) sum += x;
  s.mean = sum / static_cast<double>(n);
  double acc = 0.0;
  for (double x : series) {
    const double d = x - s.mean;
    acc += d * d;
  }
  s.variance = acc / static_cast<double>(n - 1);

  std::vector<double> diffs(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) diffs[t] = std::abs(series[t + 1] - series[t]);
  std::sort(diffs.begin(), diffs.end());
  const std::size_t m = diffs.size();
  const double median =
      (m % 2 == 1) ? diffs[m / 2] : 0.5 * (diffs[m / 2 - 1] + diffs[m / 2]);
  // 1.4826 rescales a median absolute value to a Gaussian sigma; the sqrt(2)
  // removes the doubling a difference of two iid samples introduces.
  const double sigma = 1.4826 * median / std::sqrt(2.0);
  s.noise_var = sigma * sigma;
  return s;
}

LumaTensor build_luma_tensor(std::span<const Frame> frames, int threads) {
  if (frames.size() < 2)
    throw InsufficientDataError("build_luma_tensor: need at least 2 frames, got " +
                                std::to_string(frames.size()));
  const Frame& f0 = frames[0];
  require(f0.width > 0 && f0.height > 0, "build_luma_tensor: frames must be non-empty");
  require(f0.channels == 1 || f0.channels == 3,
          "build_luma_tensor: channel count must be 1 or 3");
  for (const Frame& f : frames)
    require(f.same_shape(f0), "build_luma_tensor: frame dimensions differ");

  LumaTensor tensor;
  tensor.width = f0.width;
  tensor.height = f0.height;
  tensor.frames = static_cast<int>(frames.size());
  const std::size_t pixels = f0.pixel_count();
  const std::size_t T = frames.size();
  tensor.centered.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(pixels));
  tensor.norm.resize(static_cast<Eigen::Index>(pixels));
  tensor.stats.resize(pixels);

  parallel_for(static_cast<std::int64_t>(pixels), threads,
               [&](std::int64_t begin, std::int64_t end) {
                 for (std::int64_t p = begin; p < end; ++p) {
                   const int u = static_cast<int>(p % tensor.width);
                   const int v = static_cast<int>(p / tensor.width);
                   double* col = tensor.centered.col(p).data();
                   for (std::size_t t = 0; t < T; ++t) col[t] = luma(frames[t], u, v);
                   PixelStats st =
                       compute_pixel_stats(std::span<const double>(col, T));
                   tensor.stats[static_cast<std::size_t>(p)] = st;
                   double norm2 = 0.0;
                   for (std::size_t t = 0; t < T; ++t) {
                     col[t] -= st.mean;
                     norm2 += col[t] * col[t];
                   }
                   tensor.norm[p] = std::sqrt(norm2);
                 }
               });
  return tensor;
}

void correlation_row_into(const LumaTensor& tensor, const Eigen::Vector2i& target, int stride,
                          std::vector<Candidate>& out) {
  require(stride >= 1, "correlation_row: stride must be >= 1");
  require(target.x() >= 0 && target.x() < tensor.width && target.y() >= 0 &&
              target.y() < tensor.height,
          "correlation_row: target outside the frame");
  out.clear();
  const std::size_t tp = tensor.pixel_index(target.x(), target.y());
  const auto tcol = tensor.centered.col(static_cast<Eigen::Index>(tp));
  const double tnorm = tensor.norm[static_cast<Eigen::Index>(tp)];
  for (int v = 0; v < tensor.height; v += stride)
    for (int u = 0; u < tensor.width; u += stride) {
      if (u == target.x() && v == target.y()) continue;
      const std::size_t q = tensor.pixel_index(u, v);
      const double qnorm = tensor.norm[static_cast<Eigen::Index>(q)];
      double gamma = 0.0;
      if (tnorm > 0.0 && qnorm > 0.0) {
        gamma = tcol.dot(tensor.centered.col(static_cast<Eigen::Index>(q))) / (tnorm * qnorm);
        gamma = std::clamp(gamma, -1.0, 1.0);
      }
      out.push_back(Candidate{Eigen::Vector2i(u, v), gamma});
    }
}

std::vector<Candidate> correlation_row(const LumaTensor& tensor, const Eigen::Vector2i& target,
                                       int stride) {
  std::vector<Candidate> out;
  correlation_row_into(tensor, target, stride, out);
  return out;
}

std::vector<Candidate> correlation_row(std::span<const Frame> frames,
                                       const Eigen::Vector2i& target, int stride) {
  return correlation_row(build_luma_tensor(frames), target, stride);
}

double adaptive_threshold(const PixelStats& stats, const ModelParams& params) {
  require(std::isfinite(stats.variance) && std::isfinite(stats.noise_var),
          "adaptive_threshold: non-finite variances");
  const double total = stats.variance + stats.noise_var;
  if (total <= 0.0) return params.gamma_floor;
  return std::max(params.gamma_floor, params.gamma_scale * stats.variance / total);
}

CandidateSet select_candidates(std::vector<Candidate> row, double gamma_check, int n_max,
                               int k_min) {
  require(!row.empty(), "select_candidates: empty candidate row");
  require(n_max >= k_min && k_min >= 1, "select_candidates: need n_max >= k_min >= 1");
  if (row.size() < static_cast<std::size_t>(k_min))
    throw InsufficientCandidatesError("select_candidates: only " + std::to_string(row.size()) +
                                      " distinct candidates for k_supports = " +
                                      std::to_string(k_min));
  std::sort(row.begin(), row.end(), [](const Candidate& a, const Candidate& b) {
    if (a.gamma != b.gamma) return a.gamma > b.gamma;
    if (a.coord.y() != b.coord.y()) return a.coord.y() < b.coord.y();
    return a.coord.x() < b.coord.x();
  });
  std::size_t qualified = 0;
  while (qualified < row.size() && row[qualified].gamma > gamma_check) ++qualified;

  CandidateSet set;
  if (qualified >= static_cast<std::size_t>(k_min)) {
    row.resize(std::min<std::size_t>(static_cast<std::size_t>(n_max), qualified));
  } else {
    // Threshold starved the pixel (flat or noisy region): fall back to the
    // best correlations available so every pixel still gets k supports.
    set.fallback = true;
    row.resize(std::min<std::size_t>(static_cast<std::size_t>(n_max), row.size()));
  }
  set.entries = std::move(row);
  return set;
}

std::vector<Eigen::Vector2i> sample_supporting(const CandidateSet& cands, int k, Rng& rng) {
  const std::vector<Candidate>& entries = cands.entries;
  const std::size_t n = entries.size();
  require(k >= 1, "sample_supporting: k must be >= 1");
  if (n < static_cast<std::size_t>(k))
    throw InsufficientCandidatesError("sample_supporting: " + std::to_string(n) +
                                      " candidates for k = " + std::to_string(k));

  // k-means on coordinates. Entries are pre-sorted by gamma, so "lowest entry
  // index in the cluster" is also "highest gamma in the cluster". Seeding is
  // greedy farthest-first (random first centre, then always the entry farthest
  // from the centres so far, ties -> lowest index): well-separated groups each
  // receive a seed, which plain random seeding cannot guarantee.
  std::vector<Eigen::Vector2d> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(entries[rng.next_below(n)].coord.cast<double>());
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i)
    nearest[i] = (entries[i].coord.cast<double>() - centroids[0]).squaredNorm();
  while (centroids.size() < static_cast<std::size_t>(k)) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (nearest[i] > nearest[far]) far = i;
    centroids.push_back(entries[far].coord.cast<double>());
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(
          nearest[i], (entries[i].coord.cast<double>() - centroids.back()).squaredNorm());
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 25; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector2d c = entries[i].coord.cast<double>();
      int best = 0;
      double best_d = (c - centroids[0]).squaredNorm();
      for (int j = 1; j < k; ++j) {
        const double d = (c - centroids[static_cast<std::size_t>(j)]).squaredNorm();
        if (d < best_d) {  // strict: ties stay with the lowest cluster index
          best_d = d;
          best = j;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Eigen::Vector2d> sums(static_cast<std::size_t>(k), Eigen::Vector2d::Zero());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[static_cast<std::size_t>(assign[i])] += entries[i].coord.cast<double>();
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (int j = 0; j < k; ++j)
      if (counts[static_cast<std::size_t>(j)] > 0)
        centroids[static_cast<std::size_t>(j)] =
            sums[static_cast<std::size_t>(j)] / counts[static_cast<std::size_t>(j)];
    // An empty cluster keeps its centroid; if it stays empty it is backfilled
    // after the pick phase.
  }

  std::vector<bool> used(n, false);
  std::vector<Eigen::Vector2i> picks;
  picks.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i)
      if (assign[i] == j) {
        best = i;
        break;
      }
    if (best < n) {
      used[best] = true;
      picks.push_back(entries[best].coord);
    }
  }
  for (std::size_t i = 0; i < n && picks.size() < static_cast<std::size_t>(k); ++i) {
    if (used[i]) continue;
    used[i] = true;
    picks.push_back(entries[i].coord);
  }
  return picks;
}

int auto_stride(int width, int height) {
  return (static_cast<long long>(width) * height >= 640LL * 480LL) ? 2 : 1;
}

AnyModel train_any(std::span<const Frame> frames, const ModelParams& params, int stride,
                   int threads, const ProgressFn& progress, TrainTimings* timings) {
  require(!frames.empty(), "train: no frames");
  switch (frames[0].channels) {
    case 1:
      return train<1>(frames, params, stride, threads, progress, timings);
    case 3:
      return train<3>(frames, params, stride, threads, progress, timings);
    default:
      throw InvalidInputError("train: channel count must be 1 or 3, got " +
                              std::to_string(frames[0].channels));
  }
}

}  // namespace cp3
