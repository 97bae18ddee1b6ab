// Trainer: temporal stats, correlation rows, candidate selection, scattered
// sampling, and full model initialization.

#include <doctest.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "cp3/detect.hpp"
#include "cp3/serialize.hpp"
#include "cp3/synth.hpp"
#include "cp3/train.hpp"

using cp3::Candidate;
using cp3::CandidateSet;
using cp3::Frame;
using cp3::ModelParams;
using cp3::PixelStats;

namespace {

// Frames for a bank of single-channel pixel series: series[p][t].
std::vector<Frame> frames_from_series(const std::vector<std::vector<double>>& series) {
  const int pixels = static_cast<int>(series.size());
  const int T = static_cast<int>(series[0].size());
  std::vector<Frame> frames(static_cast<std::size_t>(T), Frame(pixels, 1, 1));
  for (int t = 0; t < T; ++t)
    for (int p = 0; p < pixels; ++p)
      frames[static_cast<std::size_t>(t)].at(p, 0) = series[static_cast<std::size_t>(p)][t];
  return frames;
}

std::vector<Frame> noise_frames(int w, int h, int count, double level, double sigma,
                                std::uint64_t seed) {
  cp3::Rng rng(seed);
  std::vector<Frame> frames(static_cast<std::size_t>(count), Frame(w, h, 1));
  for (Frame& f : frames)
    for (double& s : f.samples) s = std::round(level + sigma * rng.next_gaussian());
  return frames;
}

// Straight-line Pearson correlation of two luma series, for cross-checking.
double brute_pearson(const std::vector<Frame>& frames, int ux, int uy, int vx, int vy) {
  const std::size_t T = frames.size();
  double ma = 0, mb = 0;
  for (const Frame& f : frames) {
    ma += cp3::luma(f, ux, uy);
    mb += cp3::luma(f, vx, vy);
  }
  ma /= static_cast<double>(T);
  mb /= static_cast<double>(T);
  double cov = 0, va = 0, vb = 0;
  for (const Frame& f : frames) {
    const double a = cp3::luma(f, ux, uy) - ma;
    const double b = cp3::luma(f, vx, vy) - mb;
    cov += a * b;
    va += a * a;
    vb += b * b;
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("pixel stats: constant, two-point, and arithmetic series") {
  {
    const std::array<double, 4> s{5, 5, 5, 5};
    const PixelStats st = cp3::compute_pixel_stats(s);
    CHECK(st.mean == 5.0);
    CHECK(st.variance == 0.0);
    CHECK(st.noise_var == 0.0);
  }
  {
    const std::array<double, 2> s{0, 10};
    const PixelStats st = cp3::compute_pixel_stats(s);
    CHECK(st.mean == 5.0);
    CHECK(st.variance == doctest::Approx(50.0));
  }
  {
    const std::array<double, 5> s{1, 2, 3, 4, 5};
    const PixelStats st = cp3::compute_pixel_stats(s);
    CHECK(st.mean == 3.0);
    CHECK(st.variance == doctest::Approx(2.5));
    // All first differences are 1, so the robust noise sigma is 1.4826/sqrt(2).
    CHECK(st.noise_var == doctest::Approx(1.4826 * 1.4826 / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("pixel stats: even first-difference count takes the middle mean") {
  const std::array<double, 5> s{0, 1, 3, 6, 10};  // diffs 1,2,3,4 -> median 2.5
  const PixelStats st = cp3::compute_pixel_stats(s);
  const double sigma = 1.4826 * 2.5 / std::sqrt(2.0);
  CHECK(st.noise_var == doctest::Approx(sigma * sigma).epsilon(1e-12));
}

TEST_CASE("pixel stats: fewer than two samples is an error") {
  const std::array<double, 1> s{3};
  CHECK_THROWS_AS(cp3::compute_pixel_stats(s), cp3::InsufficientDataError);
}

TEST_CASE("correlation row: perfect dependence, anti-dependence, and a hand oracle") {
  const std::vector<double> x{1, 2, 3, 4};
  {
    const auto frames = frames_from_series({x, x});
    const auto row = cp3::correlation_row(frames, Eigen::Vector2i(0, 0));
    REQUIRE(row.size() == 1);
    CHECK(row[0].coord == Eigen::Vector2i(1, 0));
    CHECK(row[0].gamma == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    const auto frames = frames_from_series({x, {9, 8, 7, 6}});  // y = -x + 10
    const auto row = cp3::correlation_row(frames, Eigen::Vector2i(0, 0));
    CHECK(row[0].gamma == doctest::Approx(-1.0).epsilon(1e-12));
  }
  {
    const auto frames = frames_from_series({x, {1, 3, 2, 4}});
    const auto row = cp3::correlation_row(frames, Eigen::Vector2i(0, 0));
    CHECK(row[0].gamma == doctest::Approx(0.8).epsilon(1e-12));  // cov 4 over var 5 each
  }
}

TEST_CASE("correlation row: zero-variance series yield zero, not NaN") {
  const auto frames = frames_from_series({{1, 2, 3, 4}, {7, 7, 7, 7}});
  const auto row = cp3::correlation_row(frames, Eigen::Vector2i(0, 0));
  CHECK(row[0].gamma == 0.0);
  // And from the constant side too.
  const auto row2 = cp3::correlation_row(frames, Eigen::Vector2i(1, 0));
  CHECK(row2[0].gamma == 0.0);
}

TEST_CASE("correlation row: strided scan in row-major order, target excluded") {
  const auto frames = noise_frames(5, 5, 10, 100.0, 4.0, 3);
  const auto row = cp3::correlation_row(frames, Eigen::Vector2i(2, 2), 2);
  std::vector<Eigen::Vector2i> expected;
  for (int v = 0; v < 5; v += 2)
    for (int u = 0; u < 5; u += 2)
      if (!(u == 2 && v == 2)) expected.emplace_back(u, v);
  REQUIRE(row.size() == expected.size());
  for (std::size_t i = 0; i < row.size(); ++i) CHECK(row[i].coord == expected[i]);
}

TEST_CASE("correlation row matches a brute-force Pearson oracle") {
  const auto frames = noise_frames(8, 8, 20, 120.0, 6.0, 5);
  const cp3::LumaTensor tensor = cp3::build_luma_tensor(frames);
  for (int vy = 0; vy < 8; ++vy)
    for (int vx = 0; vx < 8; ++vx) {
      const auto row = cp3::correlation_row(tensor, Eigen::Vector2i(vx, vy));
      REQUIRE(row.size() == 63);
      for (const Candidate& c : row) {
        const double oracle = brute_pearson(frames, vx, vy, c.coord.x(), c.coord.y());
        CHECK(std::abs(c.gamma - oracle) <= 1e-10);
      }
    }
}

TEST_CASE("correlation is symmetric between the two pixels of a pair") {
  const auto frames = noise_frames(6, 4, 15, 100.0, 5.0, 7);
  const cp3::LumaTensor tensor = cp3::build_luma_tensor(frames);
  const auto row_a = cp3::correlation_row(tensor, Eigen::Vector2i(1, 1));
  const auto row_b = cp3::correlation_row(tensor, Eigen::Vector2i(4, 2));
  const auto find = [](const std::vector<Candidate>& row, int u, int v) {
    for (const Candidate& c : row)
      if (c.coord.x() == u && c.coord.y() == v) return c.gamma;
    FAIL("coordinate missing from row");
    return 0.0;
  };
  CHECK(find(row_a, 4, 2) == doctest::Approx(find(row_b, 1, 1)).epsilon(1e-14));
}

TEST_CASE("luma tensor uses the BT.601 weighting for color input") {
  std::vector<Frame> frames(3, Frame(2, 1, 3));
  for (int t = 0; t < 3; ++t) {
    Frame& f = frames[static_cast<std::size_t>(t)];
    f.at(0, 0, 0) = 200;
    f.at(0, 0, 1) = 100;
    f.at(0, 0, 2) = 50;  // constant color pixel
    f.at(1, 0, 0) = f.at(1, 0, 1) = f.at(1, 0, 2) = 10.0 * t;
  }
  const cp3::LumaTensor tensor = cp3::build_luma_tensor(frames);
  CHECK(tensor.stats[0].mean == doctest::Approx(0.299 * 200 + 0.587 * 100 + 0.114 * 50));
  CHECK(tensor.stats[1].mean == doctest::Approx(10.0));
}

TEST_CASE("adaptive threshold: attenuation ratio with scale and floor") {
  ModelParams params;
  params.gamma_scale = 1.0;
  params.gamma_floor = 0.0;
  CHECK(cp3::adaptive_threshold({.mean = 0, .variance = 9, .noise_var = 1}, params) ==
        doctest::Approx(0.9));

  params.gamma_scale = 0.75;
  params.gamma_floor = 0.5;
  // Noiseless limit: ratio is 1, the scale alone remains.
  CHECK(cp3::adaptive_threshold({.mean = 0, .variance = 4, .noise_var = 0}, params) ==
        doctest::Approx(0.75));
  // Equal signal and noise: 0.375 loses to the floor.
  CHECK(cp3::adaptive_threshold({.mean = 0, .variance = 1, .noise_var = 1}, params) == 0.5);
  // Fully degenerate series: the floor.
  CHECK(cp3::adaptive_threshold({.mean = 0, .variance = 0, .noise_var = 0}, params) == 0.5);
}

namespace {

std::vector<Candidate> make_row(const std::vector<double>& gammas) {
  std::vector<Candidate> row;
  for (std::size_t i = 0; i < gammas.size(); ++i)
    row.push_back({Eigen::Vector2i(static_cast<int>(i), 0), gammas[i]});
  return row;
}

}  // namespace

TEST_CASE("candidate selection: filter, sort, and cap") {
  const CandidateSet set = cp3::select_candidates(make_row({0.5, 0.95, 0.9}), 0.6, 2, 2);
  CHECK_FALSE(set.fallback);
  REQUIRE(set.entries.size() == 2);
  CHECK(set.entries[0].gamma == 0.95);
  CHECK(set.entries[1].gamma == 0.9);
}

TEST_CASE("candidate selection: threshold is strict") {
  // A gamma exactly at the threshold does not qualify; the fallback keeps it.
  const CandidateSet set = cp3::select_candidates(make_row({0.9, 0.3}), 0.9, 2, 1);
  CHECK(set.fallback);
  CHECK(set.entries.size() == 2);
  CHECK(set.entries[0].gamma == 0.9);
}

TEST_CASE("candidate selection: starved threshold falls back to the global top") {
  std::vector<double> gammas(30, 0.2);
  gammas[5] = 0.95;
  gammas[6] = 0.93;
  gammas[7] = 0.91;
  const CandidateSet set = cp3::select_candidates(make_row(gammas), 0.9, 25, 20);
  CHECK(set.fallback);  // only 3 passed, 20 needed
  CHECK(set.entries.size() == 25);
  CHECK(set.entries[0].gamma == 0.95);
}

TEST_CASE("candidate selection: ties break in row-major coordinate order") {
  std::vector<Candidate> row;
  row.push_back({Eigen::Vector2i(3, 1), 1.0});
  row.push_back({Eigen::Vector2i(0, 2), 1.0});
  row.push_back({Eigen::Vector2i(1, 1), 1.0});
  row.push_back({Eigen::Vector2i(2, 0), 1.0});
  const CandidateSet set = cp3::select_candidates(std::move(row), 0.5, 3, 1);
  REQUIRE(set.entries.size() == 3);
  CHECK(set.entries[0].coord == Eigen::Vector2i(2, 0));
  CHECK(set.entries[1].coord == Eigen::Vector2i(1, 1));
  CHECK(set.entries[2].coord == Eigen::Vector2i(3, 1));
}

TEST_CASE("candidate selection: too few candidates for the pair count") {
  CHECK_THROWS_AS(cp3::select_candidates(make_row({0.9, 0.8}), 0.5, 80, 20),
                  cp3::InsufficientCandidatesError);
}

TEST_CASE("scattered sampling: one pick per well-separated blob") {
  std::vector<Candidate> row;
  const std::array<Eigen::Vector2i, 4> corners{Eigen::Vector2i(0, 0), Eigen::Vector2i(90, 0),
                                               Eigen::Vector2i(0, 90), Eigen::Vector2i(90, 90)};
  cp3::Rng blob_rng(9);
  for (const auto& corner : corners)
    for (int i = 0; i < 5; ++i)
      row.push_back({corner + Eigen::Vector2i(static_cast<int>(blob_rng.next_below(4)),
                                              static_cast<int>(blob_rng.next_below(4))),
                     0.9 - 0.001 * static_cast<double>(row.size())});
  CandidateSet set = cp3::select_candidates(std::move(row), 0.5, 20, 4);

  cp3::Rng rng(cp3::pixel_seed(1, 5, 5));
  const auto picks = cp3::sample_supporting(set, 4, rng);
  REQUIRE(picks.size() == 4);
  int per_corner[4] = {0, 0, 0, 0};
  for (const auto& p : picks) {
    const int idx = (p.x() >= 45 ? 1 : 0) + (p.y() >= 45 ? 2 : 0);
    ++per_corner[idx];
  }
  for (int n : per_corner) CHECK(n == 1);
}

TEST_CASE("scattered sampling: k=1 returns the single best candidate") {
  CandidateSet set = cp3::select_candidates(make_row({0.7, 0.99, 0.8}), 0.5, 3, 1);
  cp3::Rng rng(cp3::pixel_seed(1, 0, 0));
  const auto picks = cp3::sample_supporting(set, 1, rng);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0] == Eigen::Vector2i(1, 0));
}

TEST_CASE("scattered sampling: grid candidates keep the grid pitch apart") {
  std::vector<Candidate> row;
  cp3::Rng gamma_rng(13);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 8; ++i)
      row.push_back({Eigen::Vector2i(4 * i, 4 * j), 0.6 + 0.3 * gamma_rng.next_double()});
  CandidateSet set = cp3::select_candidates(std::move(row), 0.5, 40, 20);

  cp3::Rng rng(cp3::pixel_seed(2, 3, 4));
  const auto picks = cp3::sample_supporting(set, 20, rng);
  REQUIRE(picks.size() == 20);
  for (std::size_t a = 0; a < picks.size(); ++a)
    for (std::size_t b = a + 1; b < picks.size(); ++b) {
      const double dist = (picks[a] - picks[b]).cast<double>().norm();
      CHECK(dist >= 4.0);  // distinct grid points are at least one pitch apart
    }
}

TEST_CASE("scattered sampling: deterministic for a given stream seed") {
  std::vector<Candidate> row;
  cp3::Rng gamma_rng(17);
  for (int i = 0; i < 30; ++i)
    row.push_back({Eigen::Vector2i(i % 6, i / 6), gamma_rng.next_double()});
  const CandidateSet set = cp3::select_candidates(std::move(row), 0.0, 30, 5);

  cp3::Rng rng_a(cp3::pixel_seed(42, 1, 2));
  cp3::Rng rng_b(cp3::pixel_seed(42, 1, 2));
  CHECK(cp3::sample_supporting(set, 5, rng_a) == cp3::sample_supporting(set, 5, rng_b));
}

TEST_CASE("scattered sampling: not enough candidates") {
  const CandidateSet set = cp3::select_candidates(make_row({0.9, 0.8, 0.7}), 0.5, 3, 3);
  cp3::Rng rng(1);
  CHECK_THROWS_AS(cp3::sample_supporting(set, 4, rng), cp3::InsufficientCandidatesError);
}

TEST_CASE("stride default: full grid below VGA, every other pixel from VGA up") {
  CHECK(cp3::auto_stride(320, 240) == 1);
  CHECK(cp3::auto_stride(639, 480) == 1);
  CHECK(cp3::auto_stride(640, 480) == 2);
  CHECK(cp3::auto_stride(1920, 1080) == 2);
}

TEST_CASE("training on a constant video gives exact pair statistics") {
  ModelParams params;
  params.training_frames = 30;
  std::vector<Frame> frames(30, Frame(8, 8, 1));
  for (Frame& f : frames)
    for (int v = 0; v < 8; ++v)
      for (int u = 0; u < 8; ++u) f.at(u, v) = static_cast<double>(u + 8 * v);

  const auto model = cp3::train<1>(frames, params);
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      const auto& pm = model.pixel(u, v);
      const double p_val = u + 8 * v;
      CHECK(pm.range_lo[0] == p_val);
      CHECK(pm.range_hi[0] == p_val);
      REQUIRE(pm.pairs.size() == 20);
      for (const auto& pair : pm.pairs) {
        const double q_val = pair.q.x() + 8 * pair.q.y();
        CHECK(pair.delta[0] == p_val - q_val);              // exact constant difference
        CHECK(pair.sigma(0, 0) == params.cov_epsilon);      // covariance floor only
      }
    }
}

TEST_CASE("training uses only the window; trailing frames are ignored") {
  ModelParams params;
  params.training_frames = 12;
  auto frames = noise_frames(6, 6, 12, 100.0, 3.0, 21);
  const auto model_a = cp3::train<1>(frames, params);

  frames.push_back(Frame(6, 6, 1, 250.0));  // wildly different trailing frame
  const auto model_b = cp3::train<1>(frames, params);
  CHECK(cp3::save_model(cp3::AnyModel(model_a)) == cp3::save_model(cp3::AnyModel(model_b)));
}

TEST_CASE("training validates its window") {
  ModelParams params;  // training_frames = 100
  auto frames = noise_frames(4, 4, 5, 100.0, 2.0, 23);
  CHECK_THROWS_AS(cp3::train<1>(frames, params), cp3::InsufficientDataError);

  params.training_frames = 5;
  frames[3] = Frame(5, 4, 1, 100.0);
  CHECK_THROWS_AS(cp3::train<1>(frames, params), cp3::InvalidInputError);

  frames[3] = Frame(4, 4, 1, 100.0);
  frames[2].at(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cp3::train<1>(frames, params), cp3::InvalidInputError);
}

TEST_CASE("training failure names the first offending pixel") {
  ModelParams params;  // k_supports = 20, far more than a 2x2 frame can offer
  params.training_frames = 4;
  const std::vector<Frame> frames(4, Frame(2, 2, 1, 50.0));
  try {
    cp3::train<1>(frames, params);
    FAIL("expected a candidate shortage");
  } catch (const cp3::InsufficientCandidatesError& e) {
    CHECK(std::string(e.what()).find("pixel (0, 0)") != std::string::npos);
  }
}

TEST_CASE("co-varying two-region scene trains perfectly correlated pairs") {
  cp3::SceneSpec spec;
  spec.width = 16;
  spec.height = 16;
  spec.frame_count = 40;
  spec.noise_sigma = 0.0;
  spec.background = cp3::BackgroundKind::TwoRegion;
  const auto scene = cp3::generate(spec);
  std::vector<Frame> frames;
  for (const auto& [frame, gt] : scene) frames.push_back(frame);

  ModelParams params;
  params.training_frames = 40;
  const auto model = cp3::train<1>(frames, params);

  // Every chosen support co-varies exactly with its target, whichever half it
  // sits in, and clears the adaptive threshold.
  for (const auto& target : {Eigen::Vector2i(2, 3), Eigen::Vector2i(13, 12)}) {
    const auto row = cp3::correlation_row(frames, target);
    const cp3::LumaTensor tensor = cp3::build_luma_tensor(frames);
    const double gamma_check =
        cp3::adaptive_threshold(tensor.stats[tensor.pixel_index(target.x(), target.y())], params);
    const auto& pm = model.pixel(target.x(), target.y());
    for (const auto& pair : pm.pairs) {
      double gamma = -2.0;
      for (const Candidate& c : row)
        if (c.coord == pair.q) gamma = c.gamma;
      CHECK(gamma >= gamma_check);
      CHECK(gamma == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("trained pair statistics match an independent two-pass oracle") {
  ModelParams params;
  params.training_frames = 10;
  params.k_supports = 6;
  const auto frames = noise_frames(8, 8, 10, 110.0, 5.0, 29);
  const auto model = cp3::train<1>(frames, params);

  for (const auto& target : {Eigen::Vector2i(0, 0), Eigen::Vector2i(5, 3),
                             Eigen::Vector2i(7, 7)}) {
    const auto& pm = model.pixel(target.x(), target.y());
    for (const auto& pair : pm.pairs) {
      long double mean = 0.0L;
      for (const Frame& f : frames)
        mean += static_cast<long double>(f.at(target.x(), target.y()) -
                                         f.at(pair.q.x(), pair.q.y()));
      mean /= static_cast<long double>(frames.size());
      long double ssq = 0.0L;
      for (const Frame& f : frames) {
        const long double r =
            static_cast<long double>(f.at(target.x(), target.y()) -
                                     f.at(pair.q.x(), pair.q.y())) -
            mean;
        ssq += r * r;
      }
      const long double var = ssq / static_cast<long double>(frames.size() - 1);
      CHECK(std::abs(pair.delta[0] - static_cast<double>(mean)) <= 1e-9);
      CHECK(std::abs(pair.sigma(0, 0) - (static_cast<double>(var) + params.cov_epsilon)) <=
            1e-9);
    }
  }
}

TEST_CASE("flat noise trains through the fallback and stays quiet on its own frames") {
  ModelParams params;
  params.training_frames = 60;
  const auto frames = noise_frames(32, 32, 60, 120.0, 2.0, 31);
  const auto model = cp3::train<1>(frames, params);

  // Independent noise means no candidate clears the threshold anywhere.
  const cp3::LumaTensor tensor = cp3::build_luma_tensor(frames);
  for (const auto& target : {Eigen::Vector2i(0, 0), Eigen::Vector2i(16, 16),
                             Eigen::Vector2i(31, 31), Eigen::Vector2i(7, 23)}) {
    const double gamma_check =
        cp3::adaptive_threshold(tensor.stats[tensor.pixel_index(target.x(), target.y())], params);
    const auto set = cp3::select_candidates(cp3::correlation_row(tensor, target), gamma_check,
                                            params.candidate_budget(), params.k_supports);
    CHECK(set.fallback);
  }

  // Detection on a training frame: approximately all background.
  int fg = 0;
  for (int v = 0; v < 32; ++v)
    for (int u = 0; u < 32; ++u)
      fg += cp3::classify_pixel(model.pixel(u, v), frames[0], u, v, params) .label ==
            cp3::Label::Foreground;
  CHECK(static_cast<double>(fg) / (32.0 * 32.0) < 0.05);
}

TEST_CASE("training is bit-identical across thread counts and runs") {
  ModelParams params;
  params.training_frames = 20;
  params.seed = 77;
  const auto frames = noise_frames(24, 18, 20, 115.0, 3.0, 37);
  const auto bytes_1 = cp3::save_model(cp3::AnyModel(cp3::train<1>(frames, params, 0, 1)));
  const auto bytes_7 = cp3::save_model(cp3::AnyModel(cp3::train<1>(frames, params, 0, 7)));
  const auto bytes_again = cp3::save_model(cp3::AnyModel(cp3::train<1>(frames, params, 0, 7)));
  CHECK(bytes_1 == bytes_7);
  CHECK(bytes_7 == bytes_again);
}

TEST_CASE("channel dispatch rejects unsupported channel counts") {
  ModelParams params;
  params.training_frames = 2;
  const std::vector<Frame> frames(2, Frame(4, 4, 2, 10.0));
  CHECK_THROWS_AS(cp3::train_any(frames, params), cp3::InvalidInputError);
}
