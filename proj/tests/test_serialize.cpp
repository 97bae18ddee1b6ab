// Model persistence: bit-exact round trips and rejection of damaged data.

#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cp3/model.hpp"
#include "cp3/params.hpp"
#include "cp3/rng.hpp"
#include "cp3/serialize.hpp"
#include "cp3/train.hpp"

using cp3::AnyModel;
using cp3::BackgroundModel;
using cp3::Frame;
using cp3::ModelParams;

namespace {

// A populated model with irregular values in every serialized field.
template <int C>
AnyModel build_model(int w, int h, std::uint64_t seed) {
  ModelParams params;
  params.k_supports = 3;
  params.training_frames = 7;
  params.alpha = 0.015625;
  params.seed = seed;
  BackgroundModel<C> m(w, h, params);
  cp3::Rng rng(seed);
  for (auto& pm : m.pixels) {
    pm.pairs.resize(3);
    for (auto& pair : pm.pairs) {
      pair.q = Eigen::Vector2i(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(w))),
                               static_cast<int>(rng.next_below(static_cast<std::uint64_t>(h))));
      for (int c = 0; c < C; ++c) pair.delta[c] = 10.0 * rng.next_gaussian();
      typename cp3::PairModel<C>::Mat a;
      for (int i = 0; i < C; ++i)
        for (int j = 0; j < C; ++j) a(i, j) = rng.next_gaussian();
      pair.sigma = a * a.transpose();  // symmetric, like every model this library produces
    }
    for (int c = 0; c < C; ++c) {
      pm.range_lo[c] = 100.0 + rng.next_double();
      pm.range_hi[c] = 140.0 + rng.next_double();
    }
  }
  return AnyModel(std::move(m));
}

}  // namespace

TEST_CASE("save/load round trip is bit-exact for both channel layouts") {
  for (const AnyModel& model : {build_model<1>(5, 4, 11), build_model<3>(4, 3, 12)}) {
    const std::vector<std::uint8_t> bytes = cp3::save_model(model);
    const AnyModel loaded = cp3::load_model(bytes);
    CHECK(cp3::model_width(loaded) == cp3::model_width(model));
    CHECK(cp3::model_channels(loaded) == cp3::model_channels(model));
    CHECK(cp3::params_to_map(cp3::model_params(loaded)) ==
          cp3::params_to_map(cp3::model_params(model)));
    CHECK(cp3::save_model(loaded) == bytes);
  }
}

TEST_CASE("save/load round trip preserves a trained model exactly") {
  ModelParams params;
  params.training_frames = 8;
  params.k_supports = 4;
  cp3::Rng rng(21);
  std::vector<Frame> frames(8, Frame(6, 5, 3));
  for (Frame& f : frames)
    for (double& s : f.samples) s = static_cast<double>(rng.next_below(256));
  const AnyModel model = cp3::train_any(frames, params);
  const std::vector<std::uint8_t> bytes = cp3::save_model(model);
  const AnyModel loaded = cp3::load_model(bytes);
  CHECK(cp3::save_model(loaded) == bytes);

  const auto& orig = std::get<BackgroundModel<3>>(model);
  const auto& back = std::get<BackgroundModel<3>>(loaded);
  const auto& pa = orig.pixel(3, 2);
  const auto& pb = back.pixel(3, 2);
  REQUIRE(pb.pairs.size() == pa.pairs.size());
  for (std::size_t i = 0; i < pa.pairs.size(); ++i) {
    CHECK(pb.pairs[i].q == pa.pairs[i].q);
    CHECK(pb.pairs[i].delta == pa.pairs[i].delta);
    CHECK(pb.pairs[i].sigma == pa.pairs[i].sigma);
  }
  CHECK(pb.range_lo == pa.range_lo);
  CHECK(pb.range_hi == pa.range_hi);
}

TEST_CASE("file round trip and file error reporting") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("cp3_ser_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const AnyModel model = build_model<1>(3, 3, 31);
  const std::string path = (dir / "m.cp3").string();
  cp3::save_model_file(model, path);
  const AnyModel loaded = cp3::load_model_file(path);
  CHECK(cp3::save_model(loaded) == cp3::save_model(model));

  CHECK_THROWS_AS(cp3::load_model_file((dir / "absent.cp3").string()), cp3::IoError);
  CHECK_THROWS_AS(cp3::save_model_file(model, (dir / "no_dir" / "m.cp3").string()),
                  cp3::IoError);
  std::error_code ec;
  fs::remove_all(dir, ec);
}

TEST_CASE("loader rejects damaged data with specific messages") {
  const AnyModel model = build_model<1>(4, 4, 41);
  const std::vector<std::uint8_t> good = cp3::save_model(model);

  // Truncation at various depths.
  for (const std::size_t keep :
       {std::size_t{0}, std::size_t{3}, std::size_t{30}, good.size() - 1}) {
    const std::vector<std::uint8_t> bytes(good.begin(),
                                          good.begin() + static_cast<std::ptrdiff_t>(keep));
    CHECK_THROWS_AS(cp3::load_model(bytes), cp3::IncompatibleModelError);
  }
  // Bad magic.
  {
    std::vector<std::uint8_t> bytes = good;
    bytes[0] = 'X';
    CHECK_THROWS_WITH_AS(cp3::load_model(bytes), "not a model file (bad magic)",
                         cp3::IncompatibleModelError);
  }
  // Unsupported version.
  {
    std::vector<std::uint8_t> bytes = good;
    bytes[4] = 99;
    CHECK_THROWS_WITH_AS(cp3::load_model(bytes), "unsupported model format version 99",
                         cp3::IncompatibleModelError);
  }
  // Trailing garbage.
  {
    std::vector<std::uint8_t> bytes = good;
    bytes.push_back(0);
    CHECK_THROWS_WITH_AS(cp3::load_model(bytes), "model data: trailing bytes",
                         cp3::IncompatibleModelError);
  }
  // Zero width.
  {
    std::vector<std::uint8_t> bytes = good;
    bytes[8] = bytes[9] = bytes[10] = bytes[11] = 0;
    CHECK_THROWS_AS(cp3::load_model(bytes), cp3::IncompatibleModelError);
  }
  // Channel count neither 1 nor 3.
  {
    std::vector<std::uint8_t> bytes = good;
    bytes[16] = 2;
    CHECK_THROWS_AS(cp3::load_model(bytes), cp3::IncompatibleModelError);
  }
  // Parameter block that fails validation: alpha = 2.0. The double sits at
  // byte 40 — 20 header bytes, k_supports, then the pf and gauss_c doubles.
  {
    std::vector<std::uint8_t> bytes = good;
    const auto two = std::bit_cast<std::array<std::uint8_t, 8>>(2.0);
    std::copy(two.begin(), two.end(), bytes.begin() + 40);
    CHECK_THROWS_AS(cp3::load_model(bytes), cp3::IncompatibleModelError);
  }
  // Support coordinate outside the frame: the first pair's q.x sits right
  // after the 85-byte parameter block.
  {
    std::vector<std::uint8_t> bytes = good;
    for (int i = 0; i < 4; ++i) bytes[static_cast<std::size_t>(20 + 85 + i)] = 0xFF;
    CHECK_THROWS_WITH_AS(cp3::load_model(bytes), "model data: support coordinate out of bounds",
                         cp3::IncompatibleModelError);
  }
}
