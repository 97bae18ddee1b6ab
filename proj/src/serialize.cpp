#include "cp3/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cp3/version.hpp"

namespace cp3 {

namespace {

constexpr char kMagic[4] = {'C', 'P', '3', 'M'};

// Explicit little-endian writers/readers: the format must not depend on host
// byte order.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    const std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                            (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8) |
                            (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) |
                            (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    return lo | (hi << 32);
  }

  double f64() { return std::bit_cast<double>(u64()); }

  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n)
      throw IncompatibleModelError("model data truncated at byte " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_params(std::vector<std::uint8_t>& out, const ModelParams& p) {
  put_u32(out, static_cast<std::uint32_t>(p.k_supports));
  put_f64(out, p.pf_threshold);
  put_f64(out, p.gauss_c);
  put_f64(out, p.alpha);
  put_u32(out, static_cast<std::uint32_t>(p.candidate_multiplier));
  put_f64(out, p.gamma_scale);
  put_f64(out, p.gamma_floor);
  put_f64(out, p.range_margin_lo);
  put_f64(out, p.range_margin_hi);
  out.push_back(p.range_check_enabled ? 1 : 0);
  put_f64(out, p.cov_epsilon);
  put_u64(out, p.seed);
  put_u32(out, static_cast<std::uint32_t>(p.training_frames));
}

ModelParams get_params(Reader& r) {
  ModelParams p;
  p.k_supports = static_cast<int>(r.u32());
  p.pf_threshold = r.f64();
  p.gauss_c = r.f64();
  p.alpha = r.f64();
  p.candidate_multiplier = static_cast<int>(r.u32());
  p.gamma_scale = r.f64();
  p.gamma_floor = r.f64();
  p.range_margin_lo = r.f64();
  p.range_margin_hi = r.f64();
  std::uint8_t flag = 0;
  r.raw(&flag, 1);
  if (flag > 1) throw IncompatibleModelError("model data: bad boolean flag");
  p.range_check_enabled = (flag == 1);
  p.cov_epsilon = r.f64();
  p.seed = r.u64();
  p.training_frames = static_cast<int>(r.u32());
  return p;
}

template <int C>
void put_body(std::vector<std::uint8_t>& out, const BackgroundModel<C>& m) {
  for (const PixelModel<C>& pm : m.pixels) {
    for (const PairModel<C>& pair : pm.pairs) {
      put_u32(out, static_cast<std::uint32_t>(pair.q.x()));
      put_u32(out, static_cast<std::uint32_t>(pair.q.y()));
      for (int c = 0; c < C; ++c) put_f64(out, pair.delta[c]);
      for (int i = 0; i < C; ++i)
        for (int j = i; j < C; ++j) put_f64(out, pair.sigma(i, j));
    }
    for (int c = 0; c < C; ++c) put_f64(out, pm.range_lo[c]);
    for (int c = 0; c < C; ++c) put_f64(out, pm.range_hi[c]);
  }
}

template <int C>
BackgroundModel<C> get_body(Reader& r, int width, int height, const ModelParams& params) {
  BackgroundModel<C> m(width, height, params);
  const std::size_t k = static_cast<std::size_t>(params.k_supports);
  for (PixelModel<C>& pm : m.pixels) {
    pm.pairs.resize(k);
    for (PairModel<C>& pair : pm.pairs) {
      const std::uint32_t qu = r.u32();
      const std::uint32_t qv = r.u32();
      if (qu >= static_cast<std::uint32_t>(width) || qv >= static_cast<std::uint32_t>(height))
        throw IncompatibleModelError("model data: support coordinate out of bounds");
      pair.q = Eigen::Vector2i(static_cast<int>(qu), static_cast<int>(qv));
      for (int c = 0; c < C; ++c) pair.delta[c] = r.f64();
      for (int i = 0; i < C; ++i)
        for (int j = i; j < C; ++j) {
          const double v = r.f64();
          pair.sigma(i, j) = v;
          pair.sigma(j, i) = v;
        }
    }
    for (int c = 0; c < C; ++c) pm.range_lo[c] = r.f64();
    for (int c = 0; c < C; ++c) pm.range_hi[c] = r.f64();
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> save_model(const AnyModel& model) {
  std::vector<std::uint8_t> out;
  const int width = model_width(model);
  const int height = model_height(model);
  const int channels = model_channels(model);
  const ModelParams& params = model_params(model);
  // Rough size: per pair 8 + 8C + 4C(C+1) bytes, plus ranges.
  out.reserve(64 + static_cast<std::size_t>(width) * height *
                       (static_cast<std::size_t>(params.k_supports) *
                            (8 + 8 * channels + 4 * channels * (channels + 1)) +
                        16 * channels));
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(kModelFormatVersion));
  put_u32(out, static_cast<std::uint32_t>(width));
  put_u32(out, static_cast<std::uint32_t>(height));
  put_u32(out, static_cast<std::uint32_t>(channels));
  put_params(out, params);
  std::visit([&out](const auto& m) { put_body(out, m); }, model);
  return out;
}

AnyModel load_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IncompatibleModelError("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != static_cast<std::uint32_t>(kModelFormatVersion))
    throw IncompatibleModelError("unsupported model format version " + std::to_string(version));
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint32_t channels = r.u32();
  if (width == 0 || height == 0 || width > (1u << 20) || height > (1u << 20))
    throw IncompatibleModelError("model data: implausible dimensions");
  ModelParams params;
  try {
    params = get_params(r);
    params.validate();
  } catch (const InvalidInputError& e) {
    throw IncompatibleModelError(std::string("model data: ") + e.what());
  }
  AnyModel model = [&]() -> AnyModel {
    switch (channels) {
      case 1:
        return get_body<1>(r, static_cast<int>(width), static_cast<int>(height), params);
      case 3:
        return get_body<3>(r, static_cast<int>(width), static_cast<int>(height), params);
      default:
        throw IncompatibleModelError("model data: channel count must be 1 or 3, got " +
                                     std::to_string(channels));
    }
  }();
  if (!r.exhausted()) throw IncompatibleModelError("model data: trailing bytes");
  return model;
}

void save_model_file(const AnyModel& model, const std::string& path) {
  const std::vector<std::uint8_t> bytes = save_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot create file");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path + ": write failure");
}

AnyModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path + ": read failure");
  return load_model(bytes);
}

}  // namespace cp3
