#include "cp3/image_io.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#ifdef CP3_HAVE_JPEG
#include <jpeglib.h>

#include <csetjmp>
#endif

namespace cp3 {

namespace {

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError(path + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw DecodeError(path + ": read failure");
  return bytes;
}

void write_bytes(const std::string& path, const std::uint8_t* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot create file");
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError(path + ": write failure");
}

std::uint8_t to_byte(double v) {
  const long r = std::lround(v);
  return static_cast<std::uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

// --- PNM (P5 grayscale / P6 RGB, binary, maxval 255) ------------------------

class PnmHeader {
 public:
  PnmHeader(const std::vector<std::uint8_t>& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  // Reads one ASCII integer token, skipping whitespace and '#' comments.
  long next_int() {
    skip_separators();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
      throw DecodeError(path_ + ": malformed PNM header");
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000L) throw DecodeError(path_ + ": PNM header value out of range");
      ++pos_;
    }
    return v;
  }

  // The single whitespace byte separating the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw DecodeError(path_ + ": PNM header not terminated");
    return pos_ + 1;
  }

  void skip_magic() { pos_ = 2; }

 private:
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

Frame read_pnm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  const int channels = (bytes[1] == '5') ? 1 : 3;
  PnmHeader header(bytes, path);
  header.skip_magic();
  const long w = header.next_int();
  const long h = header.next_int();
  const long maxval = header.next_int();
  if (w <= 0 || h <= 0) throw DecodeError(path + ": PNM dimensions must be positive");
  if (maxval != 255)
    throw DecodeError(path + ": unsupported PNM maxval " + std::to_string(maxval) +
                      " (only 8-bit, maxval 255)");
  const std::size_t offset = header.raster_offset();
  const std::size_t expected = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - offset < expected)
    throw DecodeError(path + ": PNM raster truncated");
  Frame f(static_cast<int>(w), static_cast<int>(h), channels);
  for (std::size_t i = 0; i < expected; ++i)
    f.samples[i] = static_cast<double>(bytes[offset + i]);
  return f;
}

void write_pnm(const Frame& frame, const std::string& path) {
  char header[64];
  const int n = std::snprintf(header, sizeof header, "P%c\n%d %d\n255\n",
                              frame.channels == 1 ? '5' : '6', frame.width, frame.height);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n) + frame.samples.size());
  std::memcpy(bytes.data(), header, static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < frame.samples.size(); ++i)
    bytes[static_cast<std::size_t>(n) + i] = to_byte(frame.samples[i]);
  write_bytes(path, bytes.data(), bytes.size());
}

// --- PNG ---------------------------------------------------------------------

Frame read_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw DecodeError(path + ": " + image.message);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;  // also folds alpha / 16-bit down
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw DecodeError(path + ": " + message);
  }
  Frame f(static_cast<int>(image.width), static_cast<int>(image.height), color ? 3 : 1);
  for (std::size_t i = 0; i < pixels.size(); ++i) f.samples[i] = static_cast<double>(pixels[i]);
  return f;
}

void write_png(const Frame& frame, const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width);
  image.height = static_cast<png_uint_32>(frame.height);
  image.format = frame.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(frame.samples.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = to_byte(frame.samples[i]);
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr))
    throw IoError(path + ": " + image.message);
}

// --- JPEG (decode only) --------------------------------------------------------

#ifdef CP3_HAVE_JPEG
struct JpegErrorTrap {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* trap = reinterpret_cast<JpegErrorTrap*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, trap->message);
  std::longjmp(trap->jump, 1);
}

Frame read_jpeg(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorTrap trap;
  Frame f;
  std::vector<std::uint8_t> row;
  cinfo.err = jpeg_std_error(&trap.mgr);
  trap.mgr.error_exit = jpeg_error_exit;
  if (setjmp(trap.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError(path + ": " + trap.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space =
      (cinfo.jpeg_color_space == JCS_GRAYSCALE) ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int channels = cinfo.output_components;
  f = Frame(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height),
            channels);
  row.resize(static_cast<std::size_t>(cinfo.output_width) * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    const std::size_t y = cinfo.output_scanline;
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    double* dst = f.samples.data() + y * row.size();
    for (std::size_t i = 0; i < row.size(); ++i) dst[i] = static_cast<double>(row[i]);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return f;
}
#endif  // CP3_HAVE_JPEG

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Frame read_frame(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return read_pnm(bytes, path);
  static const std::array<std::uint8_t, 8> png_sig = {137, 'P', 'N', 'G', 13, 10, 26, 10};
  if (bytes.size() >= png_sig.size() &&
      std::memcmp(bytes.data(), png_sig.data(), png_sig.size()) == 0)
    return read_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) {
#ifdef CP3_HAVE_JPEG
    return read_jpeg(bytes, path);
#else
    throw DecodeError(path + ": JPEG input, but this build has no JPEG support");
#endif
  }
  throw DecodeError(path + ": unrecognized image format (expected PGM, PPM, PNG" +
                    (jpeg_supported() ? ", or JPEG)" : ")"));
}

void write_frame(const Frame& frame, const std::string& path) {
  require(frame.width > 0 && frame.height > 0, "write_frame: empty frame");
  require(frame.channels == 1 || frame.channels == 3,
          "write_frame: channel count must be 1 or 3");
  require(frame.samples.size() == frame.pixel_count() * frame.channels,
          "write_frame: sample count does not match dimensions");
  if (has_suffix(path, ".pgm")) {
    require(frame.channels == 1, "write_frame: .pgm requires a single channel");
    write_pnm(frame, path);
  } else if (has_suffix(path, ".ppm")) {
    require(frame.channels == 3, "write_frame: .ppm requires three channels");
    write_pnm(frame, path);
  } else if (has_suffix(path, ".png")) {
    write_png(frame, path);
  } else {
    throw InvalidInputError("write_frame: unsupported extension on '" + path +
                            "' (use .pgm, .ppm, or .png)");
  }
}

void write_mask(const LabelMask& mask, const std::string& path) {
  Frame f(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.labels.size(); ++i)
    f.samples[i] = (mask.labels[i] == Label::Foreground) ? 255.0 : 0.0;
  write_frame(f, path);
}

LabelMask read_mask(const std::string& path) {
  const Frame f = read_frame(path);
  if (f.channels != 1) throw DecodeError(path + ": mask must be single-channel");
  LabelMask mask(f.width, f.height);
  for (std::size_t i = 0; i < mask.labels.size(); ++i)
    mask.labels[i] = (f.samples[i] >= 128.0) ? Label::Foreground : Label::Background;
  return mask;
}

GroundTruthFrame decode_groundtruth(const Frame& frame, std::uint64_t* remapped) {
  require(frame.channels == 1, "decode_groundtruth: frame must be single-channel");
  static constexpr std::array<double, 5> levels = {0.0, 50.0, 85.0, 170.0, 255.0};
  static constexpr std::array<GtLabel, 5> labels = {GtLabel::BackgroundGt, GtLabel::ShadowGt,
                                                    GtLabel::OutsideRoi, GtLabel::UnknownGt,
                                                    GtLabel::ForegroundGt};
  GroundTruthFrame gt(frame.width, frame.height);
  std::uint64_t snapped = 0;
  for (std::size_t i = 0; i < frame.samples.size(); ++i) {
    const double v = frame.samples[i];
    std::size_t best = 0;
    double best_d = std::abs(v - levels[0]);
    for (std::size_t j = 1; j < levels.size(); ++j) {
      const double d = std::abs(v - levels[j]);
      if (d < best_d) {  // strict: a midpoint tie stays with the lower level
        best_d = d;
        best = j;
      }
    }
    if (best_d != 0.0) ++snapped;
    gt.labels[i] = labels[best];
  }
  if (remapped) *remapped = snapped;
  return gt;
}

Frame encode_groundtruth(const GroundTruthFrame& gt) {
  Frame f(gt.width, gt.height, 1);
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    switch (gt.labels[i]) {
      case GtLabel::BackgroundGt: f.samples[i] = 0.0; break;
      case GtLabel::ShadowGt: f.samples[i] = 50.0; break;
      case GtLabel::OutsideRoi: f.samples[i] = 85.0; break;
      case GtLabel::UnknownGt: f.samples[i] = 170.0; break;
      case GtLabel::ForegroundGt: f.samples[i] = 255.0; break;
    }
  }
  return f;
}

bool jpeg_supported() {
#ifdef CP3_HAVE_JPEG
  return true;
#else
  return false;
#endif
}

}  // namespace cp3
