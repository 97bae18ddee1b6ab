#pragma once

#include <cstdint>
#include <string>

#include "cp3/frame.hpp"

namespace cp3 {

// Decodes PGM (P5), PPM (P6), PNG (8-bit gray or RGB; palette/alpha/16-bit
// inputs are converted), and — when built with JPEG support — baseline JPEG.
// The format is sniffed from the file's leading bytes, not its name.
Frame read_frame(const std::string& path);

// Encodes by extension: .pgm (1 channel), .ppm (3 channels), .png (either).
// Samples are rounded to the nearest integer and clamped to [0, 255], so
// writing 8-bit-valued data round-trips bit-exactly.
void write_frame(const Frame& frame, const std::string& path);

// Binary mask I/O: Foreground -> 255, Background -> 0; on read, any value
// >= 128 counts as foreground.
void write_mask(const LabelMask& mask, const std::string& path);
LabelMask read_mask(const std::string& path);

// Maps the five-level grayscale annotation encoding (0 background, 50 shadow,
// 85 outside ROI, 170 unknown, 255 foreground) to labels; any other value
// snaps to the nearest level (ties to the lower level). `remapped`, when
// given, receives the number of snapped pixels so callers can log it.
GroundTruthFrame decode_groundtruth(const Frame& frame, std::uint64_t* remapped = nullptr);

// Inverse of decode_groundtruth: labels back to the five gray levels.
Frame encode_groundtruth(const GroundTruthFrame& gt);

// True when this build can decode JPEG input.
bool jpeg_supported();

}  // namespace cp3
