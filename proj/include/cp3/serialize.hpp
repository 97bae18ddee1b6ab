#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cp3/model.hpp"

namespace cp3 {

// Model persistence. Little-endian binary: "CP3M" magic, format version,
// dimensions and channel count, the full parameter block, then row-major
// per-pixel records (per pair: support coordinate, delta, upper-triangular
// sigma; then the pixel's range bounds). Doubles travel as raw IEEE-754 bits,
// so save/load round trips are bit-exact.
std::vector<std::uint8_t> save_model(const AnyModel& model);
AnyModel load_model(std::span<const std::uint8_t> bytes);

void save_model_file(const AnyModel& model, const std::string& path);
AnyModel load_model_file(const std::string& path);

}  // namespace cp3
