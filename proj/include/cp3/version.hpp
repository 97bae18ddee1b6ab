#pragma once

namespace cp3 {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kModelFormatVersion = 1;

}  // namespace cp3
