#pragma once

namespace gdiff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gdiff
