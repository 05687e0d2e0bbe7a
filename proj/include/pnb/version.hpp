#pragma once

namespace pnb {

inline constexpr const char* kToolName = "pnb";
inline constexpr const char* kVersion = "1.0.0";

}  // namespace pnb
