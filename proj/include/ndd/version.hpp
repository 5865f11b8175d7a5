#pragma once

namespace ndd {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kToolName = "nddtool";

} // namespace ndd
