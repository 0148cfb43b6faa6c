#pragma once

namespace spanqa {

inline constexpr const char* kToolName = "spanqa";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace spanqa
