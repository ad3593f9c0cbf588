#pragma once

namespace echoguard {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace echoguard
