#pragma once

namespace carl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace carl
