#pragma once

namespace lane {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lane
