#pragma once

namespace sindy {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sindy
