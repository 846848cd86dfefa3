#pragma once

namespace exitrate {

inline constexpr const char* kVersion = "0.1.0";

} // namespace exitrate
