#pragma once

namespace sdsforge {

inline constexpr const char* kVersion = "0.1.0";

} // namespace sdsforge
