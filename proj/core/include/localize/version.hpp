#pragma once

namespace localize {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace localize
