#pragma once

namespace sgdp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sgdp
