#pragma once

namespace segrec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace segrec
