#pragma once

namespace fraclap {

inline constexpr const char* version = "0.1.0";

}  // namespace fraclap
