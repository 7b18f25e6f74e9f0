#pragma once

namespace tvblf {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace tvblf
