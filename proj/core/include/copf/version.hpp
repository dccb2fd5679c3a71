#pragma once

namespace copf {
inline constexpr const char* kVersion = "0.1.0";
}
