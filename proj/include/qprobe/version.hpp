#pragma once

namespace qprobe {
inline constexpr const char* kVersion = "0.1.0";
}
