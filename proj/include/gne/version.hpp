#pragma once

namespace gne {
inline constexpr const char* kVersion = "0.1.0";
}
