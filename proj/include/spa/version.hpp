#pragma once

namespace spa {
inline constexpr const char* kVersion = "0.1.0";
}
