#pragma once

namespace diffwass {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace diffwass
