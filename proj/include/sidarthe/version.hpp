#pragma once

namespace sidarthe {

inline constexpr const char* kLibraryName = "sidarthe-gf";
inline constexpr const char* kVersion = "1.0.0";

} // namespace sidarthe
