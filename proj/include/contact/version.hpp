#pragma once

namespace contact {

inline constexpr const char* kVersion = "0.1.0";

} // namespace contact
