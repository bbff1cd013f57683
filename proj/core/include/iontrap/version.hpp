#pragma once

namespace iontrap {

inline constexpr const char* project_version = "0.1.0";

} // namespace iontrap
