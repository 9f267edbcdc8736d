#pragma once

namespace senc {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace senc
