// Artifact version, embedded in model files and experiment reports.
#pragma once

#include <string_view>

namespace cryptoprint {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

}  // namespace cryptoprint
