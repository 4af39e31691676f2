#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "flp/policy_gnn.hpp"

namespace flp {

inline constexpr int kCheckpointVersion = 1;

/// Checkpoint text layout: line 1 is the JSON header
/// {"version":1,"L":..,"d":..,"feat":7}; every following line is one weight
/// block {"name":..,"rows":..,"cols":..,"data":<base64>} where data holds the
/// row-major little-endian IEEE-754 doubles.
std::string checkpoint_to_string(const Policy& params);
Policy checkpoint_from_string(std::string_view text);

void save_checkpoint(const Policy& params, const std::filesystem::path& path);
Policy load_checkpoint(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace flp
