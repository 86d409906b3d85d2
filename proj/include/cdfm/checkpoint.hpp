#pragma once

#include <filesystem>
#include <string>

#include "cdfm/model.hpp"

namespace cdfm {

inline constexpr int kCheckpointVersion = 1;

/// Text checkpoint: a header of `key value` lines (format_version, lookback,
/// horizon, channels, kernel, ...) followed by one `tensor <name> <rank> <dims...>`
/// line per tensor and its row-major values on the next line.
std::string serialize_checkpoint(const CdfmState& state);
CdfmState parse_checkpoint(const std::string& text);

void save_checkpoint(const CdfmState& state, const std::filesystem::path& path);
CdfmState load_checkpoint(const std::filesystem::path& path);

}  // namespace cdfm
