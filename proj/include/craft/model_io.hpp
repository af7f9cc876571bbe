#pragma once

#include "craft/learners.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace craft {

inline constexpr int kModelFormatVersion = 1;

// Model file: a single-line UTF-8 JSON header terminated by '\n', then
// little-endian float32 blobs (column-major) whose names, shapes, byte
// offsets and lengths the header lists. Offsets count from the first byte
// after the newline.
std::string encode_model(const CraftModel& model);
// Throws ParseError on a malformed file. The augmentation plan and CVD
// operator are rebuilt from the stored correlations and eta_ridge.
CraftModel decode_model(std::string_view bytes, const std::string& source_name);

void save_model(const CraftModel& model, const std::filesystem::path& path);
CraftModel load_model(const std::filesystem::path& path);

}  // namespace craft
