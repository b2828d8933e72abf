#pragma once

#include <filesystem>
#include <string>

#include "gbst/booster.hpp"

namespace gbst {

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON model file: trees as nested {kind: "split"|"leaf", ...}
// nodes, training config and seed echoed. serialize -> deserialize ->
// serialize is a fixed point, and a deserialized model predicts
// bit-identically to the original.
std::string model_to_json(const GbstModel& model);
GbstModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const GbstModel& model);
GbstModel load_model(const std::filesystem::path& path);

}  // namespace gbst
