#pragma once

// JSON forms of the reports. Infinite values are written as the strings
// "inf" / "-inf" since JSON has no literal for them.

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "fpk/invariants.hpp"

namespace fpk::app {

nlohmann::json json_number(double v);

nlohmann::json to_json(const HypothesisReport& report);
nlohmann::json to_json(const CheckReport& report);
/// {"all_pass": bool, "checks": [...]} with checks sorted by id.
nlohmann::json verification_document(std::vector<CheckReport> reports);

/// Pretty-printed, written atomically.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace fpk::app
