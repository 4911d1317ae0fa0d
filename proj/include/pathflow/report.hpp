#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace pathflow {

inline constexpr const char* kReportSchema = "pathflow-report/1";

// Deterministic JSON text: object keys sorted, floats with 17 significant
// digits, non-finite floats as null, two-space indentation.
std::string dump_json(const nlohmann::json& j);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data) noexcept;
// Hex FNV-1a of the canonical text of a config.
std::string config_hash(const nlohmann::json& config);

}  // namespace pathflow
