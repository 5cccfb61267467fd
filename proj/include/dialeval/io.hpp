#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dialeval::io {

/// One JSON value per non-blank line. Throws Error(data) naming the line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Creates parent directories. Output is byte-stable: object keys are sorted
/// and floats use shortest round-trip formatting.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace dialeval::io
