#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

namespace dialeval::toml {

/// Parses the TOML subset used by run configs into a JSON object: tables,
/// arrays of tables, dotted and quoted keys, basic and literal strings,
/// integers, floats, booleans, arrays and inline tables. Multi-line strings
/// and date-times are not supported. Throws dialeval::Error(usage) with a
/// line number on malformed input.
nlohmann::json parse(std::string_view document);
nlohmann::json parse_file(const std::filesystem::path& path);

}  // namespace dialeval::toml
