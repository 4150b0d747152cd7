#pragma once

#include <filesystem>
#include <string_view>

#include <nlohmann/json.hpp>

namespace icumort {

/// Reads the TOML subset used by run configurations into a JSON object:
/// comments, [table] and [dotted.table] headers, bare/quoted/dotted keys,
/// basic and literal strings, integers, floats (incl. inf/nan), booleans,
/// arrays (may span lines) and inline tables. Dates, multi-line strings and
/// arrays of tables are rejected. Throws ConfigError with a line number.
nlohmann::json parse_toml(std::string_view text);
nlohmann::json load_toml(const std::filesystem::path& path);

} // namespace icumort
