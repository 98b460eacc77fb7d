#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

namespace granq::toml {

// Parses the TOML subset used by run and scenario files into a JSON object:
// [tables], [[arrays of tables]], dotted and quoted keys, basic and literal
// strings, integers, floats, booleans, inline tables and (multi-line) arrays.
// Dates and multi-line strings are not supported. Errors raise
// ValidationError naming the line.
nlohmann::json parse(std::string_view text, std::string_view source = "<string>");
nlohmann::json parse_file(const std::filesystem::path& path);

}  // namespace granq::toml
