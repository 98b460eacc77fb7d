#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace granq {

// Lower-case hex SHA-256 of a file's bytes / of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

}  // namespace granq
