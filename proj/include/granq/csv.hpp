#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace granq::csv {

// Line-oriented reader over a whole file held in memory. Fields are split on
// commas; surrounding double quotes are stripped. No embedded commas.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  // Next non-empty record, or false at end of file.
  bool next(std::vector<std::string_view>& fields);
  std::size_t line() const { return line_; }
  const std::string& file() const { return name_; }

  // "file:line: message"
  std::string where(std::string_view message) const;

 private:
  std::string name_;
  std::string data_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);
// Empty cells and NaN spellings parse as quiet NaN.
std::optional<double> parse_double_or_nan(std::string_view s);

// Shortest round-trip representation.
std::string format_double(double v);

}  // namespace granq::csv
