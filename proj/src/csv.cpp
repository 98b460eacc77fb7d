#include "granq/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "granq/error.hpp"

namespace granq::csv {

Reader::Reader(const std::filesystem::path& path) : name_(path.string()) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + name_ + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  data_ = std::move(ss).str();
}

bool Reader::next(std::vector<std::string_view>& fields) {
  while (pos_ < data_.size()) {
    std::size_t end = data_.find('\n', pos_);
    if (end == std::string::npos) end = data_.size();
    std::string_view line(data_.data() + pos_, end - pos_);
    pos_ = end + 1;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    fields.clear();
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
      while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
      if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
      fields.push_back(f);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return true;
  }
  return false;
}

std::string Reader::where(std::string_view message) const {
  return name_ + ":" + std::to_string(line_) + ": " + std::string(message);
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  // Accept integral floats such as "5.0".
  if (auto d = parse_double(s); d && std::floor(*d) == *d && std::abs(*d) < 9e15) return static_cast<long long>(*d);
  return std::nullopt;
}

std::optional<double> parse_double_or_nan(std::string_view s) {
  if (s.empty() || s == "nan" || s == "NaN" || s == "NAN" || s == "NA" || s == "null") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return parse_double(s);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace granq::csv
