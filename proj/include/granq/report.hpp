#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace granq {

struct ReportDifference {
  std::string path;  // JSON pointer
  std::string a;
  std::string b;
};

// Leaf-by-leaf comparison of two eval reports. Numbers are equal when they
// differ by at most `tolerance`; everything else must match exactly. A key
// present on one side only is reported with "<missing>".
std::vector<ReportDifference> diff_reports(const nlohmann::ordered_json& a, const nlohmann::ordered_json& b,
                                           double tolerance = 0.0);

// Plain-text digest of an eval report for the terminal and summary.txt.
std::string summary_table(const nlohmann::ordered_json& report);

}  // namespace granq
