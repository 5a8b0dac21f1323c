#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coldbrew/matrix.hpp"

namespace coldbrew {

/// Ordered key=value entries, the format of meta files and reports.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_key_values(const std::filesystem::path& path, const KeyValues& kv);
/// Reads key=value lines; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

void write_ids(const std::filesystem::path& path, const NodeList& ids);
NodeList read_ids(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_number(double value);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

/// FNV-1a over the text, as 16 hex digits.
std::string hash_text(const std::string& text);

}  // namespace coldbrew
