#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace iauth::kv {

/// Splits a line of space-separated `key=value` tokens. Duplicate keys rejected.
std::map<std::string, std::string> parse_line(const std::string& line, int lineno);

/// Whole-file `key=value` (one per line, '#' comments, blank lines skipped).
/// Later duplicates override earlier ones; insertion order preserved separately.
std::map<std::string, std::string> parse_file(std::istream& in);

std::string format_double(double v);   // lossless round-trip (%.17g)
double parse_double(const std::string& s, const std::string& key);
std::int64_t parse_int(const std::string& s, const std::string& key);

std::vector<std::string> split(const std::string& s, char sep);

}  // namespace iauth::kv
