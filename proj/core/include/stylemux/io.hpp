#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stylemux::io {

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
bool exists(const std::string& path);
void ensure_dir(const std::string& path);
std::vector<std::string> list_dir(const std::string& path);  // sorted file names

// Small string helpers shared by parsers.
std::vector<std::string> split(const std::string& s, char sep);
std::vector<std::string> split_ws(const std::string& s);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string ascii_lower(const std::string& s);
std::string trim(const std::string& s);

// Throw DataError with context on malformed numbers.
int64_t parse_int(const std::string& s, const std::string& context);
double parse_double(const std::string& s, const std::string& context);

}  // namespace stylemux::io
