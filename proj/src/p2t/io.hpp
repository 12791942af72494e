#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace p2t {

using Json = nlohmann::json;

// 64-bit FNV-1a rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames over the target, so a
// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Calls `on_line(line_number, json)` for every non-blank line. Parse
// failures raise Schema errors carrying the line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(long, const Json&)>& on_line);

std::string to_jsonl(const std::vector<Json>& rows);

// Text helpers shared by several modules.
std::string trim(std::string_view s);
std::string ascii_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
void replace_all(std::string& text, std::string_view from, std::string_view to);

// Field accessors that raise Schema errors naming the field.
std::string require_string(const Json& j, const char* field, long line);
std::string optional_string(const Json& j, const char* field, long line);
std::int64_t require_int(const Json& j, const char* field, long line);

}  // namespace p2t
