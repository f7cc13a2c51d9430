#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace revmine {

using Json = nlohmann::json;
// Insertion-ordered JSON, used where the key order of a prompt-facing
// document must be preserved.
using OrderedJson = nlohmann::ordered_json;

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Truncates to at most `max_chars` code points without splitting a UTF-8
// sequence.
std::string utf8_truncate(std::string_view s, std::size_t max_chars);

std::string sha256_hex(std::string_view data);

// 64-bit FNV-1a with the seed folded into the offset basis.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temp file and rename so readers never observe a
// partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// Canonical JSON text for artifacts: 2-space indent, trailing newline.
std::string dump_json(const Json& value);
std::string dump_json(const OrderedJson& value);

void log_warn(std::string_view message);
void log_info(std::string_view message);
void set_log_quiet(bool quiet);

}  // namespace revmine
