#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace openem {

using Json = nlohmann::json;

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Parses one JSON object per non-blank line. Parse failures raise
/// ValidationError naming the 1-based line number.
std::vector<Json> parse_jsonl(std::string_view text, std::string_view source);

/// Stable JSON text: sorted keys (nlohmann default), two-space indent,
/// trailing newline.
std::string dump_pretty(const Json& j);

}  // namespace openem
