#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

namespace globalrag::jsonl {

/// Calls `fn(line_number, object)` for every non-blank line; line numbers are
/// 1-based. Throws ParseError naming the line on malformed JSON.
void for_each_line(std::istream& in,
                   const std::function<void(std::size_t, const nlohmann::json&)>& fn);

/// Writes `content` to a sibling temp file and renames it over `path`, so a
/// failed write never leaves a partial file behind. Throws SaveError.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Reads a whole file; throws InputError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Serializes a double so integral values print without a fractional part.
nlohmann::json number(double value);

}  // namespace globalrag::jsonl
