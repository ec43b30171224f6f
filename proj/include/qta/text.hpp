#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qta::text {

bool is_ascii_space(char c) noexcept;

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

// Whitespace-delimited tokens (ASCII whitespace).
std::vector<std::string_view> split_words(std::string_view s);
std::size_t word_count(std::string_view s);

// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD and
// consume one byte. When `byte_offsets` is given it receives the starting
// byte of every decoded code point plus a final entry equal to s.size().
std::u32string utf8_decode(std::string_view s,
                           std::vector<std::size_t>* byte_offsets = nullptr);
std::string utf8_encode(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// "{name}" substitution helpers shared by prompt rendering.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace qta::text
