#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace construe::unicode {

/// One decoded code point with its byte range in the source string.
struct CodePoint {
  char32_t value = 0;
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
};

/// Decodes UTF-8; malformed bytes decode as U+FFFD covering one byte.
std::vector<CodePoint> decode(std::string_view text);

std::string encode(char32_t cp);

std::string nfc(std::string_view text);
bool is_nfc(std::string_view text);

std::string to_lower(std::string_view text);
std::string lower_first(std::string_view text);
std::string upper_first(std::string_view text);
bool starts_upper(std::string_view text);
bool starts_lower(std::string_view text);

bool is_letter(char32_t cp);
bool is_digit(char32_t cp);
bool is_space(char32_t cp);

/// Number of code points in text.
std::size_t length(std::string_view text);

/// Trims Unicode whitespace on both ends.
std::string_view trim(std::string_view text);

}  // namespace construe::unicode
