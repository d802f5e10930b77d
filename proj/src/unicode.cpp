#include "construe/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "construe/error.hpp"

namespace construe::unicode {

std::vector<CodePoint> decode(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < text.size()) {
    const unsigned char c = byte(i);
    std::size_t len = 1;
    char32_t cp = 0xFFFD;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < text.size() && (byte(i + 1) >> 6) == 0x2) {
      cp = ((c & 0x1F) << 6) | (byte(i + 1) & 0x3F);
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < text.size() && (byte(i + 1) >> 6) == 0x2 &&
               (byte(i + 2) >> 6) == 0x2) {
      cp = ((c & 0x0F) << 12) | ((byte(i + 1) & 0x3F) << 6) | (byte(i + 2) & 0x3F);
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < text.size() && (byte(i + 1) >> 6) == 0x2 &&
               (byte(i + 2) >> 6) == 0x2 && (byte(i + 3) >> 6) == 0x2) {
      cp = ((c & 0x07) << 18) | ((byte(i + 1) & 0x3F) << 12) | ((byte(i + 2) & 0x3F) << 6) |
           (byte(i + 3) & 0x3F);
      len = 4;
    }
    out.push_back({cp, i, i + len});
    i += len;
  }
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

namespace {

const icu::Normalizer2& nfc_normalizer() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) fail(ErrorCode::Internal, "ICU NFC normalizer unavailable");
  return *n;
}

}  // namespace

std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const auto normalized = nfc_normalizer().normalize(src, status);
  if (U_FAILURE(status)) fail(ErrorCode::Internal, "NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

bool is_nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const bool ok = nfc_normalizer().isNormalized(src, status);
  return U_SUCCESS(status) && ok;
}

std::string to_lower(std::string_view text) {
  std::string out;
  for (const auto& cp : decode(text)) out += encode(static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp.value))));
  return out;
}

std::string lower_first(std::string_view text) {
  if (text.empty()) return {};
  const auto cps = decode(text);
  std::string out = encode(static_cast<char32_t>(u_tolower(static_cast<UChar32>(cps[0].value))));
  out.append(text.substr(cps[0].byte_end));
  return out;
}

std::string upper_first(std::string_view text) {
  if (text.empty()) return {};
  const auto cps = decode(text);
  std::string out = encode(static_cast<char32_t>(u_toupper(static_cast<UChar32>(cps[0].value))));
  out.append(text.substr(cps[0].byte_end));
  return out;
}

bool starts_upper(std::string_view text) {
  if (text.empty()) return false;
  return u_isupper(static_cast<UChar32>(decode(text.substr(0, 4))[0].value));
}

bool starts_lower(std::string_view text) {
  if (text.empty()) return false;
  return u_islower(static_cast<UChar32>(decode(text.substr(0, 4))[0].value));
}

bool is_letter(char32_t cp) {
  const auto c = static_cast<UChar32>(cp);
  // Alphabetic covers combining marks as well, so decomposed letters stay in one word.
  return u_hasBinaryProperty(c, UCHAR_ALPHABETIC) || (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0;
}

bool is_digit(char32_t cp) { return u_isdigit(static_cast<UChar32>(cp)); }

bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

std::size_t length(std::string_view text) { return decode(text).size(); }

std::string_view trim(std::string_view text) {
  const auto cps = decode(text);
  std::size_t first = 0;
  while (first < cps.size() && is_space(cps[first].value)) ++first;
  if (first == cps.size()) return {};
  std::size_t last = cps.size();
  while (last > first && is_space(cps[last - 1].value)) --last;
  return text.substr(cps[first].byte_start, cps[last - 1].byte_end - cps[first].byte_start);
}

}  // namespace construe::unicode
