#pragma once

// UTF-8 helpers shared by the KG index, the entity linker and the response
// validator. Matching everywhere uses the same normal form: simple case fold,
// whitespace runs collapsed to a single space, leading/trailing space trimmed.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace claimver::text {

struct Utf8Char {
  char32_t cp;
  std::size_t len;
};

// Invalid or truncated sequences decode as a single byte so offsets always advance.
inline Utf8Char decode_at(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {b0, 1};
  }
  if (pos + len > s.size()) return {b0, 1};
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return {b0, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Simple (length-preserving in code points) case fold covering ASCII, Latin-1,
// Latin Extended-A, Greek and Cyrillic.
inline char32_t fold(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
  if (cp >= 0x0100 && cp <= 0x017F) {
    if (cp == 0x0130) return U'i';
    if (cp == 0x0178) return 0x00FF;
    if (cp == 0x017F) return U's';
    const bool even_upper = (cp <= 0x012F) || (cp >= 0x0132 && cp <= 0x0137) ||
                            (cp >= 0x014A && cp <= 0x0177);
    const bool odd_upper = (cp >= 0x0139 && cp <= 0x0148) || (cp >= 0x0179 && cp <= 0x017E);
    if (even_upper && cp % 2 == 0) return cp + 1;
    if (odd_upper && cp % 2 == 1) return cp + 1;
    return cp;
  }
  if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 32;
  if (cp == 0x0386) return 0x03AC;
  if (cp >= 0x0388 && cp <= 0x038A) return cp + 37;
  if (cp == 0x038C) return 0x03CC;
  if (cp == 0x038E || cp == 0x038F) return cp + 63;
  if (cp == 0x03C2) return 0x03C3;
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 32;
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 80;
  return cp;
}

inline bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

// Letters and digits. Anything outside ASCII that is not space or common
// punctuation counts as a word character.
inline bool is_word(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (is_space(cp)) return false;
  if (cp < 0x00C0) return false;
  if (cp == 0x00D7 || cp == 0x00F7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  return true;
}

inline std::string casefold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = decode_at(s, i);
    if (c.len == 1 && c.cp >= 0x80) {
      out.push_back(s[i]);  // keep invalid bytes verbatim
    } else {
      append_utf8(out, fold(c.cp));
    }
    i += c.len;
  }
  return out;
}

// Normalized text plus, for every output byte, the byte range of the source
// character it came from.
struct NormalizedText {
  std::string text;
  std::vector<std::size_t> src_begin;
  std::vector<std::size_t> src_end;

  // Maps a normalized byte range [begin, end) back to the source string.
  std::pair<std::size_t, std::size_t> source_range(std::size_t begin, std::size_t end) const {
    return {src_begin[begin], src_end[end - 1]};
  }
};

inline NormalizedText normalize_with_map(std::string_view s) {
  NormalizedText out;
  out.text.reserve(s.size());
  bool pending_space = false;
  std::size_t space_begin = 0;
  std::size_t space_end = 0;
  auto push = [&out](std::string_view bytes, std::size_t b, std::size_t e) {
    for (char ch : bytes) {
      out.text.push_back(ch);
      out.src_begin.push_back(b);
      out.src_end.push_back(e);
    }
  };
  for (std::size_t i = 0; i < s.size();) {
    const auto c = decode_at(s, i);
    if (is_space(c.cp)) {
      if (!pending_space) space_begin = i;
      pending_space = true;
      space_end = i + c.len;
    } else {
      if (pending_space && !out.text.empty()) push(" ", space_begin, space_end);
      pending_space = false;
      std::string bytes;
      if (c.len == 1 && c.cp >= 0x80) {
        bytes.push_back(s[i]);
      } else {
        append_utf8(bytes, fold(c.cp));
      }
      push(bytes, i, i + c.len);
    }
    i += c.len;
  }
  return out;
}

inline std::string normalize(std::string_view s) { return normalize_with_map(s).text; }

struct Token {
  std::string norm;  // case-folded
  std::size_t begin;
  std::size_t end;
};

// Maximal runs of word characters.
inline std::vector<Token> tokenize_words(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = decode_at(s, i);
    if (!is_word(c.cp)) {
      i += c.len;
      continue;
    }
    Token tok{{}, i, i};
    while (i < s.size()) {
      c = decode_at(s, i);
      if (!is_word(c.cp)) break;
      append_utf8(tok.norm, fold(c.cp));
      i += c.len;
    }
    tok.end = i;
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// 64-bit FNV-1a. Stable across platforms, used for fixture keys and the
// hashed bag-of-tokens embedder.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace claimver::text
