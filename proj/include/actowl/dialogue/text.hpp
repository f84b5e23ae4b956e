#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace actowl::dialogue::text {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Trims whitespace and one layer of surrounding quotes or brackets.
inline std::string strip_quotes(std::string_view s) {
  std::string t = trim(s);
  while (t.size() >= 2) {
    const char f = t.front(), b = t.back();
    if ((f == '"' && b == '"') || (f == '\'' && b == '\'') || (f == '`' && b == '`')) {
      t = trim(std::string_view(t).substr(1, t.size() - 2));
    } else {
      break;
    }
  }
  return t;
}

/// Replaces typographic apostrophes and quotes with their ASCII forms.
inline std::string ascii_quotes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    // U+2018/U+2019 are E2 80 98/99, U+201C/U+201D are E2 80 9C/9D.
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 && static_cast<unsigned char>(s[i + 1]) == 0x80) {
      const auto c = static_cast<unsigned char>(s[i + 2]);
      if (c == 0x98 || c == 0x99) {
        out += '\'';
        i += 2;
        continue;
      }
      if (c == 0x9C || c == 0x9D) {
        out += '"';
        i += 2;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

struct Token {
  std::string word;     ///< lowercased, possessive suffix removed
  bool possessive = false;  ///< was written as "x's" or "xs'"
};

/// Lowercased word tokens. Apostrophes inside a word are kept only to detect
/// the possessive suffix.
inline std::vector<Token> tokenize(std::string_view raw) {
  const std::string s = lower(ascii_quotes(raw));
  std::vector<Token> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    Token t;
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    if (cur.size() > 2 && cur.ends_with("'s")) {
      t.possessive = true;
      cur.resize(cur.size() - 2);
    }
    cur.erase(std::remove(cur.begin(), cur.end(), '\''), cur.end());
    t.word = cur;
    if (!t.word.empty()) out.push_back(std::move(t));
    cur.clear();
  };
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '_' || c == '-' ||
        static_cast<unsigned char>(c) >= 0x80) {
      cur += c;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

/// Levenshtein distance over bytes.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline bool contains_phrase(std::string_view haystack_lower, std::string_view phrase) {
  return haystack_lower.find(phrase) != std::string_view::npos;
}

}  // namespace actowl::dialogue::text
