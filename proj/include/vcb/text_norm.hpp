#pragma once

// Canonical concept keys from free-form object and attribute names:
// case-fold, strip punctuation, drop stopwords, singularize. Verb forms are
// never lemmatized ("building" stays "building").

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vcb/linalg.hpp"

namespace vcb {

enum class NameKind { Noun, Attribute };

using WordSet = std::set<std::string, std::less<>>;
using AliasMap = std::map<std::string, std::string, std::less<>>;

struct StopwordPolicy {
  WordSet noun_stopwords;
  WordSet attribute_stopwords;

  const WordSet& for_kind(NameKind kind) const {
    return kind == NameKind::Noun ? noun_stopwords : attribute_stopwords;
  }
};

namespace detail {

inline void append_utf8(std::string& out, char32_t cp) {
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
}

// Decodes the code point at s[i], advancing i. Invalid bytes decode as
// U+FFFD one byte at a time.
inline char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto lead = static_cast<unsigned char>(s[i]);
  int extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++i;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + extra >= s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto byte = static_cast<unsigned char>(s[i + k]);
    if ((byte & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (byte & 0x3F);
  }
  i += extra + 1;
  return cp;
}

// Simple case folding: ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
inline char32_t fold_case(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x137 && (cp % 2 == 0)) return cp + 1;
  if (cp >= 0x139 && cp <= 0x148 && (cp % 2 == 1)) return cp + 1;
  if (cp >= 0x14A && cp <= 0x177 && (cp % 2 == 0)) return cp + 1;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E && (cp % 2 == 1)) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

inline bool is_separator(char32_t cp) {
  if (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v') return true;
  if (cp == '-' || cp == '_' || cp == '/') return true;
  if (cp >= 0x80 && cp <= 0xBF) return true;  // C1 controls, Latin-1 punctuation
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return true;  // CJK punctuation
  if (cp == 0xFFFD || cp == 0xFEFF) return true;
  return false;
}

inline bool is_ascii_word_char(char32_t cp) {
  return (cp >= 'a' && cp <= 'z') || (cp >= '0' && cp <= '9');
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline constexpr std::array<std::pair<std::string_view, std::string_view>, 8> kIrregularPlurals{{
    {"children", "child"},
    {"men", "man"},
    {"women", "woman"},
    {"feet", "foot"},
    {"teeth", "tooth"},
    {"people", "person"},
    {"mice", "mouse"},
    {"geese", "goose"},
}};

inline std::string singularize_rules(std::string_view w) {
  for (const auto& [plural, single] : kIrregularPlurals)
    if (w == plural) return std::string(single);
  if (w.size() > 4 && ends_with(w, "ies")) return std::string(w.substr(0, w.size() - 3)) + "y";
  if (ends_with(w, "xes") || ends_with(w, "sses") || ends_with(w, "ches") || ends_with(w, "shes") ||
      ends_with(w, "zzes"))
    return std::string(w.substr(0, w.size() - 2));
  if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
      !ends_with(w, "is"))
    return std::string(w.substr(0, w.size() - 1));
  return std::string(w);
}

}  // namespace detail

/// Case-folds UTF-8 text; non-ASCII letters outside the folded ranges pass
/// through unchanged.
inline std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) detail::append_utf8(out, detail::fold_case(detail::next_code_point(text, i)));
  return out;
}

/// Case-folded tokens with punctuation removed. Whitespace, '-', '_', '/' and
/// non-ASCII punctuation separate tokens; other ASCII punctuation is dropped.
inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (std::size_t i = 0; i < text.size();) {
    const char32_t cp = detail::fold_case(detail::next_code_point(text, i));
    if (detail::is_separator(cp) || cp < 0x20 || cp == 0x7F) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else if (cp < 0x80) {
      if (detail::is_ascii_word_char(cp)) current += static_cast<char>(cp);
    } else {
      detail::append_utf8(current, cp);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

/// Rule-based plural reduction: irregular table, "-ies" -> "-y",
/// "-xes/-sses/-ches/-shes/-zzes" drop "es", otherwise a trailing "s" is
/// dropped unless the word ends in "ss", "us" or "is" or is three letters or
/// fewer. A reduction whose result would itself be reduced again is refused,
/// which makes the function idempotent.
inline std::string singularize(std::string_view word) {
  std::string once = detail::singularize_rules(word);
  if (once == word) return once;
  if (detail::singularize_rules(once) != once) return std::string(word);
  return once;
}

/// Canonical key for an object or attribute phrase; empty when every token
/// is a stopword.
inline std::string normalize_name(std::string_view phrase, const StopwordPolicy& policy,
                                  NameKind kind) {
  const WordSet& stop = policy.for_kind(kind);
  std::string key;
  for (const auto& token : split_words(phrase)) {
    if (stop.contains(token)) continue;
    std::string single = singularize(token);
    if (stop.contains(single)) continue;
    if (!key.empty()) key += ' ';
    key += single;
  }
  return key;
}

/// Words of a target class label such as "riding_a_horse": noun stopwords
/// dropped, aliases applied, no singularization.
inline std::vector<std::string> tokenize_class_name(std::string_view name,
                                                    const WordSet& noun_stopwords,
                                                    const AliasMap& aliases = {}) {
  std::vector<std::string> out;
  for (auto& token : split_words(name)) {
    if (noun_stopwords.contains(token)) continue;
    if (auto it = aliases.find(token); it != aliases.end())
      out.push_back(it->second);
    else
      out.push_back(std::move(token));
  }
  return out;
}

/// One entry per line, '#' starts a comment, blank lines ignored. Entries
/// are case-folded.
inline WordSet parse_word_list(std::istream& in) {
  WordSet out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (!view.empty()) out.insert(fold_case(view));
  }
  return out;
}

/// "from to" per line (whitespace separated), '#' comments.
inline AliasMap parse_alias_list(std::istream& in) {
  AliasMap out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::istringstream fields{std::string(view)};
    std::string from, to, extra;
    if (!(fields >> from)) continue;
    if (!(fields >> to) || (fields >> extra))
      throw Error("alias list line " + std::to_string(line_no) + ": expected 'from to'");
    out.emplace(fold_case(from), fold_case(to));
  }
  return out;
}

inline WordSet load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open word list: " + path);
  return parse_word_list(in);
}

inline AliasMap load_alias_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open alias list: " + path);
  return parse_alias_list(in);
}

inline StopwordPolicy load_stopword_policy(const std::string& noun_path,
                                           const std::string& attribute_path) {
  return StopwordPolicy{load_word_list(noun_path), load_word_list(attribute_path)};
}

}  // namespace vcb
