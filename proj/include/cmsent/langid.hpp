#pragma once

#include <array>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cmsent/errors.hpp"

namespace cmsent::langid {

enum class LanguageTag { English, NonEnglish };

/// One-hot feature encoding: English -> [1,0], NonEnglish -> [0,1].
inline std::array<double, 2> encode(LanguageTag tag) {
  return tag == LanguageTag::English ? std::array<double, 2>{1.0, 0.0}
                                     : std::array<double, 2>{0.0, 1.0};
}

inline constexpr int kTagDim = 2;

struct Wordlist {
  std::unordered_set<std::string> entries;  // lowercase [a-z]+ only
  std::string source_name;
  std::size_t skipped_lines = 0;

  bool contains(std::string_view word) const {
    return entries.find(std::string(word)) != entries.end();
  }
};

/// Reads one word per line; lines are trimmed and lowercased, '#' comments and
/// anything not matching [a-z]+ are skipped (and counted).
inline Wordlist load_wordlist(std::istream& in, std::string source_name = "") {
  if (!in) throw WordlistError("cannot read wordlist '" + source_name + "'");
  Wordlist wl;
  wl.source_name = std::move(source_name);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t begin = line.find_first_not_of(" \t\r\n\v\f");
    if (begin == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t\r\n\v\f");
    std::string word = line.substr(begin, end - begin + 1);
    if (word[0] == '#') continue;
    bool ok = true;
    for (char& c : word) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
      if (c < 'a' || c > 'z') {
        ok = false;
        break;
      }
    }
    if (!ok) {
      ++wl.skipped_lines;
      continue;
    }
    wl.entries.insert(std::move(word));
  }
  if (in.bad()) throw WordlistError("I/O failure while reading wordlist '" + wl.source_name + "'");
  return wl;
}

inline Wordlist load_wordlist_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open wordlist: " + path);
  return load_wordlist(is, path);
}

/// English iff the token is pure ASCII letters and its lowercase form is in
/// the wordlist. Everything else (Tamil script, romanized Tamil missing from
/// the list, digits, punctuation) tags NonEnglish.
inline LanguageTag tag_token(std::string_view token, const Wordlist& wl) {
  if (token.empty()) throw std::invalid_argument("tag_token: empty token");
  std::string lowered;
  lowered.reserve(token.size());
  for (char c : token) {
    if (c >= 'A' && c <= 'Z') {
      lowered.push_back(static_cast<char>(c + 32));
    } else if (c >= 'a' && c <= 'z') {
      lowered.push_back(c);
    } else {
      return LanguageTag::NonEnglish;
    }
  }
  return wl.contains(lowered) ? LanguageTag::English : LanguageTag::NonEnglish;
}

inline std::vector<LanguageTag> tag_sentence(const std::vector<std::string>& tokens,
                                             const Wordlist& wl) {
  std::vector<LanguageTag> tags;
  tags.reserve(tokens.size());
  for (const auto& tok : tokens) tags.push_back(tag_token(tok, wl));
  return tags;
}

}  // namespace cmsent::langid
