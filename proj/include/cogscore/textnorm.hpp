#pragma once

// Label and caption normalization, and label-in-sentence matching.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "cogscore/error.hpp"

namespace cogscore {

/// Ordered lowercase tokens. Tokens are never empty and carry no whitespace.
struct TokenSeq {
  std::vector<std::string> tokens;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

struct MatchOptions {
  /// Treat two tokens as equal when one is the other plus "s" or "es".
  bool stem_match = true;
};

namespace detail {

inline const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  return *n;
}

inline icu::UnicodeString to_nfc(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(s, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("NFC normalization failed");
  }
  return out;
}

// Letters, combining marks and numbers form tokens; everything else separates them.
inline bool is_token_char(UChar32 c) {
  constexpr uint32_t kMask = U_GC_L_MASK | U_GC_M_MASK | U_GC_N_MASK;
  return (U_GET_GC_MASK(c) & kMask) != 0;
}

inline bool plural_of(std::string_view longer, std::string_view shorter) {
  if (longer.size() == shorter.size() + 1) {
    return longer.back() == 's' && longer.starts_with(shorter);
  }
  if (longer.size() == shorter.size() + 2) {
    return longer.ends_with("es") && longer.starts_with(shorter);
  }
  return false;
}

}  // namespace detail

/// Lowercase, NFC-normalized, punctuation- and whitespace-split tokens of `text`.
/// Invalid UTF-8 sequences become U+FFFD, which is a token boundary.
inline TokenSeq normalize(std::string_view text) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u = detail::to_nfc(u);
  u.toLower(icu::Locale::getRoot());
  u = detail::to_nfc(u);

  TokenSeq out;
  icu::UnicodeString current;
  auto flush = [&] {
    if (!current.isEmpty()) {
      std::string utf8;
      current.toUTF8String(utf8);
      out.tokens.push_back(std::move(utf8));
      current.remove();
    }
  };
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    if (detail::is_token_char(c)) {
      current.append(c);
    } else {
      flush();
    }
    i = u.moveIndex32(i, 1);
  }
  flush();
  return out;
}

/// Tokens joined by single spaces. This is the canonical string key of a label.
inline std::string join(const TokenSeq& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += seq.tokens[i];
  }
  return out;
}

inline bool tokens_match(std::string_view a, std::string_view b, const MatchOptions& opts = {}) {
  if (a == b) return true;
  if (!opts.stem_match) return false;
  return detail::plural_of(a, b) || detail::plural_of(b, a);
}

/// True iff `label` occurs as a contiguous token run inside `sentence`.
inline bool contains_label(const TokenSeq& sentence, const TokenSeq& label,
                           const MatchOptions& opts = {}) {
  if (label.empty()) {
    throw InputError("contains_label: empty label");
  }
  if (label.size() > sentence.size()) return false;
  for (std::size_t start = 0; start + label.size() <= sentence.size(); ++start) {
    bool hit = true;
    for (std::size_t k = 0; k < label.size(); ++k) {
      if (!tokens_match(sentence[start + k], label[k], opts)) {
        hit = false;
        break;
      }
    }
    if (hit) return true;
  }
  return false;
}

}  // namespace cogscore
