#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clarq {

/// English analysis chain: tokenize on letters/digits (apostrophes inside
/// words are kept, then a trailing possessive 's is dropped and remaining
/// apostrophes removed), lowercase, drop stopwords, Porter-stem, and drop
/// stems that are themselves stopwords. Stemming is applied to a fixed point
/// so the chain is idempotent on its own output.
///
/// Bytes >= 0x80 are treated as word characters and left untouched.
class Analyzer {
 public:
  /// The pinned English stopword list.
  static const std::vector<std::string>& stopwords();

  static bool is_stopword(std::string_view term);

  /// Stems a lowercase token to a fixed point.
  static std::string stem(std::string_view token);

  /// Lowercased raw tokens before stopping/stemming.
  static std::vector<std::string> tokenize(std::string_view text);

  static std::vector<std::string> analyze(std::string_view text);
};

inline std::vector<std::string> analyze(std::string_view text) { return Analyzer::analyze(text); }

}  // namespace clarq
