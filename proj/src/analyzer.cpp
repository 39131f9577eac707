#include "clarq/analyzer.hpp"

#include <algorithm>
#include <unordered_set>

#include "porter_stemmer.hpp"

namespace clarq {

namespace {

// Lucene's default English stop set.
const std::vector<std::string> kStopwords = {
    "a",    "an",   "and",  "are",  "as",    "at",   "be",   "but",   "by",   "for",  "if",
    "in",   "into", "is",   "it",   "no",    "not",  "of",   "on",    "or",   "such", "that",
    "the",  "their", "then", "there", "these", "they", "this", "to",   "was",  "will", "with",
};

const std::unordered_set<std::string_view>& stop_set() {
  static const std::unordered_set<std::string_view> set(kStopwords.begin(), kStopwords.end());
  return set;
}

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

constexpr int kMaxStemPasses = 8;

}  // namespace

const std::vector<std::string>& Analyzer::stopwords() { return kStopwords; }

bool Analyzer::is_stopword(std::string_view term) { return stop_set().contains(term); }

std::string Analyzer::stem(std::string_view token) {
  std::string cur(token);
  for (int i = 0; i < kMaxStemPasses; ++i) {
    auto next = detail::porter_stem(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

std::vector<std::string> Analyzer::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i == n) break;
    std::string tok;
    while (i < n) {
      const auto c = static_cast<unsigned char>(text[i]);
      if (is_word_byte(c)) {
        tok += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
        ++i;
      } else if (c == '\'' && i + 1 < n && is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
        tok += '\'';
        ++i;
      } else {
        break;
      }
    }
    if (tok.size() >= 2 && tok.ends_with("'s")) tok.resize(tok.size() - 2);
    std::erase(tok, '\'');
    if (!tok.empty()) tokens.push_back(std::move(tok));
  }
  return tokens;
}

std::vector<std::string> Analyzer::analyze(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(text)) {
    if (is_stopword(tok)) continue;
    auto stemmed = stem(tok);
    if (stemmed.empty() || is_stopword(stemmed)) continue;
    out.push_back(std::move(stemmed));
  }
  return out;
}

}  // namespace clarq
