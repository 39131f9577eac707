#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "clarq/conv_query.hpp"
#include "clarq/corpus.hpp"
#include "clarq/field_index.hpp"

namespace clarq {

struct PassageScoringConfig {
  std::size_t window_chars = 512;
  std::size_t overlap_chars = 256;
  double lambda = 0.5;
  double discount_factor = 0.85;
  std::size_t top_passages = 10;

  std::size_t stride() const { return window_chars - overlap_chars; }
  void validate() const;
};

/// A character window over a document's text. Offsets are byte offsets into
/// Document::text, end exclusive.
struct Passage {
  std::string doc_id;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;
  double init_score = 0.0;             // raw coverage cascade score
  double init_score_normalized = 0.0;  // min-max over the query's candidates
  double doc_score = 0.0;              // normalized document retrieval score
  double final_score = 0.0;
};

/// Analyzed bag of terms.
struct TermBag {
  std::map<std::string, std::uint32_t, std::less<>> tf;
  std::uint32_t length = 0;

  static TermBag of(std::string_view text);
  std::uint32_t count(std::string_view term) const;
};

/// Windows start at multiples of the stride and the last window ends at the
/// end of the text. Empty text yields no windows.
std::vector<Passage> extract_windows(const Document& doc, const PassageScoringConfig& cfg = {});

/// factor^exponent. Factors with a short decimal form are raised as exact
/// decimal fractions so that e.g. 0.85^2 is exactly 0.7225.
double discount_weight(double factor, std::size_t exponent);

/// weight(i) = factor^(n - i) for i = 1..n.
std::vector<double> utterance_weights(std::size_t n, double factor);

/// One coverage scorer: sum over shared terms of idf(t) * scale(t).
double coverage_bm25(const TermBag& passage, const TermBag& utterance, const FieldIndex& index,
                     const Bm25Params& bm25 = {});
double coverage_min_tf(const TermBag& passage, const TermBag& utterance, const FieldIndex& index);

/// Product of the BM25-scaled and min-tf-scaled coverage scores.
double coverage_score(const TermBag& passage, const TermBag& utterance, const FieldIndex& index,
                      const Bm25Params& bm25 = {});
double coverage_score(const Passage& p, const Utterance& u, const FieldIndex& index, const Bm25Params& bm25 = {});

/// sum_{i=1..n} discount^(n-i) * coverage_score(p, u_i).
double initial_passage_score(const Passage& p, std::span<const Utterance> context, const FieldIndex& index,
                             const PassageScoringConfig& cfg = {}, const Bm25Params& bm25 = {});

struct PassageRetrievalOptions {
  PassageScoringConfig passage;
  QueryWeightingConfig weighting;
  Bm25Params bm25;
  std::size_t k_docs = 10;
  // Restrict document retrieval to these ids when set.
  const std::unordered_set<std::string>* allowed_docs = nullptr;
};

/// Retrieves top documents for the context, windows them, scores every window
/// and returns the best `top_passages` ordered by final score, ties by
/// (doc_id, char_start). Passages come from Document::text.
std::vector<Passage> retrieve_passages(std::span<const Utterance> context, const FieldIndex& doc_index,
                                       const DocumentStore& docs, const PassageRetrievalOptions& opts = {});

}  // namespace clarq
