#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "clarq/corpus.hpp"

namespace clarq {

enum class Field { kText, kAnchor, kAnchorAndText };

std::string_view to_string(Field f);
Field field_from_string(std::string_view s);
const std::string& field_content(const Document& d, Field f);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;
};

struct QueryTerm {
  std::string term;
  double weight = 1.0;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;
};

/// One unit of indexable text.
struct IndexEntry {
  std::string id;
  std::string text;
};

/// Inverted index over one field, with the collection statistics needed for
/// BM25 and Dirichlet-smoothed language models. Immutable after build.
class FieldIndex {
 public:
  static constexpr int kFormatVersion = 1;

  FieldIndex() = default;

  /// Throws ArgumentError on duplicate or malformed ids.
  static FieldIndex build(std::span<const Document> docs, Field field);
  static FieldIndex build(std::span<const IndexEntry> entries, Field field = Field::kText);

  Field field() const { return field_; }
  std::size_t doc_count() const { return doc_ids_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  std::uint64_t total_terms() const { return total_terms_; }
  std::size_t vocabulary_size() const { return terms_.size(); }

  std::optional<std::uint32_t> ordinal(std::string_view doc_id) const;
  const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_.at(ordinal); }
  std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_lengths_.at(ordinal); }
  std::uint32_t doc_length(std::string_view doc_id) const;
  std::span<const std::uint32_t> doc_lengths() const { return doc_lengths_; }

  /// Postings sorted by ordinal. Empty for unseen terms.
  std::span<const Posting> postings(std::string_view term) const;
  std::uint32_t df(std::string_view term) const;
  std::uint64_t collection_count(std::string_view term) const;
  std::uint32_t tf(std::string_view term, std::uint32_t ordinal) const;

  /// ln(1 + (N - df + 0.5) / (df + 0.5)); positive for every df <= N.
  double idf(std::string_view term) const;

  /// Length-normalized tf saturation of BM25 for a unit of `length` tokens.
  double bm25_tf(double tf, double length, const Bm25Params& params = {}) const;

  double bm25_score(std::string_view doc_id, std::span<const QueryTerm> terms, const Bm25Params& params = {}) const;

  /// Descending score, ties by ascending doc id. Only documents matching at
  /// least one term appear. When `allowed` is set, other documents are skipped.
  std::vector<ScoredDoc> retrieve_topk(std::span<const QueryTerm> terms, std::size_t k,
                                       const Bm25Params& params = {},
                                       const std::unordered_set<std::string>* allowed = nullptr) const;

  /// p(t|C) = cf / total; 0 for unseen terms.
  double collection_probability(std::string_view term) const;
  /// Dirichlet-smoothed p(t|d) = (tf + mu p(t|C)) / (len + mu).
  double document_probability(std::string_view term, std::uint32_t ordinal, double mu) const;

  /// Iterates terms in lexicographic order.
  std::vector<std::string_view> sorted_terms() const;

  void save(const std::filesystem::path& file) const;
  static FieldIndex load(const std::filesystem::path& file);

 private:
  struct TermEntry {
    std::vector<Posting> postings;
    std::uint64_t cf = 0;
  };

  void finalize();

  Field field_ = Field::kText;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  std::unordered_map<std::string, std::uint32_t> ordinals_;
  std::unordered_map<std::string, TermEntry> terms_;
  std::uint64_t total_terms_ = 0;
  double avg_doc_length_ = 0.0;
};

}  // namespace clarq
