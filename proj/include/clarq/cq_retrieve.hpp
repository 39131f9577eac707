#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/field_index.hpp"
#include "clarq/passage.hpp"

namespace clarq {

/// The clarification-question pool and a single-field index over its texts.
class CqIndex {
 public:
  CqIndex() = default;

  /// Throws ArgumentError for an empty pool or duplicate ids.
  static CqIndex build(std::vector<ClarificationQuestion> pool);

  const FieldIndex& index() const { return index_; }
  const std::vector<ClarificationQuestion>& pool() const { return pool_; }
  std::size_t size() const { return pool_.size(); }
  const ClarificationQuestion* find(std::string_view id) const;

  /// Writes pool.tsv and cq.idx into `dir`.
  void save(const std::filesystem::path& dir) const;
  static CqIndex load(const std::filesystem::path& dir);

 private:
  FieldIndex index_;
  std::vector<ClarificationQuestion> pool_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

struct PassageRef {
  std::string doc_id;
  std::size_t char_start = 0;

  bool operator==(const PassageRef&) const = default;
};

struct Candidate {
  std::string cq_id;
  std::optional<PassageRef> source_passage;
  // Final score of the source passage; orders merge ties.
  double source_passage_score = 0.0;
  double retrieval_score = 0.0;
  std::optional<double> context_score;
  std::optional<double> passage_score;
  std::optional<double> fused_score;
};

inline constexpr std::size_t kDefaultCandidateCap = 1000;

/// Builds the unweighted disjunctive query from every context utterance plus
/// the passage text (when given) and retrieves up to `cap` questions,
/// descending score, ties by cq id.
std::vector<Candidate> candidates_for_passage(std::span<const Utterance> context, const Passage* passage,
                                              const CqIndex& cq_index, std::size_t cap = kDefaultCandidateCap,
                                              const Bm25Params& bm25 = {});

/// One candidate per cq id: the retrieval score is the max across lists and
/// the source passage is the one with the highest passage score (ties by
/// doc id, then offset). Output is ordered by retrieval score, ties by cq id.
std::vector<Candidate> merge_candidates(std::span<const std::vector<Candidate>> per_passage);

/// Orders by retrieval score descending, ties by cq id.
void sort_by_retrieval(std::vector<Candidate>& candidates);

}  // namespace clarq
