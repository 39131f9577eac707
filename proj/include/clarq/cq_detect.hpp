#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/field_index.hpp"
#include "clarq/passage.hpp"

namespace clarq {

enum class RuleFired { kQwordSpan, kClauseType };

std::string_view to_string(RuleFired r);

/// A question detected in an agent utterance. Offsets are byte offsets into
/// the utterance text, end exclusive; the text always ends with '?'.
struct QuestionSpan {
  std::size_t utterance_index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;
  RuleFired rule_fired = RuleFired::kQwordSpan;
};

/// Decides whether a question-marked sentence without a question word is an
/// interrogative clause (Penn Treebank SQ or SBARQ). Must be deterministic.
class ClauseClassifier {
 public:
  virtual ~ClauseClassifier() = default;
  virtual bool is_question_clause(std::string_view sentence) const = 0;
};

/// Subject-auxiliary inversion proxy: true iff the sentence starts with an
/// auxiliary or modal verb from a fixed list.
class InversionHeuristic final : public ClauseClassifier {
 public:
  static const std::vector<std::string>& auxiliaries();
  bool is_question_clause(std::string_view sentence) const override;
};

/// The default heuristic classifier.
bool classify_clause(std::string_view sentence);

const std::vector<std::string>& default_question_words();

struct TextRange {
  std::size_t start = 0;
  std::size_t end = 0;
};

/// Sentences end at '.', '!' or '?' followed by whitespace, or at the end of
/// the text. Ranges exclude surrounding whitespace.
std::vector<TextRange> split_sentences(std::string_view text);

/// For every '?' in every sentence: the text from the first question word
/// before it (QWORD_SPAN), or, when none is present, the whole sentence up to
/// the '?' if `classifier` accepts it (CLAUSE_TYPE). Requires an agent
/// utterance.
std::vector<QuestionSpan> extract_question_spans(const Utterance& u,
                                                 std::span<const std::string> question_words = default_question_words(),
                                                 const ClauseClassifier* classifier = nullptr);

struct FilterConfig {
  PassageRetrievalOptions retrieval;
  std::size_t top_n = 3;
};

/// True iff passage retrieval for (question text + answer text) ranks a
/// passage from one of the conversation's linked documents within the top
/// `top_n`. `answer` may be null. Throws ArgumentError when the conversation
/// links no documents.
bool retrieval_filter(const QuestionSpan& question, const Utterance* answer, const Conversation& conv,
                      const FieldIndex& doc_index, const DocumentStore& docs, const FilterConfig& cfg = {});

struct DetectConfig {
  std::vector<std::string> question_words = default_question_words();
  const ClauseClassifier* classifier = nullptr;  // null: InversionHeuristic
  bool apply_retrieval_filter = true;
  FilterConfig filter;
};

struct DetectResult {
  Conversation conversation;
  std::vector<QuestionSpan> accepted;
  std::vector<QuestionSpan> rejected;
};

/// Recomputes every clarification flag from the texts: an utterance is
/// flagged iff it is an agent utterance with at least one question span that
/// passes the retrieval filter. The answer to an utterance is the following
/// utterance when that is a user utterance. cq_ids are cleared.
DetectResult detect(const Conversation& conv, const FieldIndex& doc_index, const DocumentStore& docs,
                    const DetectConfig& cfg = {});

struct MiningReport {
  std::size_t conversations = 0;
  std::size_t flagged_utterances = 0;
  std::size_t accepted_spans = 0;
  std::size_t rejected_spans = 0;
};

/// Runs detect over every split, replaces the bundle's pool with the accepted
/// question texts (deduplicated, ids "cq-000001", ...) and links each flagged
/// utterance to its questions through cq_ids.
MiningReport mine_clarifications(DatasetBundle& bundle, const FieldIndex& doc_index, const DocumentStore& docs,
                                 const DetectConfig& cfg = {});

}  // namespace clarq
