#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/field_index.hpp"
#include "clarq/passage.hpp"
#include "clarq/rerank.hpp"

namespace clarq {

struct AnswerPolarity {
  std::vector<std::string> positive{"yes", "yeah", "yep", "sure", "correct", "right"};
  std::vector<std::string> negative{"no", "not", "nope", "never", "don't", "doesn't", "didn't"};
};

/// True iff the text holds at least one positive word and no negative word
/// (case-insensitive, whole tokens; apostrophes are part of tokens).
bool is_positive_answer(std::string_view text, const AnswerPolarity& lists = {});

struct NegSamplingConfig {
  std::size_t negatives_per_positive = 4;
  std::uint64_t rng_seed = 13;
};

struct Triplet {
  std::string context_text;
  std::optional<std::string> passage_text;
  std::string positive_cq_text;
  std::string negative_cq_text;
  std::string conversation_id;
  std::string seed_tag;
  // Provenance, kept for checks and debugging.
  std::string positive_cq_id;
  std::string negative_cq_id;
  std::optional<std::string> passage_doc_id;
};

struct GenerationReport {
  struct Skip {
    std::string conversation_id;
    std::size_t utterance_index = 0;
    std::string reason;
  };
  std::vector<Skip> skipped;
};

/// (C^j, cq+, cq-) for every clarification utterance c_j of the training
/// conversations. Negatives are drawn without replacement from the pool minus
/// every clarification of the conversation's group, from a random stream
/// seeded by (rng_seed, conversation id). Throws GenerationError when the
/// pool cannot supply enough negatives.
std::vector<Triplet> gen_context_triplets(std::span<const Conversation> train,
                                          std::span<const ClarificationQuestion> pool,
                                          const NegSamplingConfig& cfg = {}, const ContextBuilderConfig& context = {});

struct PassageTripletConfig {
  NegSamplingConfig sampling;
  std::size_t passages_per_positive = 2;
  PassageRetrievalOptions retrieval;
  ContextBuilderConfig context;
  AnswerPolarity polarity;
};

/// (C^j SEP P, cq+, cq-) triplets. Only clarifications whose answer c_{j+1} is
/// positive are used. Passages are retrieved with the context through the
/// answer (C^{j+2}) restricted to the conversation's linked documents; the
/// scorer context stays C^j. Each of the top `passages_per_positive`
/// passages is paired with each negative.
std::vector<Triplet> gen_passage_triplets(std::span<const Conversation> train, const FieldIndex& doc_index,
                                          const DocumentStore& docs, std::span<const ClarificationQuestion> pool,
                                          const PassageTripletConfig& cfg = {}, GenerationReport* report = nullptr);

/// One JSON object per line: {"context", "passage"?, "positive", "negative",
/// "conversation_id", "seed_tag", "positive_id", "negative_id", "passage_doc_id"?}.
std::string triplet_to_json(const Triplet& t);
Triplet triplet_from_json(std::string_view line);
void write_triplets(std::span<const Triplet> triplets, const std::filesystem::path& path);
std::vector<Triplet> read_triplets(const std::filesystem::path& path);

}  // namespace clarq
