#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/cq_retrieve.hpp"
#include "clarq/field_index.hpp"
#include "clarq/passage.hpp"
#include "clarq/rerank.hpp"

namespace clarq {

/// Ranking used by the pipeline: IR-Base (retrieval score only), one of the
/// two scorers alone, or CombSUM of both.
enum class PipelineMode { kIrBase, kContext, kPassage, kFusion };

std::string_view to_string(PipelineMode m);
PipelineMode pipeline_mode_from_string(std::string_view s);

struct ScorerSettings {
  std::string kind = "lexical";  // "lexical" or "http"
  HttpScorerConfig http;
};

struct PipelineConfig {
  PipelineMode mode = PipelineMode::kFusion;
  FusionMode fusion = FusionMode::kMinMax;
  PassageRetrievalOptions retrieval;  // allowed_docs is ignored
  std::size_t candidate_cap = kDefaultCandidateCap;
  ContextBuilderConfig context;
  ScoringOptions scoring;
  ScorerSettings scorer;

  void validate() const;
};

/// Canonical JSON (sorted keys, every field present). Parsing rejects unknown
/// keys; absent keys keep their defaults.
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(std::string_view json);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

/// FNV-1a 64 digest of an index's documents, lengths and postings.
std::string index_fingerprint(const FieldIndex& index);

/// Owns the document index, the document store, the clarification index and
/// the scorers. Const member functions are safe to call concurrently.
class Engine {
 public:
  Engine(FieldIndex doc_index, DocumentStore docs, CqIndex cq_index, PipelineConfig cfg = {});
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;
  ~Engine();

  const PipelineConfig& config() const;
  const FieldIndex& doc_index() const;
  const DocumentStore& documents() const;
  const CqIndex& cq_index() const;

  /// Replaces the scorer for one model; null restores the lexical scorer.
  void set_scorer(ModelId model, std::shared_ptr<const Scorer> scorer);

  /// retrieve_passages -> candidates_for_passage per passage -> merge ->
  /// build_context -> score_candidates (per mode) -> rank. When no passage is
  /// found the candidates come from the context alone. Errors are rethrown as
  /// StageError naming the failing stage.
  std::vector<Candidate> run_pipeline(std::span<const Utterance> context) const;
  std::vector<Candidate> run_pipeline(std::span<const Utterance> context, PipelineMode mode) const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// |top-k ∩ relevant| / |relevant|. Throws ArgumentError when k = 0 or the
/// relevant set is empty.
double recall_at_k(std::span<const std::string> ranked, std::span<const std::string> relevant, std::size_t k);

struct EvalOptions {
  std::vector<std::size_t> ks{5, 10, 20, 30};
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct ConversationResult {
  std::string group_id;
  std::string conversation_id;
  std::size_t clarification_index = 0;  // prediction point j; context is C^j
  std::vector<std::string> ranked;      // truncated to max k
  std::vector<std::string> relevant;
  std::map<std::size_t, double> recall;
};

struct EvalReport {
  Split split = Split::kDev;
  PipelineMode mode = PipelineMode::kFusion;
  std::vector<std::size_t> ks;
  std::vector<ConversationResult> results;  // ordered by group id
  std::map<std::size_t, double> macro_recall;
  std::vector<std::string> skipped;  // groups without a relevant set
  std::string config_hash;
  std::map<std::string, std::string> index_versions;

  std::string to_json() const;
};

/// One prediction per group (conversation group), at the first clarification
/// utterance of the group's first clarified conversation. The relevant set is
/// the union of the cq_ids at each member conversation's first clarification.
/// Groups with no clarification are skipped and listed.
EvalReport evaluate(const Engine& engine, std::span<const Conversation> conversations, Split split,
                    const EvalOptions& opts = {});

}  // namespace clarq
