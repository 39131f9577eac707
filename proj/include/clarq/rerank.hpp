#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/cq_retrieve.hpp"
#include "clarq/field_index.hpp"

namespace clarq {

enum class ModelId { kContextCq, kContextPassageCq };

std::string_view to_string(ModelId m);
ModelId model_id_from_string(std::string_view s);

inline constexpr std::string_view kSeparatorToken = "[SEP]";

struct ContextBuilderConfig {
  std::size_t max_chars = 512;
  std::string separator_token{kSeparatorToken};
};

/// The longest suffix of whole utterances whose space-joined length is below
/// `max_chars`. A final utterance that alone reaches the limit is cut to
/// max_chars - 1 bytes (backing off to a UTF-8 boundary).
std::string build_context(std::span<const Utterance> context, const ContextBuilderConfig& cfg = {});

/// Scorer input for the passage-conditioned model: context SEP passage.
std::string join_context_passage(std::string_view context, std::string_view passage,
                                 std::string_view separator = kSeparatorToken);

/// Idf-weighted overlap: sum of idf over distinct query terms present in the
/// candidate, divided by the sum over all distinct query terms. 0 when the
/// query has no terms.
double lexical_score(std::string_view query, std::string_view candidate, const FieldIndex& idf_source);

struct ScorePair {
  std::string query;
  std::string candidate;
};

/// A relevance model behind the `/score` protocol. Implementations must be
/// safe to call concurrently and return exactly one finite score per pair.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score(ModelId model, std::span<const ScorePair> pairs) const = 0;
};

/// In-process stand-in for both neural models. The separator token is treated
/// as whitespace.
class LexicalScorer final : public Scorer {
 public:
  explicit LexicalScorer(const FieldIndex& idf_source, std::string separator = std::string(kSeparatorToken));
  std::vector<double> score(ModelId model, std::span<const ScorePair> pairs) const override;

 private:
  const FieldIndex& idf_source_;
  std::string separator_;
};

struct HttpScorerConfig {
  std::string base_url = "http://127.0.0.1:8600";
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds read_timeout{30000};
  int retries = 2;
};

/// Client for a remote `/score` endpoint.
class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(HttpScorerConfig cfg);
  std::vector<double> score(ModelId model, std::span<const ScorePair> pairs) const override;

 private:
  HttpScorerConfig cfg_;
};

// Wire protocol. Request: {"model_id": str, "pairs": [{"query": str, "candidate": str}]}.
// Response: {"scores": [number]} with one finite score per pair, in order.
std::string encode_score_request(ModelId model, std::span<const ScorePair> pairs);
struct ScoreRequest {
  ModelId model = ModelId::kContextCq;
  std::vector<ScorePair> pairs;
};
/// Throws ProtocolError on malformed bodies or unknown model ids.
ScoreRequest decode_score_request(std::string_view body);
std::string encode_score_response(std::span<const double> scores);
/// Throws ProtocolError on malformed bodies, length mismatch or non-finite scores.
std::vector<double> decode_score_response(std::string_view body, std::size_t expected);

struct ScoringOptions {
  std::size_t batch_size = 256;
  std::size_t max_concurrent_batches = 4;
  std::string separator_token{kSeparatorToken};
};

/// Passage text by (doc_id, char_start).
using PassageTexts = std::map<std::pair<std::string, std::size_t>, std::string>;

PassageTexts passage_texts(std::span<const Passage> passages);

/// Fills context_score (kContextCq) or passage_score (kContextPassageCq) on
/// every candidate, preserving order. Candidates without a source passage are
/// scored on the context alone by the passage model. Batches may be issued
/// concurrently. Throws ProtocolError when the scorer returns a wrong count
/// or a non-finite score.
void score_candidates(std::string_view context_text, std::vector<Candidate>& candidates, const CqIndex& pool,
                      const PassageTexts& passages, const Scorer& scorer, ModelId model,
                      const ScoringOptions& opts = {});

enum class FusionMode { kMinMax, kRaw };

std::string_view to_string(FusionMode m);
FusionMode fusion_mode_from_string(std::string_view s);

/// CombSUM over the two model scores. Sets fused_score and returns candidates
/// by fused score descending, ties by cq id. Throws ContractError when a
/// score is missing.
std::vector<Candidate> fuse_combsum(std::vector<Candidate> candidates, FusionMode mode = FusionMode::kMinMax);

/// Min-max normalization with the all-equal case mapped to 1.0.
std::vector<double> min_max(std::span<const double> xs);

}  // namespace clarq
