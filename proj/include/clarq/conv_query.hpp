#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/field_index.hpp"

namespace clarq {

enum class UtteranceBiasMode { kMultiplyNormalizedMax };

struct QueryWeightingConfig {
  double mu = 2000.0;
  int fp_iterations = 10;
  double fp_convergence_eps = 1e-6;
  UtteranceBiasMode utterance_bias_mode = UtteranceBiasMode::kMultiplyNormalizedMax;

  void validate() const;
};

struct WeightedTerm {
  std::string term;
  double fp_weight = 0.0;
  double utterance_bias = 0.0;
  double final_weight = 0.0;
};

/// term -> weight, ordered by term.
using TermWeights = std::map<std::string, double>;

/// Distinct analyzed terms of each utterance, in utterance order.
std::vector<std::vector<std::string>> utterance_terms(std::span<const Utterance> context);

/// Association of `term` with the documents containing `given`: the mean
/// Dirichlet-smoothed p(term|d) over every d that contains `given`; 0 when no
/// document contains `given`.
double lm_association(const FieldIndex& index, std::string_view term, std::string_view given, double mu);

/// Fixed-point weighting of the distinct context terms.
///
///   w_0(t)     = idf(t) / max_s idf(s)
///   raw_i(t)   = idf(t) * (1 + sum_{s != t} w_{i-1}(s) * lm_association(t, s))
///   w_i(t)     = raw_i(t) / max_s raw_i(s)
///
/// `fp_iterations` counts w_0, so 1 returns normalized idf. Iteration stops
/// early once max_t |w_i(t) - w_{i-1}(t)| < fp_convergence_eps.
/// Throws EmptyQueryError when the context analyzes to no terms.
TermWeights fixed_point_weights(std::span<const Utterance> context, const FieldIndex& index,
                                const QueryWeightingConfig& cfg = {});

/// Utterance-biased reweighting: an utterance scores the sum of the fixed-point
/// weights of its distinct terms; each term takes the largest
/// score / max-score ratio among utterances containing it, and
/// final = fp * bias. Terms absent from `fp_weights` are ignored.
std::vector<WeightedTerm> utterance_bias(std::span<const Utterance> context, const TermWeights& fp_weights);

/// Both weighting stages, as BM25 query terms.
std::vector<WeightedTerm> weigh_context(std::span<const Utterance> context, const FieldIndex& index,
                                        const QueryWeightingConfig& cfg = {});

/// Min-max normalizes scores in place to [0, 1]; when all scores are equal
/// every score becomes 1.0.
void min_max_normalize(std::vector<ScoredDoc>& docs);

/// Disjunctive weighted BM25 retrieval over the whole context, scores
/// min-max normalized over the returned list.
std::vector<ScoredDoc> retrieve_documents(std::span<const Utterance> context, const FieldIndex& index, std::size_t k,
                                          const QueryWeightingConfig& cfg = {}, const Bm25Params& bm25 = {},
                                          const std::unordered_set<std::string>* allowed = nullptr);

}  // namespace clarq
