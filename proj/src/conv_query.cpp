#include "clarq/conv_query.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "clarq/analyzer.hpp"
#include "clarq/errors.hpp"

namespace clarq {

void QueryWeightingConfig::validate() const {
  if (!(mu > 0.0)) throw ArgumentError("mu must be > 0");
  if (fp_iterations < 1) throw ArgumentError("fp_iterations must be >= 1");
  if (!(fp_convergence_eps >= 0.0)) throw ArgumentError("fp_convergence_eps must be >= 0");
}

std::vector<std::vector<std::string>> utterance_terms(std::span<const Utterance> context) {
  std::vector<std::vector<std::string>> out;
  out.reserve(context.size());
  for (const auto& u : context) {
    auto terms = analyze(u.text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    out.push_back(std::move(terms));
  }
  return out;
}

double lm_association(const FieldIndex& index, std::string_view term, std::string_view given, double mu) {
  const auto with_given = index.postings(given);
  if (with_given.empty()) return 0.0;
  const auto with_term = index.postings(term);
  const double pc = index.collection_probability(term);

  // Sum over d in D_given of (tf(term,d) + mu pc) / (len_d + mu), splitting the
  // tf part into a merge over the two sorted posting lists.
  double smooth = 0.0;
  for (const auto& p : with_given) smooth += 1.0 / (index.doc_length(p.doc) + mu);
  double overlap = 0.0;
  auto a = with_given.begin();
  auto b = with_term.begin();
  while (a != with_given.end() && b != with_term.end()) {
    if (a->doc < b->doc) {
      ++a;
    } else if (b->doc < a->doc) {
      ++b;
    } else {
      overlap += b->tf / (index.doc_length(a->doc) + mu);
      ++a;
      ++b;
    }
  }
  return (overlap + mu * pc * smooth) / static_cast<double>(with_given.size());
}

TermWeights fixed_point_weights(std::span<const Utterance> context, const FieldIndex& index,
                                const QueryWeightingConfig& cfg) {
  cfg.validate();
  if (context.empty()) throw ArgumentError("context must contain at least one utterance");
  std::set<std::string> vocab;
  for (auto& terms : utterance_terms(context)) vocab.insert(terms.begin(), terms.end());
  if (vocab.empty()) throw EmptyQueryError("context analyzes to no query terms");

  const std::vector<std::string> terms(vocab.begin(), vocab.end());
  const std::size_t n = terms.size();
  std::vector<double> idf(n);
  for (std::size_t i = 0; i < n; ++i) idf[i] = index.idf(terms[i]);

  auto normalize = [](std::vector<double>& w) {
    const double mx = *std::max_element(w.begin(), w.end());
    if (mx > 0.0)
      for (auto& x : w) x /= mx;
  };

  std::vector<double> w = idf;
  normalize(w);

  if (cfg.fp_iterations > 1 && n > 1) {
    std::vector<double> assoc(n * n, 0.0);  // assoc[t * n + s]
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t s = 0; s < n; ++s)
        if (s != t) assoc[t * n + s] = lm_association(index, terms[t], terms[s], cfg.mu);

    std::vector<double> next(n);
    for (int it = 1; it < cfg.fp_iterations; ++it) {
      for (std::size_t t = 0; t < n; ++t) {
        double reinforce = 0.0;
        for (std::size_t s = 0; s < n; ++s)
          if (s != t) reinforce += w[s] * assoc[t * n + s];
        next[t] = idf[t] * (1.0 + reinforce);
      }
      normalize(next);
      double delta = 0.0;
      for (std::size_t t = 0; t < n; ++t) delta = std::max(delta, std::abs(next[t] - w[t]));
      w.swap(next);
      if (delta < cfg.fp_convergence_eps) break;
    }
  }

  TermWeights out;
  for (std::size_t i = 0; i < n; ++i) out.emplace(terms[i], w[i]);
  return out;
}

std::vector<WeightedTerm> utterance_bias(std::span<const Utterance> context, const TermWeights& fp_weights) {
  const auto per_utterance = utterance_terms(context);
  std::vector<double> scores(per_utterance.size(), 0.0);
  for (std::size_t i = 0; i < per_utterance.size(); ++i)
    for (const auto& t : per_utterance[i])
      if (auto it = fp_weights.find(t); it != fp_weights.end()) scores[i] += it->second;
  const double best = scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());

  std::map<std::string, double> bias;
  for (std::size_t i = 0; i < per_utterance.size(); ++i) {
    const double ratio = best > 0.0 ? scores[i] / best : 1.0;
    for (const auto& t : per_utterance[i]) {
      if (!fp_weights.contains(t)) continue;
      auto [it, inserted] = bias.emplace(t, ratio);
      if (!inserted) it->second = std::max(it->second, ratio);
    }
  }

  std::vector<WeightedTerm> out;
  out.reserve(bias.size());
  for (const auto& [t, b] : bias) {
    const double fp = fp_weights.at(t);
    out.push_back({t, fp, b, fp * b});
  }
  return out;
}

std::vector<WeightedTerm> weigh_context(std::span<const Utterance> context, const FieldIndex& index,
                                        const QueryWeightingConfig& cfg) {
  return utterance_bias(context, fixed_point_weights(context, index, cfg));
}

void min_max_normalize(std::vector<ScoredDoc>& docs) {
  if (docs.empty()) return;
  auto [lo, hi] = std::minmax_element(docs.begin(), docs.end(),
                                      [](const ScoredDoc& a, const ScoredDoc& b) { return a.score < b.score; });
  const double mn = lo->score;
  const double mx = hi->score;
  for (auto& d : docs) d.score = mx > mn ? (d.score - mn) / (mx - mn) : 1.0;
}

std::vector<ScoredDoc> retrieve_documents(std::span<const Utterance> context, const FieldIndex& index, std::size_t k,
                                          const QueryWeightingConfig& cfg, const Bm25Params& bm25,
                                          const std::unordered_set<std::string>* allowed) {
  if (k == 0) throw ArgumentError("k must be >= 1");
  std::vector<QueryTerm> query;
  for (auto& w : weigh_context(context, index, cfg)) query.push_back({std::move(w.term), w.final_weight});
  auto docs = index.retrieve_topk(query, k, bm25, allowed);
  min_max_normalize(docs);
  return docs;
}

}  // namespace clarq
