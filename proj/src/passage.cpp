#include "clarq/passage.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "clarq/analyzer.hpp"
#include "clarq/errors.hpp"

namespace clarq {

void PassageScoringConfig::validate() const {
  if (!(overlap_chars > 0 && overlap_chars < window_chars))
    throw ArgumentError("passage overlap must satisfy 0 < overlap < window");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("lambda must be in [0, 1]");
  if (!(discount_factor > 0.0 && discount_factor <= 1.0)) throw ArgumentError("discount factor must be in (0, 1]");
  if (top_passages == 0) throw ArgumentError("top_passages must be >= 1");
}

TermBag TermBag::of(std::string_view text) {
  TermBag bag;
  for (auto& t : analyze(text)) {
    ++bag.tf[t];
    ++bag.length;
  }
  return bag;
}

std::uint32_t TermBag::count(std::string_view term) const {
  auto it = tf.find(term);
  return it == tf.end() ? 0 : it->second;
}

std::vector<Passage> extract_windows(const Document& doc, const PassageScoringConfig& cfg) {
  cfg.validate();
  std::vector<Passage> out;
  const std::size_t len = doc.text.size();
  if (len == 0) return out;
  for (std::size_t start = 0;; start += cfg.stride()) {
    const std::size_t end = std::min(start + cfg.window_chars, len);
    Passage p;
    p.doc_id = doc.id;
    p.char_start = start;
    p.char_end = end;
    p.text = doc.text.substr(start, end - start);
    out.push_back(std::move(p));
    if (end == len) break;
  }
  return out;
}

namespace {

// Parses the shortest round-trip decimal of `x` as mantissa / 10^scale.
bool decimal_fraction(double x, std::uint64_t& mantissa, int& scale) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::fixed);
  if (ec != std::errc()) return false;
  mantissa = 0;
  scale = 0;
  bool frac = false;
  for (const char* c = buf; c != ptr; ++c) {
    if (*c == '.') {
      frac = true;
      continue;
    }
    if (*c < '0' || *c > '9') return false;
    if (mantissa > (std::numeric_limits<std::uint64_t>::max() - 9) / 10) return false;
    mantissa = mantissa * 10 + static_cast<std::uint64_t>(*c - '0');
    if (frac) ++scale;
  }
  return true;
}

}  // namespace

double discount_weight(double factor, std::size_t exponent) {
  if (exponent == 0) return 1.0;
  std::uint64_t mantissa = 0;
  int scale = 0;
  if (factor > 0.0 && decimal_fraction(factor, mantissa, scale)) {
    // Exact while numerator < 2^53 and denominator <= 10^22.
    constexpr double kExactInt = 9007199254740992.0;
    double num = 1.0;
    double den = 1.0;
    bool exact = static_cast<double>(scale) * static_cast<double>(exponent) <= 22.0;
    for (std::size_t i = 0; exact && i < exponent; ++i) {
      num *= static_cast<double>(mantissa);
      if (num >= kExactInt) exact = false;
    }
    if (exact) {
      for (std::size_t i = 0; i < exponent * static_cast<std::size_t>(scale); ++i) den *= 10.0;
      return num / den;
    }
  }
  return std::pow(factor, static_cast<double>(exponent));
}

std::vector<double> utterance_weights(std::size_t n, double factor) {
  std::vector<double> w(n);
  for (std::size_t i = 1; i <= n; ++i) w[i - 1] = discount_weight(factor, n - i);
  return w;
}

double coverage_bm25(const TermBag& passage, const TermBag& utterance, const FieldIndex& index,
                     const Bm25Params& bm25) {
  double s = 0.0;
  for (const auto& [t, tf_u] : utterance.tf) {
    const auto tf_p = passage.count(t);
    if (tf_p == 0) continue;
    s += index.idf(t) * index.bm25_tf(tf_p, passage.length, bm25);
  }
  return s;
}

double coverage_min_tf(const TermBag& passage, const TermBag& utterance, const FieldIndex& index) {
  double s = 0.0;
  for (const auto& [t, tf_u] : utterance.tf) {
    const auto tf_p = passage.count(t);
    if (tf_p == 0) continue;
    s += index.idf(t) * static_cast<double>(std::min(tf_p, tf_u));
  }
  return s;
}

double coverage_score(const TermBag& passage, const TermBag& utterance, const FieldIndex& index,
                      const Bm25Params& bm25) {
  return coverage_bm25(passage, utterance, index, bm25) * coverage_min_tf(passage, utterance, index);
}

double coverage_score(const Passage& p, const Utterance& u, const FieldIndex& index, const Bm25Params& bm25) {
  return coverage_score(TermBag::of(p.text), TermBag::of(u.text), index, bm25);
}

namespace {

double initial_score(const TermBag& passage, std::span<const TermBag> utterances, std::span<const double> weights,
                     const FieldIndex& index, const Bm25Params& bm25) {
  double s = 0.0;
  for (std::size_t i = 0; i < utterances.size(); ++i)
    s += weights[i] * coverage_score(passage, utterances[i], index, bm25);
  return s;
}

}  // namespace

double initial_passage_score(const Passage& p, std::span<const Utterance> context, const FieldIndex& index,
                             const PassageScoringConfig& cfg, const Bm25Params& bm25) {
  if (context.empty()) throw ArgumentError("context must contain at least one utterance");
  std::vector<TermBag> bags;
  for (const auto& u : context) bags.push_back(TermBag::of(u.text));
  const auto weights = utterance_weights(context.size(), cfg.discount_factor);
  return initial_score(TermBag::of(p.text), bags, weights, index, bm25);
}

std::vector<Passage> retrieve_passages(std::span<const Utterance> context, const FieldIndex& doc_index,
                                       const DocumentStore& docs, const PassageRetrievalOptions& opts) {
  opts.passage.validate();
  const auto ranked_docs =
      retrieve_documents(context, doc_index, opts.k_docs, opts.weighting, opts.bm25, opts.allowed_docs);

  std::vector<TermBag> bags;
  bags.reserve(context.size());
  for (const auto& u : context) bags.push_back(TermBag::of(u.text));
  const auto weights = utterance_weights(context.size(), opts.passage.discount_factor);

  std::vector<Passage> candidates;
  for (const auto& d : ranked_docs) {
    const auto* doc = docs.find(d.doc_id);
    if (!doc) throw ArgumentError("retrieved document " + d.doc_id + " missing from the document store");
    for (auto& p : extract_windows(*doc, opts.passage)) {
      p.doc_score = d.score;
      p.init_score = initial_score(TermBag::of(p.text), bags, weights, doc_index, opts.bm25);
      candidates.push_back(std::move(p));
    }
  }
  if (candidates.empty()) return candidates;

  auto [lo, hi] = std::minmax_element(candidates.begin(), candidates.end(),
                                      [](const Passage& a, const Passage& b) { return a.init_score < b.init_score; });
  const double mn = lo->init_score;
  const double mx = hi->init_score;
  const double lambda = opts.passage.lambda;
  for (auto& p : candidates) {
    p.init_score_normalized = mx > mn ? (p.init_score - mn) / (mx - mn) : 1.0;
    p.final_score = std::clamp(lambda * p.doc_score + (1.0 - lambda) * p.init_score_normalized, 0.0, 1.0);
  }

  auto better = [](const Passage& a, const Passage& b) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    return a.char_start < b.char_start;
  };
  const std::size_t n = std::min(opts.passage.top_passages, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(), better);
  candidates.resize(n);
  return candidates;
}

}  // namespace clarq
