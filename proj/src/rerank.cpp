#include "clarq/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

#include <json.hpp>

#include "clarq/analyzer.hpp"
#include "clarq/errors.hpp"

namespace clarq {

using nlohmann::json;

std::string_view to_string(ModelId m) {
  return m == ModelId::kContextCq ? "CONTEXT_CQ" : "CONTEXT_PASSAGE_CQ";
}

ModelId model_id_from_string(std::string_view s) {
  if (s == "CONTEXT_CQ") return ModelId::kContextCq;
  if (s == "CONTEXT_PASSAGE_CQ") return ModelId::kContextPassageCq;
  throw ArgumentError("unknown model id '" + std::string(s) + "'");
}

std::string build_context(std::span<const Utterance> context, const ContextBuilderConfig& cfg) {
  if (context.empty()) throw ArgumentError("context must contain at least one utterance");
  std::size_t first = context.size();
  std::size_t total = 0;
  while (first > 0) {
    const std::size_t add = context[first - 1].text.size() + (first == context.size() ? 0 : 1);
    if (total + add >= cfg.max_chars) break;
    total += add;
    --first;
  }
  if (first == context.size()) {
    const auto& last = context.back().text;
    std::size_t cut = cfg.max_chars > 0 ? cfg.max_chars - 1 : 0;
    cut = std::min(cut, last.size());
    while (cut > 0 && cut < last.size() && (static_cast<unsigned char>(last[cut]) & 0xC0) == 0x80) --cut;
    return last.substr(0, cut);
  }
  std::string out;
  out.reserve(total);
  for (std::size_t i = first; i < context.size(); ++i) {
    if (i != first) out += ' ';
    out += context[i].text;
  }
  return out;
}

std::string join_context_passage(std::string_view context, std::string_view passage, std::string_view separator) {
  std::string out;
  out.reserve(context.size() + separator.size() + passage.size() + 2);
  out.append(context).append(" ").append(separator).append(" ").append(passage);
  return out;
}

double lexical_score(std::string_view query, std::string_view candidate, const FieldIndex& idf_source) {
  const auto q = analyze(query);
  const std::set<std::string> qterms(q.begin(), q.end());
  if (qterms.empty()) return 0.0;
  const auto c = analyze(candidate);
  const std::set<std::string> cterms(c.begin(), c.end());
  double shared = 0.0;
  double all = 0.0;
  for (const auto& t : qterms) {
    const double w = idf_source.idf(t);
    all += w;
    if (cterms.contains(t)) shared += w;
  }
  return all > 0.0 ? shared / all : 0.0;
}

LexicalScorer::LexicalScorer(const FieldIndex& idf_source, std::string separator)
    : idf_source_(idf_source), separator_(std::move(separator)) {}

std::vector<double> LexicalScorer::score(ModelId, std::span<const ScorePair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    std::string query = p.query;
    if (!separator_.empty())
      for (auto pos = query.find(separator_); pos != std::string::npos; pos = query.find(separator_, pos))
        query.replace(pos, separator_.size(), " ");
    out.push_back(lexical_score(query, p.candidate, idf_source_));
  }
  return out;
}

std::string encode_score_request(ModelId model, std::span<const ScorePair> pairs) {
  json j;
  j["model_id"] = to_string(model);
  auto& arr = j["pairs"] = json::array();
  for (const auto& p : pairs) arr.push_back({{"query", p.query}, {"candidate", p.candidate}});
  return j.dump();
}

ScoreRequest decode_score_request(std::string_view body) {
  ScoreRequest req;
  try {
    const auto j = json::parse(body);
    req.model = model_id_from_string(j.at("model_id").get<std::string>());
    for (const auto& p : j.at("pairs"))
      req.pairs.push_back({p.at("query").get<std::string>(), p.at("candidate").get<std::string>()});
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed score request: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ProtocolError(e.what());
  }
  return req;
}

std::string encode_score_response(std::span<const double> scores) {
  for (double s : scores)
    if (!std::isfinite(s)) throw ProtocolError("refusing to send a non-finite score");
  return json{{"scores", std::vector<double>(scores.begin(), scores.end())}}.dump();
}

std::vector<double> decode_score_response(std::string_view body, std::size_t expected) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed score response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array())
    throw ProtocolError("score response lacks a 'scores' array");
  const auto& arr = j["scores"];
  if (arr.size() != expected)
    throw ProtocolError("score response has " + std::to_string(arr.size()) + " scores for " +
                        std::to_string(expected) + " pairs");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw ProtocolError("non-numeric score in response");
    const double s = v.get<double>();
    if (!std::isfinite(s)) throw ProtocolError("non-finite score in response");
    out.push_back(s);
  }
  return out;
}

PassageTexts passage_texts(std::span<const Passage> passages) {
  PassageTexts out;
  for (const auto& p : passages) out.emplace(std::make_pair(p.doc_id, p.char_start), p.text);
  return out;
}

void score_candidates(std::string_view context_text, std::vector<Candidate>& candidates, const CqIndex& pool,
                      const PassageTexts& passages, const Scorer& scorer, ModelId model,
                      const ScoringOptions& opts) {
  if (candidates.empty()) return;
  std::vector<ScorePair> pairs;
  pairs.reserve(candidates.size());
  for (const auto& c : candidates) {
    const auto* q = pool.find(c.cq_id);
    if (!q) throw ContractError("candidate " + c.cq_id + " is not in the clarification pool");
    ScorePair p;
    p.candidate = q->text;
    if (model == ModelId::kContextPassageCq && c.source_passage) {
      auto it = passages.find({c.source_passage->doc_id, c.source_passage->char_start});
      if (it == passages.end())
        throw ContractError("candidate " + c.cq_id + " references a passage that was not supplied");
      p.query = join_context_passage(context_text, it->second, opts.separator_token);
    } else {
      p.query = std::string(context_text);
    }
    pairs.push_back(std::move(p));
  }

  const std::size_t batch = std::max<std::size_t>(1, opts.batch_size);
  const std::size_t lanes = std::max<std::size_t>(1, opts.max_concurrent_batches);
  std::vector<double> scores(pairs.size());
  auto run_batch = [&](std::size_t begin) {
    const std::size_t end = std::min(begin + batch, pairs.size());
    const std::span<const ScorePair> slice(pairs.data() + begin, end - begin);
    const auto out = scorer.score(model, slice);
    if (out.size() != slice.size())
      throw ProtocolError("scorer returned " + std::to_string(out.size()) + " scores for " +
                          std::to_string(slice.size()) + " pairs");
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!std::isfinite(out[i])) throw ProtocolError("scorer returned a non-finite score");
      scores[begin + i] = out[i];
    }
  };

  std::vector<std::size_t> starts;
  for (std::size_t b = 0; b < pairs.size(); b += batch) starts.push_back(b);
  if (lanes == 1 || starts.size() == 1) {
    for (auto b : starts) run_batch(b);
  } else {
    for (std::size_t i = 0; i < starts.size(); i += lanes) {
      std::vector<std::future<void>> inflight;
      for (std::size_t j = i; j < std::min(i + lanes, starts.size()); ++j)
        inflight.push_back(std::async(std::launch::async, run_batch, starts[j]));
      for (auto& f : inflight) f.get();
    }
  }

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (model == ModelId::kContextCq)
      candidates[i].context_score = scores[i];
    else
      candidates[i].passage_score = scores[i];
  }
}

std::string_view to_string(FusionMode m) { return m == FusionMode::kMinMax ? "minmax" : "raw"; }

FusionMode fusion_mode_from_string(std::string_view s) {
  if (s == "minmax") return FusionMode::kMinMax;
  if (s == "raw") return FusionMode::kRaw;
  throw ArgumentError("unknown fusion mode '" + std::string(s) + "' (expected raw or minmax)");
}

std::vector<double> min_max(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  if (out.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double mn = *lo;
  const double mx = *hi;
  for (auto& x : out) x = mx > mn ? (x - mn) / (mx - mn) : 1.0;
  return out;
}

std::vector<Candidate> fuse_combsum(std::vector<Candidate> candidates, FusionMode mode) {
  std::vector<double> a;
  std::vector<double> b;
  a.reserve(candidates.size());
  b.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (!c.context_score || !c.passage_score)
      throw ContractError("candidate " + c.cq_id + " is missing a model score");
    a.push_back(*c.context_score);
    b.push_back(*c.passage_score);
  }
  if (mode == FusionMode::kMinMax) {
    a = min_max(a);
    b = min_max(b);
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].fused_score = a[i] + b[i];
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (*x.fused_score != *y.fused_score) return *x.fused_score > *y.fused_score;
    return x.cq_id < y.cq_id;
  });
  return candidates;
}

}  // namespace clarq
