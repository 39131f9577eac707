#include "clarq/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <json.hpp>

#include "clarq/errors.hpp"

namespace clarq {

using nlohmann::json;

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void add(std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
  void add(std::uint64_t v) {
    add(std::to_string(v));
    add(std::string_view("\x1f", 1));
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

}  // namespace

std::string_view to_string(PipelineMode m) {
  switch (m) {
    case PipelineMode::kIrBase: return "irbase";
    case PipelineMode::kContext: return "context";
    case PipelineMode::kPassage: return "passage";
    case PipelineMode::kFusion: return "fusion";
  }
  return "fusion";
}

PipelineMode pipeline_mode_from_string(std::string_view s) {
  if (s == "irbase") return PipelineMode::kIrBase;
  if (s == "context") return PipelineMode::kContext;
  if (s == "passage") return PipelineMode::kPassage;
  if (s == "fusion") return PipelineMode::kFusion;
  throw ArgumentError("unknown mode '" + std::string(s) + "' (expected irbase, context, passage or fusion)");
}

void PipelineConfig::validate() const {
  retrieval.passage.validate();
  retrieval.weighting.validate();
  retrieval.bm25.validate();
  if (retrieval.k_docs == 0) throw ArgumentError("k_docs must be >= 1");
  if (candidate_cap == 0) throw ArgumentError("candidate_cap must be >= 1");
  if (context.max_chars < 2) throw ArgumentError("context max_chars must be >= 2");
  if (scoring.batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  if (scoring.max_concurrent_batches == 0) throw ArgumentError("max_concurrent_batches must be >= 1");
  if (scorer.kind != "lexical" && scorer.kind != "http")
    throw ArgumentError("scorer kind must be lexical or http, got '" + scorer.kind + "'");
  if (scorer.http.retries < 0) throw ArgumentError("scorer retries must be >= 0");
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["fusion"] = to_string(c.fusion);
  j["k_docs"] = c.retrieval.k_docs;
  j["top_passages"] = c.retrieval.passage.top_passages;
  j["window_chars"] = c.retrieval.passage.window_chars;
  j["overlap_chars"] = c.retrieval.passage.overlap_chars;
  j["lambda"] = c.retrieval.passage.lambda;
  j["discount_factor"] = c.retrieval.passage.discount_factor;
  j["mu"] = c.retrieval.weighting.mu;
  j["fp_iterations"] = c.retrieval.weighting.fp_iterations;
  j["fp_convergence_eps"] = c.retrieval.weighting.fp_convergence_eps;
  j["bm25_k1"] = c.retrieval.bm25.k1;
  j["bm25_b"] = c.retrieval.bm25.b;
  j["candidate_cap"] = c.candidate_cap;
  j["context_max_chars"] = c.context.max_chars;
  j["separator"] = c.context.separator_token;
  j["batch_size"] = c.scoring.batch_size;
  j["max_concurrent_batches"] = c.scoring.max_concurrent_batches;
  j["scorer"] = c.scorer.kind;
  j["scorer_url"] = c.scorer.http.base_url;
  j["scorer_retries"] = c.scorer.http.retries;
  j["scorer_connect_timeout_ms"] = c.scorer.http.connect_timeout.count();
  j["scorer_read_timeout_ms"] = c.scorer.http.read_timeout.count();
  return j.dump();
}

PipelineConfig config_from_json(std::string_view text) {
  PipelineConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError("config", 0, e.what());
  }
  if (!j.is_object()) throw ParseError("config", 0, "expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "mode") c.mode = pipeline_mode_from_string(v.get<std::string>());
      else if (key == "fusion") c.fusion = fusion_mode_from_string(v.get<std::string>());
      else if (key == "k_docs") c.retrieval.k_docs = v.get<std::size_t>();
      else if (key == "top_passages") c.retrieval.passage.top_passages = v.get<std::size_t>();
      else if (key == "window_chars") c.retrieval.passage.window_chars = v.get<std::size_t>();
      else if (key == "overlap_chars") c.retrieval.passage.overlap_chars = v.get<std::size_t>();
      else if (key == "lambda") c.retrieval.passage.lambda = v.get<double>();
      else if (key == "discount_factor") c.retrieval.passage.discount_factor = v.get<double>();
      else if (key == "mu") c.retrieval.weighting.mu = v.get<double>();
      else if (key == "fp_iterations") c.retrieval.weighting.fp_iterations = v.get<int>();
      else if (key == "fp_convergence_eps") c.retrieval.weighting.fp_convergence_eps = v.get<double>();
      else if (key == "bm25_k1") c.retrieval.bm25.k1 = v.get<double>();
      else if (key == "bm25_b") c.retrieval.bm25.b = v.get<double>();
      else if (key == "candidate_cap") c.candidate_cap = v.get<std::size_t>();
      else if (key == "context_max_chars") c.context.max_chars = v.get<std::size_t>();
      else if (key == "separator") c.context.separator_token = c.scoring.separator_token = v.get<std::string>();
      else if (key == "batch_size") c.scoring.batch_size = v.get<std::size_t>();
      else if (key == "max_concurrent_batches") c.scoring.max_concurrent_batches = v.get<std::size_t>();
      else if (key == "scorer") c.scorer.kind = v.get<std::string>();
      else if (key == "scorer_url") c.scorer.http.base_url = v.get<std::string>();
      else if (key == "scorer_retries") c.scorer.http.retries = v.get<int>();
      else if (key == "scorer_connect_timeout_ms") c.scorer.http.connect_timeout = std::chrono::milliseconds(v.get<long>());
      else if (key == "scorer_read_timeout_ms") c.scorer.http.read_timeout = std::chrono::milliseconds(v.get<long>());
      else throw ArgumentError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError("config", 0, e.what());
  }
  c.validate();
  return c;
}

std::string config_hash(const PipelineConfig& cfg) {
  Fnv f;
  f.add(config_to_json(cfg));
  return f.hex();
}

std::string index_fingerprint(const FieldIndex& index) {
  Fnv f;
  f.add(to_string(index.field()));
  f.add(static_cast<std::uint64_t>(index.doc_count()));
  for (std::uint32_t i = 0; i < index.doc_count(); ++i) {
    f.add(index.doc_id(i));
    f.add(static_cast<std::uint64_t>(index.doc_length(i)));
  }
  for (auto term : index.sorted_terms()) {
    f.add(term);
    for (const auto& p : index.postings(term)) {
      f.add(static_cast<std::uint64_t>(p.doc));
      f.add(static_cast<std::uint64_t>(p.tf));
    }
  }
  return f.hex();
}

struct Engine::State {
  FieldIndex doc_index;
  DocumentStore docs;
  CqIndex cq;
  PipelineConfig cfg;
  std::shared_ptr<const Scorer> context_scorer;
  std::shared_ptr<const Scorer> passage_scorer;

  std::shared_ptr<const Scorer> default_scorer() const {
    if (cfg.scorer.kind == "http") return std::make_shared<HttpScorer>(cfg.scorer.http);
    return std::make_shared<LexicalScorer>(cq.index(), cfg.context.separator_token);
  }
};

Engine::Engine(FieldIndex doc_index, DocumentStore docs, CqIndex cq_index, PipelineConfig cfg)
    : state_(std::make_unique<State>()) {
  cfg.validate();
  if (cq_index.size() == 0) throw ArgumentError("engine needs a non-empty clarification index");
  state_->doc_index = std::move(doc_index);
  state_->docs = std::move(docs);
  state_->cq = std::move(cq_index);
  state_->cfg = std::move(cfg);
  state_->context_scorer = state_->default_scorer();
  state_->passage_scorer = state_->default_scorer();
}

Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;
Engine::~Engine() = default;

const PipelineConfig& Engine::config() const { return state_->cfg; }
const FieldIndex& Engine::doc_index() const { return state_->doc_index; }
const DocumentStore& Engine::documents() const { return state_->docs; }
const CqIndex& Engine::cq_index() const { return state_->cq; }

void Engine::set_scorer(ModelId model, std::shared_ptr<const Scorer> scorer) {
  if (!scorer) scorer = state_->default_scorer();
  (model == ModelId::kContextCq ? state_->context_scorer : state_->passage_scorer) = std::move(scorer);
}

std::vector<Candidate> Engine::run_pipeline(std::span<const Utterance> context) const {
  return run_pipeline(context, state_->cfg.mode);
}

std::vector<Candidate> Engine::run_pipeline(std::span<const Utterance> context, PipelineMode mode) const {
  const auto& s = *state_;
  if (context.empty()) throw ArgumentError("pipeline needs at least one utterance");

  auto opts = s.cfg.retrieval;
  opts.allowed_docs = nullptr;
  std::vector<Passage> passages = stage("retrieve_passages", [&] {
    try {
      return retrieve_passages(context, s.doc_index, s.docs, opts);
    } catch (const EmptyQueryError&) {
      return std::vector<Passage>{};
    }
  });

  std::vector<Candidate> candidates = stage("candidates_for_passage", [&] {
    std::vector<std::vector<Candidate>> lists;
    if (passages.empty()) {
      lists.push_back(candidates_for_passage(context, nullptr, s.cq, s.cfg.candidate_cap, opts.bm25));
    } else {
      for (const auto& p : passages)
        lists.push_back(candidates_for_passage(context, &p, s.cq, s.cfg.candidate_cap, opts.bm25));
    }
    return merge_candidates(lists);
  });

  if (mode == PipelineMode::kIrBase) {
    sort_by_retrieval(candidates);
    for (auto& c : candidates) c.fused_score = c.retrieval_score;
    return candidates;
  }

  const std::string ctx = stage("build_context", [&] { return build_context(context, s.cfg.context); });
  const PassageTexts texts = passage_texts(passages);

  if (mode == PipelineMode::kContext || mode == PipelineMode::kFusion)
    stage("score_candidates", [&] {
      score_candidates(ctx, candidates, s.cq, texts, *s.context_scorer, ModelId::kContextCq, s.cfg.scoring);
    });
  if (mode == PipelineMode::kPassage || mode == PipelineMode::kFusion)
    stage("score_candidates", [&] {
      score_candidates(ctx, candidates, s.cq, texts, *s.passage_scorer, ModelId::kContextPassageCq, s.cfg.scoring);
    });

  if (mode == PipelineMode::kFusion)
    return stage("fuse_combsum", [&] { return fuse_combsum(std::move(candidates), s.cfg.fusion); });

  const bool by_context = mode == PipelineMode::kContext;
  for (auto& c : candidates) c.fused_score = by_context ? *c.context_score : *c.passage_score;
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (*a.fused_score != *b.fused_score) return *a.fused_score > *b.fused_score;
    return a.cq_id < b.cq_id;
  });
  return candidates;
}

double recall_at_k(std::span<const std::string> ranked, std::span<const std::string> relevant, std::size_t k) {
  if (k == 0) throw ArgumentError("recall@k needs k >= 1");
  const std::set<std::string> rel(relevant.begin(), relevant.end());
  if (rel.empty()) throw ArgumentError("recall@k is undefined for an empty relevant set");
  std::set<std::string> hit;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
    if (rel.contains(ranked[i])) hit.insert(ranked[i]);
  return static_cast<double>(hit.size()) / static_cast<double>(rel.size());
}

std::string EvalReport::to_json() const {
  json j;
  j["split"] = clarq::to_string(split);
  j["mode"] = clarq::to_string(mode);
  j["ks"] = ks;
  j["config_hash"] = config_hash;
  j["index_versions"] = index_versions;
  auto& macro = j["macro_recall"] = json::object();
  for (const auto& [k, v] : macro_recall) macro[std::to_string(k)] = v;
  j["evaluated"] = results.size();
  j["skipped"] = skipped.size();
  j["skipped_groups"] = skipped;
  auto& convs = j["conversations"] = json::array();
  for (const auto& r : results) {
    json c;
    c["group_id"] = r.group_id;
    c["conversation_id"] = r.conversation_id;
    c["clarification_index"] = r.clarification_index;
    c["ranked"] = r.ranked;
    c["relevant"] = r.relevant;
    auto& rec = c["recall"] = json::object();
    for (const auto& [k, v] : r.recall) rec[std::to_string(k)] = v;
    convs.push_back(std::move(c));
  }
  return j.dump(2);
}

EvalReport evaluate(const Engine& engine, std::span<const Conversation> conversations, Split split,
                    const EvalOptions& opts) {
  if (opts.ks.empty()) throw ArgumentError("evaluation needs at least one k");
  for (auto k : opts.ks)
    if (k == 0) throw ArgumentError("evaluation k values must be >= 1");

  EvalReport report;
  report.split = split;
  report.mode = engine.config().mode;
  report.ks = opts.ks;
  std::sort(report.ks.begin(), report.ks.end());
  report.ks.erase(std::unique(report.ks.begin(), report.ks.end()), report.ks.end());
  report.config_hash = config_hash(engine.config());
  report.index_versions["documents"] = index_fingerprint(engine.doc_index());
  report.index_versions["clarifications"] = index_fingerprint(engine.cq_index().index());
  const std::size_t max_k = report.ks.back();

  std::map<std::string, std::vector<const Conversation*>> groups;
  for (const auto& c : conversations) groups[c.group_id.empty() ? c.id : c.group_id].push_back(&c);

  struct Point {
    const Conversation* conv;
    std::size_t j;
  };
  auto first_clarification = [](const Conversation& c) -> std::optional<std::size_t> {
    for (std::size_t j = 1; j < c.utterances.size(); ++j)
      if (c.utterances[j].is_clarification && !c.utterances[j].cq_ids.empty()) return j;
    return std::nullopt;
  };

  std::vector<Point> points;
  for (auto& [gid, members] : groups) {
    std::sort(members.begin(), members.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::set<std::string> relevant;
    std::optional<Point> point;
    for (const auto* c : members) {
      auto j = first_clarification(*c);
      if (!j) continue;
      if (!point) point = Point{c, *j};
      relevant.insert(c->utterances[*j].cq_ids.begin(), c->utterances[*j].cq_ids.end());
    }
    if (!point) {
      report.skipped.push_back(gid);
      continue;
    }
    ConversationResult r;
    r.group_id = gid;
    r.conversation_id = point->conv->id;
    r.clarification_index = point->j;
    r.relevant.assign(relevant.begin(), relevant.end());
    report.results.push_back(std::move(r));
    points.push_back(*point);
  }

  std::size_t threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, points.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        const auto ranked = engine.run_pipeline(context_prefix(*points[i].conv, points[i].j));
        auto& r = report.results[i];
        for (std::size_t n = 0; n < std::min(max_k, ranked.size()); ++n) r.ranked.push_back(ranked[n].cq_id);
        for (auto k : report.ks) r.recall[k] = recall_at_k(r.ranked, r.relevant, k);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = points.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  // Ordered reduction: results are already in group-id order.
  for (auto k : report.ks) {
    double sum = 0.0;
    for (const auto& r : report.results) sum += r.recall.at(k);
    report.macro_recall[k] = report.results.empty() ? 0.0 : sum / static_cast<double>(report.results.size());
  }
  return report;
}

}  // namespace clarq
