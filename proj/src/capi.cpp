#include "clarq/clarq.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clarq/conv_query.hpp"
#include "clarq/cq_detect.hpp"
#include "clarq/errors.hpp"
#include "clarq/eval.hpp"
#include "clarq/service.hpp"
#include "clarq/train_gen.hpp"

using nlohmann::json;

struct clarq_engine {
  clarq::Engine engine;
};

namespace {

thread_local std::string last_error;

clarq_status fail(clarq_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
clarq_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return CLARQ_OK;
  } catch (const clarq::Error& e) {
    return fail(static_cast<clarq_status>(static_cast<int>(e.code())), e.what());
  } catch (const json::exception& e) {
    return fail(CLARQ_E_PARSE, e.what());
  } catch (const std::exception& e) {
    return fail(CLARQ_E_INTERNAL, e.what());
  } catch (...) {
    return fail(CLARQ_E_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (!p) throw clarq::ArgumentError(std::string(name) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<clarq::Utterance> parse_context(const char* text) {
  require(text, "context_json");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw clarq::ParseError("context", 0, e.what());
  }
  const json* turns = &j;
  if (j.is_object()) {
    if (j.contains("utterances")) turns = &j.at("utterances");
    else if (j.contains("turns")) turns = &j.at("turns");
    else throw clarq::ParseError("context", 0, "expected \"utterances\" or \"turns\"");
  }
  if (!turns->is_array()) throw clarq::ParseError("context", 0, "expected an array of utterances");
  std::vector<clarq::Utterance> out;
  for (const auto& t : *turns) {
    clarq::Utterance u;
    u.index = out.size();
    u.speaker = clarq::speaker_from_string(t.at("speaker").get<std::string>());
    u.text = t.at("text").get<std::string>();
    out.push_back(std::move(u));
  }
  if (out.empty()) throw clarq::ArgumentError("context has no utterances");
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw clarq::IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

clarq::DatasetBundle load_any(const char* path, const char* docs) {
  require(path, "dataset_path");
  const std::filesystem::path p(path);
  if (p.extension() == ".json" && !std::filesystem::is_directory(p)) {
    auto b = clarq::bundle_from_json(read_file(p));
    if (b.documents.empty() && docs) b.documents = clarq::load_documents(docs);
    return b;
  }
  std::optional<std::filesystem::path> d;
  if (docs) d = docs;
  auto b = clarq::load_dataset(p, d);
  if (b.documents.empty() && docs) b.documents = clarq::load_documents(docs);
  return b;
}

json candidate_json(const clarq::Candidate& c, const clarq::CqIndex& cq) {
  const auto* q = cq.find(c.cq_id);
  json j = {{"cq_id", c.cq_id}, {"text", q ? q->text : ""}, {"retrieval_score", c.retrieval_score}};
  if (c.fused_score) j["fused_score"] = *c.fused_score;
  if (c.context_score) j["context_score"] = *c.context_score;
  if (c.passage_score) j["passage_score"] = *c.passage_score;
  if (c.source_passage)
    j["source_passage"] = {{"doc_id", c.source_passage->doc_id}, {"char_start", c.source_passage->char_start}};
  return j;
}

std::string passages_json(std::span<const clarq::Utterance> ctx, const clarq::FieldIndex& idx,
                          const clarq::DocumentStore& docs, clarq::PassageRetrievalOptions opts, std::size_t top) {
  if (top > 0) opts.passage.top_passages = top;
  json arr = json::array();
  for (const auto& p : clarq::retrieve_passages(ctx, idx, docs, opts))
    arr.push_back({{"doc_id", p.doc_id},
                   {"char_start", p.char_start},
                   {"char_end", p.char_end},
                   {"init_score", p.init_score},
                   {"init_score_normalized", p.init_score_normalized},
                   {"doc_score", p.doc_score},
                   {"final_score", p.final_score},
                   {"text", p.text}});
  return arr.dump();
}

}  // namespace

extern "C" {

const char* clarq_version(void) { return "0.1.0"; }

const char* clarq_last_error(void) { return last_error.c_str(); }

const char* clarq_status_name(clarq_status s) {
  switch (s) {
    case CLARQ_OK: return "ok";
    case CLARQ_E_ARGUMENT: return "argument";
    case CLARQ_E_IO: return "io";
    case CLARQ_E_PARSE: return "parse";
    case CLARQ_E_VALIDATION: return "validation";
    case CLARQ_E_EMPTY_QUERY: return "empty_query";
    case CLARQ_E_TRANSPORT: return "transport";
    case CLARQ_E_PROTOCOL: return "protocol";
    case CLARQ_E_CONTRACT: return "contract";
    case CLARQ_E_GENERATION: return "generation";
    case CLARQ_E_INTERNAL: return "internal";
  }
  return "unknown";
}

void clarq_string_free(char* s) { std::free(s); }

clarq_status clarq_index_build(const char* docs_path, const char* field, const char* conversations_path,
                               const char* out_path) {
  return guarded([&] {
    require(docs_path, "docs_path");
    require(out_path, "out_path");
    const auto f = clarq::field_from_string(field ? field : "text");
    clarq::DatasetBundle bundle;
    if (conversations_path) bundle = load_any(conversations_path, docs_path);
    bundle.documents = clarq::load_documents(docs_path);
    if (conversations_path) clarq::build_anchors(bundle);
    clarq::FieldIndex::build(bundle.documents, f).save(out_path);
  });
}

clarq_status clarq_index_stats(const char* index_path, char** out_json) {
  return guarded([&] {
    require(index_path, "index_path");
    require(out_json, "out_json");
    const auto idx = clarq::FieldIndex::load(index_path);
    json j = {{"field", clarq::to_string(idx.field())},
              {"documents", idx.doc_count()},
              {"avg_doc_length", idx.avg_doc_length()},
              {"total_terms", idx.total_terms()},
              {"vocabulary", idx.vocabulary_size()},
              {"fingerprint", clarq::index_fingerprint(idx)}};
    *out_json = dup(j.dump());
  });
}

clarq_status clarq_cq_index_build(const char* pool_path, const char* out_dir) {
  return guarded([&] {
    require(pool_path, "pool_path");
    require(out_dir, "out_dir");
    clarq::CqIndex::build(clarq::load_pool(pool_path)).save(out_dir);
  });
}

clarq_status clarq_weigh_context(const char* index_path, const char* context_json, char** out_json) {
  return guarded([&] {
    require(index_path, "index_path");
    require(out_json, "out_json");
    const auto ctx = parse_context(context_json);
    const auto idx = clarq::FieldIndex::load(index_path);
    json arr = json::array();
    for (const auto& w : clarq::weigh_context(ctx, idx))
      arr.push_back({{"term", w.term},
                     {"fp_weight", w.fp_weight},
                     {"utterance_bias", w.utterance_bias},
                     {"final_weight", w.final_weight}});
    *out_json = dup(arr.dump());
  });
}

clarq_status clarq_engine_open(const char* doc_index_path, const char* docs_path, const char* cq_dir,
                               const char* config_json, clarq_engine** out) {
  return guarded([&] {
    require(doc_index_path, "doc_index_path");
    require(docs_path, "docs_path");
    require(cq_dir, "cq_dir");
    require(out, "out");
    *out = nullptr;
    const auto cfg = config_json ? clarq::config_from_json(config_json) : clarq::PipelineConfig{};
    auto engine = clarq::Engine(clarq::FieldIndex::load(doc_index_path),
                                clarq::DocumentStore(clarq::load_documents(docs_path)), clarq::CqIndex::load(cq_dir),
                                cfg);
    *out = new clarq_engine{std::move(engine)};
  });
}

void clarq_engine_close(clarq_engine* engine) { delete engine; }

clarq_status clarq_engine_config(const clarq_engine* engine, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(out_json, "out_json");
    auto j = json::parse(clarq::config_to_json(engine->engine.config()));
    j["config_hash"] = clarq::config_hash(engine->engine.config());
    *out_json = dup(j.dump());
  });
}

clarq_status clarq_engine_passages(const clarq_engine* engine, const char* context_json, size_t top,
                                   char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(out_json, "out_json");
    const auto& e = engine->engine;
    *out_json = dup(passages_json(parse_context(context_json), e.doc_index(), e.documents(), e.config().retrieval, top));
  });
}

clarq_status clarq_passages(const char* index_path, const char* docs_path, const char* context_json, size_t top,
                            char** out_json) {
  return guarded([&] {
    require(index_path, "index_path");
    require(docs_path, "docs_path");
    require(out_json, "out_json");
    const auto ctx = parse_context(context_json);
    const auto idx = clarq::FieldIndex::load(index_path);
    const clarq::DocumentStore docs(clarq::load_documents(docs_path));
    *out_json = dup(passages_json(ctx, idx, docs, {}, top));
  });
}

clarq_status clarq_engine_select(const clarq_engine* engine, const char* context_json, size_t top_k,
                                 char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(out_json, "out_json");
    if (top_k == 0) throw clarq::ArgumentError("top_k must be >= 1");
    const auto ctx = parse_context(context_json);
    const auto ranked = engine->engine.run_pipeline(ctx);
    json arr = json::array();
    for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i)
      arr.push_back(candidate_json(ranked[i], engine->engine.cq_index()));
    *out_json = dup(json{{"candidates", arr}}.dump());
  });
}

clarq_status clarq_engine_evaluate(const clarq_engine* engine, const char* dataset_path, const char* split,
                                   const size_t* ks, size_t n_ks, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(out_json, "out_json");
    const auto s = clarq::split_from_string(split ? split : "dev");
    const auto bundle = load_any(dataset_path, nullptr);
    clarq::EvalOptions opts;
    if (ks) opts.ks.assign(ks, ks + n_ks);
    *out_json = dup(clarq::evaluate(engine->engine, bundle.split(s), s, opts).to_json());
  });
}

clarq_status clarq_engine_serve(const clarq_engine* engine, const char* host, int port) {
  return guarded([&] {
    require(engine, "engine");
    clarq::SelectionServer server(engine->engine);
    server.bind(host ? host : "127.0.0.1", port);
    server.listen();
  });
}

clarq_status clarq_mine(const char* logs_path, const char* docs_path, const char* doc_index_path,
                        const char* out_pool_path, const char* out_dataset_path, char** out_report_json) {
  return guarded([&] {
    require(logs_path, "logs_path");
    require(docs_path, "docs_path");
    require(doc_index_path, "doc_index_path");
    require(out_pool_path, "out_pool_path");
    clarq::SkipReport skipped;
    auto bundle = clarq::load_support_logs(logs_path, std::filesystem::path(docs_path), &skipped);
    const auto index = clarq::FieldIndex::load(doc_index_path);
    const clarq::DocumentStore docs(bundle.documents);
    const auto report = clarq::mine_clarifications(bundle, index, docs);
    clarq::save_pool(bundle.clarification_pool, out_pool_path);
    if (out_dataset_path) {
      std::ofstream out(out_dataset_path, std::ios::binary);
      if (!out) throw clarq::IoError(std::string("cannot write ") + out_dataset_path);
      out << clarq::bundle_to_json(bundle);
    }
    if (out_report_json) {
      json j = {{"conversations", report.conversations},
                {"flagged_utterances", report.flagged_utterances},
                {"accepted_spans", report.accepted_spans},
                {"rejected_spans", report.rejected_spans},
                {"pool_size", bundle.clarification_pool.size()},
                {"skipped_records", skipped.size()}};
      *out_report_json = dup(j.dump());
    }
  });
}

clarq_status clarq_triplets(const char* dataset_path, const char* docs_path, const char* doc_index_path,
                            const char* kind, uint64_t seed, size_t negatives, const char* out_path,
                            char** out_report_json) {
  return guarded([&] {
    require(out_path, "out_path");
    const std::string k = kind ? kind : "context";
    if (k != "context" && k != "passage") throw clarq::ArgumentError("triplet kind must be context or passage");
    const auto bundle = load_any(dataset_path, docs_path);
    std::vector<clarq::Triplet> triplets;
    clarq::GenerationReport report;
    if (k == "context") {
      clarq::NegSamplingConfig cfg;
      cfg.rng_seed = seed;
      cfg.negatives_per_positive = negatives;
      triplets = clarq::gen_context_triplets(bundle.train, bundle.clarification_pool, cfg);
    } else {
      require(doc_index_path, "doc_index_path");
      if (bundle.documents.empty()) throw clarq::ArgumentError("passage triplets need documents");
      const auto index = clarq::FieldIndex::load(doc_index_path);
      const clarq::DocumentStore docs(bundle.documents);
      clarq::PassageTripletConfig cfg;
      cfg.sampling.rng_seed = seed;
      cfg.sampling.negatives_per_positive = negatives;
      triplets = clarq::gen_passage_triplets(bundle.train, index, docs, bundle.clarification_pool, cfg, &report);
    }
    clarq::write_triplets(triplets, out_path);
    if (out_report_json) {
      json skips = json::array();
      for (const auto& s : report.skipped)
        skips.push_back({{"conversation_id", s.conversation_id}, {"utterance", s.utterance_index}, {"reason", s.reason}});
      *out_report_json = dup(json{{"triplets", triplets.size()}, {"skipped", skips}}.dump());
    }
  });
}

}  // extern "C"
