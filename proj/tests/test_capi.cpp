#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <unistd.h>
#include <string>

#include "clarq/clarq.h"

using nlohmann::json;

namespace {

const std::filesystem::path kData = CLARQ_DATA_DIR;

std::filesystem::path scratch(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("clarq_capi_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Takes ownership of a returned string.
std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  clarq_string_free(s);
  return out;
}

struct Built {
  std::filesystem::path dir;
  std::string index, docs, cq;
};

Built build_synthetic() {
  Built b;
  b.dir = scratch("syn");
  b.index = (b.dir / "docs.idx").string();
  b.docs = (kData / "synthetic" / "documents.tsv").string();
  b.cq = (b.dir / "cq").string();
  REQUIRE(clarq_index_build(b.docs.c_str(), "text", nullptr, b.index.c_str()) == CLARQ_OK);
  REQUIRE(clarq_cq_index_build((kData / "synthetic" / "question_bank.tsv").c_str(), b.cq.c_str()) == CLARQ_OK);
  return b;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(clarq_version()) == "0.1.0");
  CHECK(std::string(clarq_status_name(CLARQ_OK)) == "ok");
  CHECK(std::string(clarq_status_name(CLARQ_E_EMPTY_QUERY)) == "empty_query");
  CHECK(std::string(clarq_status_name(CLARQ_E_INTERNAL)) == "internal");
  clarq_string_free(nullptr);
}

TEST_CASE("index build and stats") {
  const auto b = build_synthetic();
  char* out = nullptr;
  REQUIRE(clarq_index_stats(b.index.c_str(), &out) == CLARQ_OK);
  const auto j = json::parse(take(out));
  CHECK(j.at("documents") == 20);
  CHECK(j.at("field") == "text");
  CHECK(j.at("fingerprint").get<std::string>().size() == 16);
}

TEST_CASE("errors carry codes and messages") {
  char* out = nullptr;
  CHECK(clarq_index_stats("/nonexistent/file.idx", &out) == CLARQ_E_IO);
  CHECK(std::string(clarq_last_error()).find("/nonexistent/file.idx") != std::string::npos);
  CHECK(out == nullptr);
  CHECK(clarq_index_stats(nullptr, &out) == CLARQ_E_ARGUMENT);
  const auto docs = (kData / "synthetic" / "documents.tsv").string();
  CHECK(clarq_index_build(docs.c_str(), "body", nullptr, "/tmp/x.idx") == CLARQ_E_ARGUMENT);
  CHECK(clarq_index_stats((kData / "synthetic" / "documents.tsv").c_str(), &out) == CLARQ_E_PARSE);
}

TEST_CASE("weigh and passages") {
  const auto b = build_synthetic();
  char* out = nullptr;
  const char* ctx = R"([{"speaker": "USER", "text": "volcano basalt"}, {"speaker": "AGENT", "text": "magma?"}])";
  REQUIRE(clarq_weigh_context(b.index.c_str(), ctx, &out) == CLARQ_OK);
  const auto w = json::parse(take(out));
  REQUIRE(w.size() == 3);
  for (const auto& t : w) CHECK(t.at("final_weight").get<double>() <= t.at("fp_weight").get<double>());

  REQUIRE(clarq_passages(b.index.c_str(), b.docs.c_str(), ctx, 3, &out) == CLARQ_OK);
  const auto p = json::parse(take(out));
  REQUIRE(p.size() == 3);
  CHECK(p[0].at("doc_id") == "doc-00");

  CHECK(clarq_weigh_context(b.index.c_str(), R"([{"speaker": "USER", "text": "the of"}])", &out) ==
        CLARQ_E_EMPTY_QUERY);
  CHECK(clarq_weigh_context(b.index.c_str(), "[{", &out) == CLARQ_E_PARSE);
  CHECK(clarq_weigh_context(b.index.c_str(), R"({"x": []})", &out) == CLARQ_E_PARSE);
}

TEST_CASE("engine lifecycle, select and evaluate") {
  const auto b = build_synthetic();
  clarq_engine* e = nullptr;
  REQUIRE(clarq_engine_open(b.index.c_str(), b.docs.c_str(), b.cq.c_str(), nullptr, &e) == CLARQ_OK);
  REQUIRE(e != nullptr);

  char* out = nullptr;
  REQUIRE(clarq_engine_config(e, &out) == CLARQ_OK);
  CHECK(json::parse(take(out)).at("mode") == "fusion");

  const char* ctx = R"({"utterances": [{"speaker": "USER", "text": "I want to learn about cipher enigma cryptogram"}]})";
  REQUIRE(clarq_engine_select(e, ctx, 5, &out) == CLARQ_OK);
  const auto sel = json::parse(take(out));
  REQUIRE(sel.at("candidates").size() == 5);
  CHECK(sel.at("candidates")[0].at("cq_id") == "q06-0");
  CHECK(sel.at("candidates")[0].contains("context_score"));

  REQUIRE(clarq_engine_passages(e, ctx, 2, &out) == CLARQ_OK);
  CHECK(json::parse(take(out)).size() == 2);

  const size_t ks[] = {1, 5};
  REQUIRE(clarq_engine_evaluate(e, (kData / "synthetic").c_str(), "dev", ks, 2, &out) == CLARQ_OK);
  const auto rep = json::parse(take(out));
  CHECK(rep.at("macro_recall").at("1") == 1.0);
  CHECK(rep.at("evaluated") == 10);

  CHECK(clarq_engine_evaluate(e, (kData / "synthetic").c_str(), "holdout", ks, 2, &out) == CLARQ_E_ARGUMENT);
  CHECK(clarq_engine_select(e, "[]", 5, &out) == CLARQ_E_ARGUMENT);
  CHECK(clarq_engine_select(nullptr, ctx, 5, &out) == CLARQ_E_ARGUMENT);
  clarq_engine_close(e);
  clarq_engine_close(nullptr);
}

TEST_CASE("engine config is validated") {
  const auto b = build_synthetic();
  clarq_engine* e = nullptr;
  CHECK(clarq_engine_open(b.index.c_str(), b.docs.c_str(), b.cq.c_str(), R"({"lambda": 3})", &e) == CLARQ_E_ARGUMENT);
  CHECK(e == nullptr);
  CHECK(clarq_engine_open(b.index.c_str(), b.docs.c_str(), b.cq.c_str(), "{", &e) == CLARQ_E_PARSE);
  REQUIRE(clarq_engine_open(b.index.c_str(), b.docs.c_str(), b.cq.c_str(), R"({"mode": "irbase"})", &e) ==
          CLARQ_OK);
  char* out = nullptr;
  REQUIRE(clarq_engine_config(e, &out) == CLARQ_OK);
  CHECK(json::parse(take(out)).at("mode") == "irbase");
  clarq_engine_close(e);
}

TEST_CASE("mining and triplets") {
  const auto dir = scratch("mine");
  const auto fixture = kData / "support_fixture";
  const auto index = (dir / "kb.idx").string();
  REQUIRE(clarq_index_build((fixture / "documents.tsv").c_str(), "text", nullptr, index.c_str()) == CLARQ_OK);
  char* out = nullptr;
  const auto pool = (dir / "pool.tsv").string();
  const auto dataset = (dir / "dataset.json").string();
  REQUIRE(clarq_mine((fixture / "logs.jsonl").c_str(), (fixture / "documents.tsv").c_str(), index.c_str(),
                     pool.c_str(), dataset.c_str(), &out) == CLARQ_OK);
  const auto report = json::parse(take(out));
  CHECK(report.at("conversations") == 5);
  CHECK(report.at("flagged_utterances") == 5);
  CHECK(std::filesystem::exists(pool));

  const auto triplets = (dir / "t.jsonl").string();
  REQUIRE(clarq_triplets(dataset.c_str(), nullptr, nullptr, "context", 13, 3, triplets.c_str(), &out) == CLARQ_OK);
  take(out);
  std::ifstream in(triplets);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    ++lines;
    const auto t = json::parse(line);
    CHECK(t.at("positive") != t.at("negative"));
  }
  CHECK(lines == 15);
  CHECK(clarq_triplets(dataset.c_str(), nullptr, nullptr, "context", 13, 10, triplets.c_str(), &out) ==
        CLARQ_E_GENERATION);
  CHECK(clarq_triplets(dataset.c_str(), nullptr, nullptr, "passage", 13, 1, triplets.c_str(), &out) ==
        CLARQ_E_ARGUMENT);
  CHECK(clarq_triplets(dataset.c_str(), nullptr, nullptr, "pairs", 13, 1, triplets.c_str(), &out) ==
        CLARQ_E_ARGUMENT);
}
