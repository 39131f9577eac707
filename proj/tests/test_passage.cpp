#include <doctest.h>

#include <json.hpp>
#include <random>

#include "clarq/errors.hpp"
#include "clarq/passage.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace clarq;

namespace {

std::vector<std::string> fixture_context() {
  const auto j = nlohmann::json::parse(testing::read_file(testing::data_dir() / "passage_fixture" / "context.json"));
  std::vector<std::string> out;
  for (const auto& u : j.at("utterances")) out.push_back(u.at("text").get<std::string>());
  return out;
}

std::vector<std::pair<std::string, std::string>> fixture_docs() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& d : load_documents(testing::data_dir() / "passage_fixture" / "documents.tsv"))
    out.emplace_back(d.id, d.text);
  return out;
}

// Longer documents so that every document spans several windows.
std::vector<std::pair<std::string, std::string>> long_docs(unsigned seed) {
  const std::vector<std::string> words = {"solar", "panel",  "battery", "inverter", "night", "storage", "grid",
                                          "wind",  "roof",   "cable",   "meter",    "home",  "install", "current",
                                          "price", "summer", "winter",  "charge",   "sun",   "tower"};
  std::mt19937 rng(seed);
  std::vector<std::pair<std::string, std::string>> out;
  for (int d = 0; d < 8; ++d) {
    std::string text;
    const std::size_t target = 300 + rng() % 1400;
    while (text.size() < target) text += words[rng() % words.size()] + (rng() % 9 == 0 ? ". " : " ");
    out.emplace_back("doc" + std::to_string(d), text);
  }
  return out;
}

void compare_with_oracle(const std::vector<std::pair<std::string, std::string>>& raw,
                         const std::vector<std::string>& ctx_texts, double lambda) {
  const auto docs = testing::docs(raw);
  const auto idx = FieldIndex::build(docs, Field::kText);
  const DocumentStore store(docs);
  const auto oc = oracle::Corpus::of(raw);
  PassageRetrievalOptions opts;
  opts.passage.lambda = lambda;
  const auto got = retrieve_passages(testing::dialogue(ctx_texts), idx, store, opts);
  const auto want = oracle::passages(ctx_texts, oc, 10, 10, lambda);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CAPTURE(i);
    CHECK(got[i].doc_id == want[i].doc_id);
    CHECK(got[i].char_start == want[i].start);
    CHECK(got[i].init_score == doctest::Approx(want[i].init).epsilon(1e-9));
    CHECK(got[i].init_score_normalized == doctest::Approx(want[i].init_norm).epsilon(1e-9));
    CHECK(got[i].doc_score == doctest::Approx(want[i].doc).epsilon(1e-9));
    CHECK(got[i].final_score == doctest::Approx(want[i].final_score).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("window boundaries") {
  Document d{"x", std::string(1000, 'a'), "", ""};
  const auto w = extract_windows(d);
  REQUIRE(w.size() == 3);
  CHECK(w[0].char_start == 0);
  CHECK(w[0].char_end == 512);
  CHECK(w[1].char_start == 256);
  CHECK(w[1].char_end == 768);
  CHECK(w[2].char_start == 512);
  CHECK(w[2].char_end == 1000);
  CHECK(w[2].text.size() == 488);

  for (std::size_t len : {1u, 300u, 512u}) {
    Document s{"s", std::string(len, 'b'), "", ""};
    const auto one = extract_windows(s);
    REQUIRE(one.size() == 1);
    CHECK(one[0].char_start == 0);
    CHECK(one[0].char_end == len);
  }
  CHECK(extract_windows(Document{"e", "", "", ""}).empty());
}

TEST_CASE("windows cover the text and match the oracle for many lengths") {
  for (std::size_t len = 1; len < 3000; len += 37) {
    Document d{"x", std::string(len, 'c'), "", ""};
    const auto w = extract_windows(d);
    const auto want = oracle::windows(len);
    REQUIRE(w.size() == want.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i].char_start == want[i].first);
      CHECK(w[i].char_end == want[i].second);
      CHECK(w[i].char_end - w[i].char_start <= 512);
    }
    CHECK(w.back().char_end == len);
  }
}

TEST_CASE("utterance weights are exact decimal powers") {
  const auto w = utterance_weights(3, 0.85);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 0.7225);
  CHECK(w[1] == 0.85);
  CHECK(w[2] == 1.0);
  CHECK(discount_weight(0.85, 0) == 1.0);
  CHECK(discount_weight(0.5, 3) == 0.125);
  const auto many = utterance_weights(12, 0.85);
  for (std::size_t i = 1; i < many.size(); ++i) CHECK(many[i - 1] < many[i]);
  CHECK(many.back() == 1.0);
}

TEST_CASE("coverage by hand") {
  // Every term has the same idf and the passage is exactly average length,
  // so the BM25 factor is (k1+1) tf / (tf + k1).
  const auto idx = FieldIndex::build(testing::docs({{"a", "alpha beta"}, {"b", "gamma delta"}}), Field::kText);
  const double idf = idx.idf("alpha");
  const auto p = TermBag::of("alpha beta");
  const auto u = TermBag::of("alpha alpha zulu");
  CHECK(coverage_min_tf(p, u, idx) == doctest::Approx(idf));
  CHECK(coverage_bm25(p, u, idx) == doctest::Approx(idf * 2.2 / 2.2));
  CHECK(coverage_score(p, u, idx) == doctest::Approx(idf * idf));
  CHECK(coverage_score(p, TermBag::of("nothing shared"), idx) == 0.0);
}

TEST_CASE("coverage against the oracle") {
  const auto raw = long_docs(5);
  const auto idx = FieldIndex::build(testing::docs(raw), Field::kText);
  const auto oc = oracle::Corpus::of(raw);
  for (const auto& [id, text] : raw) {
    const auto pt = text.substr(0, std::min<std::size_t>(512, text.size()));
    for (const char* u : {"solar panel on the roof", "battery battery storage at night", "wind"})
      CHECK(coverage_score(TermBag::of(pt), TermBag::of(u), idx) ==
            doctest::Approx(oracle::coverage(pt, u, oc)).epsilon(1e-12));
  }
}

TEST_CASE("initial score discounts earlier utterances") {
  const auto raw = fixture_docs();
  const auto idx = FieldIndex::build(testing::docs(raw), Field::kText);
  const auto oc = oracle::Corpus::of(raw);
  const auto ctx = fixture_context();
  for (const auto& d : extract_windows(testing::docs(raw)[1]))
    CHECK(initial_passage_score(d, testing::dialogue(ctx), idx) ==
          doctest::Approx(oracle::initial_score(d.text, ctx, oc)).epsilon(1e-12));
}

TEST_CASE("passage fixture matches the oracle") {
  compare_with_oracle(fixture_docs(), fixture_context(), 0.5);
  const auto top = retrieve_passages(testing::dialogue(fixture_context()),
                                     FieldIndex::build(testing::docs(fixture_docs()), Field::kText),
                                     DocumentStore(testing::docs(fixture_docs())));
  REQUIRE_FALSE(top.empty());
  CHECK(top.front().doc_id == "d2");
}

TEST_CASE("multi-window corpora match the oracle") {
  const std::vector<std::string> ctx = {"I want to install a solar panel on my roof",
                                        "Do you need battery storage for the night?",
                                        "yes, battery storage and an inverter"};
  for (unsigned seed : {1u, 2u, 3u})
    for (double lambda : {0.0, 0.3, 0.5, 1.0}) compare_with_oracle(long_docs(seed), ctx, lambda);
}

TEST_CASE("final scores stay in the unit interval and are ordered") {
  const auto raw = long_docs(9);
  const auto docs = testing::docs(raw);
  const auto idx = FieldIndex::build(docs, Field::kText);
  PassageRetrievalOptions opts;
  opts.passage.top_passages = 100;
  const DocumentStore store(docs);
  const auto ps = retrieve_passages(testing::dialogue({"solar roof install", "battery?", "winter charge"}), idx,
                                    store, opts);
  REQUIRE(ps.size() > 10);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(ps[i].final_score >= 0.0);
    CHECK(ps[i].final_score <= 1.0);
    CHECK(ps[i].init_score_normalized >= 0.0);
    CHECK(ps[i].init_score_normalized <= 1.0);
    if (i > 0) {
      CHECK(ps[i - 1].final_score >= ps[i].final_score);
      if (ps[i - 1].final_score == ps[i].final_score)
        CHECK(std::tie(ps[i - 1].doc_id, ps[i - 1].char_start) < std::tie(ps[i].doc_id, ps[i].char_start));
    }
    const auto& text = store.at(ps[i].doc_id).text;
    CHECK(ps[i].text == text.substr(ps[i].char_start, ps[i].char_end - ps[i].char_start));
  }
}

TEST_CASE("lambda one reproduces the document ranking") {
  const auto raw = long_docs(4);
  const auto docs = testing::docs(raw);
  const auto idx = FieldIndex::build(docs, Field::kText);
  const auto ctx = testing::dialogue({"solar panel install", "which inverter?", "a cheap inverter"});
  PassageRetrievalOptions opts;
  opts.passage.lambda = 1.0;
  opts.passage.top_passages = 1000;
  const auto ps = retrieve_passages(ctx, idx, DocumentStore(docs), opts);
  const auto ranked = retrieve_documents(ctx, idx, 10);
  std::vector<std::string> order;
  for (const auto& p : ps)
    if (order.empty() || order.back() != p.doc_id) order.push_back(p.doc_id);
  for (const auto& p : ps) CHECK(p.final_score == p.doc_score);
  std::vector<std::string> expected;
  for (const auto& d : ranked) expected.push_back(d.doc_id);
  CHECK(order == expected);
}

TEST_CASE("no matching documents gives no passages") {
  const auto docs = testing::docs(fixture_docs());
  const auto idx = FieldIndex::build(docs, Field::kText);
  CHECK(retrieve_passages(testing::dialogue({"quantum chromodynamics"}), idx, DocumentStore(docs)).empty());
}

TEST_CASE("passage config validation") {
  PassageScoringConfig cfg;
  cfg.overlap_chars = 512;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.lambda = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.discount_factor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("coverage edge cases") {
  const auto idx = FieldIndex::build(testing::docs({{"a", "alpha beta gamma"}, {"b", "delta"}}), Field::kText);
  CHECK(coverage_score(TermBag::of("alpha beta"), TermBag::of("delta"), idx) == 0.0);
  const auto same = TermBag::of("alpha beta");
  const double a = idx.idf("alpha"), b = idx.idf("beta");
  // Passage length 2 against an average of 2: each bm25 factor is 1.
  CHECK(coverage_score(same, same, idx) == doctest::Approx((a + b) * (a + b)).epsilon(1e-9));
  CHECK(coverage_min_tf(same, TermBag::of("alpha alpha beta"), idx) == coverage_min_tf(same, same, idx));
  CHECK(utterance_weights(1, 0.85) == std::vector<double>{1.0});
}

TEST_CASE("single document with a single passage scores one") {
  const auto docs = testing::docs({{"only", "solar panels on the roof"}});
  const auto idx = FieldIndex::build(docs, Field::kText);
  const auto ps = retrieve_passages(testing::dialogue({"solar roof"}), idx, DocumentStore(docs));
  REQUIRE(ps.size() == 1);
  CHECK(ps[0].final_score == 1.0);
}

TEST_CASE("planted passage with every context term ranks first") {
  std::string filler;
  for (int i = 0; i < 40; ++i) filler += "meadow river stone ";
  const std::string planted = "the inverter stores solar charge in the battery overnight";
  const auto docs = testing::docs({{"a", filler + "solar " + filler},
                                   {"b", filler + planted + " " + filler},
                                   {"c", "battery " + filler + "inverter"}});
  const auto idx = FieldIndex::build(docs, Field::kText);
  const auto ps = retrieve_passages(testing::dialogue({"solar battery", "an inverter?", "charge overnight"}), idx,
                                    DocumentStore(docs));
  REQUIRE_FALSE(ps.empty());
  CHECK(ps[0].doc_id == "b");
  CHECK(ps[0].text.find(planted) != std::string::npos);
}
