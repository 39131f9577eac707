#include <doctest.h>

#include <random>

#include "clarq/analyzer.hpp"
#include "porter_stemmer.hpp"

using clarq::analyze;
using clarq::Analyzer;
using Terms = std::vector<std::string>;

TEST_CASE("analyze lowercases, stops and stems") {
  CHECK(analyze("Solar panels") == Terms{"solar", "panel"});
  CHECK(analyze("the of and").empty());
  CHECK(analyze("").empty());
  CHECK(analyze("   \t\n").empty());
  CHECK(analyze("Connecting the ROUTERS, quickly!") == Terms{"connect", "router", "quickli"});
}

TEST_CASE("tokenizer keeps word-internal apostrophes and strips possessives") {
  CHECK(Analyzer::tokenize("John's router") == Terms{"john", "router"});
  CHECK(Analyzer::tokenize("don't stop") == Terms{"dont", "stop"});
  CHECK(Analyzer::tokenize("v5.2 build-42") == Terms{"v5", "2", "build", "42"});
  CHECK(Analyzer::tokenize("'quoted'") == Terms{"quoted"});
}

TEST_CASE("stopword list is the pinned English set") {
  CHECK(Analyzer::stopwords().size() == 33);
  for (const char* w : {"a", "an", "and", "are", "the", "to", "was", "will", "with", "not", "no"})
    CHECK(Analyzer::is_stopword(w));
  CHECK_FALSE(Analyzer::is_stopword("router"));
  CHECK_FALSE(Analyzer::is_stopword("about"));
}

TEST_CASE("Porter reference vocabulary") {
  const std::vector<std::pair<const char*, const char*>> pairs = {
      {"caresses", "caress"},   {"ponies", "poni"},         {"ties", "ti"},
      {"caress", "caress"},     {"cats", "cat"},            {"feed", "feed"},
      {"agreed", "agre"},       {"plastered", "plaster"},   {"bled", "bled"},
      {"motoring", "motor"},    {"sing", "sing"},           {"conflated", "conflat"},
      {"troubled", "troubl"},   {"sized", "size"},          {"hopping", "hop"},
      {"tanned", "tan"},        {"falling", "fall"},        {"hissing", "hiss"},
      {"fizzed", "fizz"},       {"failing", "fail"},        {"filing", "file"},
      {"happy", "happi"},       {"sky", "sky"},             {"relational", "relat"},
      {"conditional", "condit"}, {"rational", "ration"},    {"valenci", "valenc"},
      {"hesitanci", "hesit"},   {"digitizer", "digit"},     {"conformabli", "conform"},
      {"radicalli", "radic"},   {"differentli", "differ"},  {"vileli", "vile"},
      {"analogousli", "analog"}, {"vietnamization", "vietnam"}, {"predication", "predic"},
      {"operator", "oper"},     {"feudalism", "feudal"},    {"decisiveness", "decis"},
      {"hopefulness", "hope"},  {"callousness", "callous"}, {"formaliti", "formal"},
      {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"}, {"triplicate", "triplic"},
      {"formative", "form"},    {"formalize", "formal"},    {"electriciti", "electr"},
      {"electrical", "electr"}, {"hopeful", "hope"},        {"goodness", "good"},
      {"revival", "reviv"},     {"allowance", "allow"},     {"inference", "infer"},
      {"airliner", "airlin"},   {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"},
      {"defensible", "defens"}, {"irritant", "irrit"},      {"replacement", "replac"},
      {"adjustment", "adjust"}, {"dependent", "depend"},    {"adoption", "adopt"},
      {"homologou", "homolog"}, {"communism", "commun"},    {"activate", "activ"},
      {"angulariti", "angular"}, {"homologous", "homolog"}, {"effective", "effect"},
      {"bowdlerize", "bowdler"}, {"probate", "probat"},     {"rate", "rate"},
      {"cease", "ceas"},        {"controll", "control"},    {"roll", "roll"},
      {"generalizations", "gener"}, {"oscillators", "oscil"},
  };
  for (const auto& [word, stem] : pairs) {
    CAPTURE(word);
    CHECK(clarq::detail::porter_stem(word) == stem);
  }
  CHECK(clarq::detail::porter_stem("is") == "is");
  CHECK(clarq::detail::porter_stem("v5") == "v5");
}

TEST_CASE("stem reaches a fixed point") {
  for (const char* w : {"generalizations", "electrically", "conditionally", "hopefulness", "agreed"}) {
    const auto s = Analyzer::stem(w);
    CHECK(Analyzer::stem(s) == s);
  }
}

TEST_CASE("analyze is idempotent on its own output") {
  const std::vector<std::string> vocab = {
      "generalizations", "Routers", "the",         "connection",  "isn't", "is",     "agreed",  "feed",
      "happiness",       "SKY",     "operational", "conditioned", "as",    "thing's", "v2",     "caf\xc3\xa9",
      "oscillators",     "being",   "ties",        "ponies",      "there", "hopeful", "relational", "was"};
  std::mt19937 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) text += vocab[rng() % vocab.size()] + (rng() % 3 == 0 ? ", " : " ");
    const auto once = analyze(text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CAPTURE(text);
    CHECK(analyze(joined) == once);
  }
}
