#include "clarq/train_gen.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "clarq/errors.hpp"

namespace clarq {

using nlohmann::json;

namespace {

std::vector<std::string> polarity_tokens(std::string_view text) {
  std::string norm;
  norm.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    // U+2019 right single quotation mark
    if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 && static_cast<unsigned char>(text[i + 2]) == 0x99) {
      norm += '\'';
      i += 2;
      continue;
    }
    norm += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
  }
  std::vector<std::string> out;
  std::string cur;
  for (char c : norm) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
      cur += c;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  for (auto& t : out) {
    while (!t.empty() && t.front() == '\'') t.erase(t.begin());
    while (!t.empty() && t.back() == '\'') t.pop_back();
  }
  std::erase_if(out, [](const std::string& t) { return t.empty(); });
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::mt19937_64 stream_for(std::uint64_t seed, std::string_view conversation_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fnv1a(conversation_id)),
                    static_cast<std::uint32_t>(fnv1a(conversation_id) >> 32)};
  return std::mt19937_64(seq);
}

// Clarification ids of every conversation sharing a group.
std::unordered_map<std::string, std::unordered_set<std::string>> group_clarifications(
    std::span<const Conversation> convs) {
  std::unordered_map<std::string, std::unordered_set<std::string>> out;
  for (const auto& c : convs) {
    auto& ids = out[c.group_id];
    for (const auto& u : c.utterances) ids.insert(u.cq_ids.begin(), u.cq_ids.end());
  }
  return out;
}

std::vector<std::size_t> sample_negatives(std::span<const ClarificationQuestion> pool,
                                          const std::unordered_set<std::string>& excluded, std::size_t n,
                                          std::mt19937_64& rng, const std::string& conversation_id) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!excluded.contains(pool[i].id)) eligible.push_back(i);
  if (eligible.size() < n)
    throw GenerationError("pool offers " + std::to_string(eligible.size()) + " negatives for conversation " +
                          conversation_id + ", " + std::to_string(n) + " required");
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
    std::swap(eligible[i], eligible[pick(rng)]);
  }
  eligible.resize(n);
  return eligible;
}

std::string seed_tag(std::uint64_t seed, const std::string& conv, std::size_t j, std::size_t draw) {
  return std::to_string(seed) + ":" + conv + ":" + std::to_string(j) + ":" + std::to_string(draw);
}

}  // namespace

bool is_positive_answer(std::string_view text, const AnswerPolarity& lists) {
  bool positive = false;
  for (const auto& t : polarity_tokens(text)) {
    if (std::find(lists.negative.begin(), lists.negative.end(), t) != lists.negative.end()) return false;
    if (std::find(lists.positive.begin(), lists.positive.end(), t) != lists.positive.end()) positive = true;
  }
  return positive;
}

std::vector<Triplet> gen_context_triplets(std::span<const Conversation> train,
                                          std::span<const ClarificationQuestion> pool, const NegSamplingConfig& cfg,
                                          const ContextBuilderConfig& context) {
  std::unordered_map<std::string, const ClarificationQuestion*> by_id;
  for (const auto& q : pool) by_id.emplace(q.id, &q);
  const auto groups = group_clarifications(train);

  std::vector<Triplet> out;
  for (const auto& conv : train) {
    auto rng = stream_for(cfg.rng_seed, conv.id);
    const auto& excluded = groups.at(conv.group_id);
    for (std::size_t j = 1; j < conv.utterances.size(); ++j) {
      const auto& u = conv.utterances[j];
      if (!u.is_clarification) continue;
      const auto ctx = build_context(context_prefix(conv, j), context);
      for (const auto& pos_id : u.cq_ids) {
        auto pos = by_id.find(pos_id);
        if (pos == by_id.end()) throw GenerationError("clarification " + pos_id + " missing from pool");
        const auto negs = sample_negatives(pool, excluded, cfg.negatives_per_positive, rng, conv.id);
        for (std::size_t d = 0; d < negs.size(); ++d) {
          Triplet t;
          t.context_text = ctx;
          t.positive_cq_text = pos->second->text;
          t.positive_cq_id = pos_id;
          t.negative_cq_text = pool[negs[d]].text;
          t.negative_cq_id = pool[negs[d]].id;
          t.conversation_id = conv.id;
          t.seed_tag = seed_tag(cfg.rng_seed, conv.id, j, d);
          out.push_back(std::move(t));
        }
      }
    }
  }
  return out;
}

std::vector<Triplet> gen_passage_triplets(std::span<const Conversation> train, const FieldIndex& doc_index,
                                          const DocumentStore& docs, std::span<const ClarificationQuestion> pool,
                                          const PassageTripletConfig& cfg, GenerationReport* report) {
  std::unordered_map<std::string, const ClarificationQuestion*> by_id;
  for (const auto& q : pool) by_id.emplace(q.id, &q);
  const auto groups = group_clarifications(train);
  auto skip = [&](const Conversation& c, std::size_t j, std::string reason) {
    if (report) report->skipped.push_back({c.id, j, std::move(reason)});
  };

  std::vector<Triplet> out;
  for (const auto& conv : train) {
    if (conv.linked_document_ids.empty()) {
      skip(conv, 0, "no linked documents");
      continue;
    }
    auto rng = stream_for(cfg.sampling.rng_seed, conv.id);
    const auto& excluded = groups.at(conv.group_id);
    const std::unordered_set<std::string> allowed(conv.linked_document_ids.begin(), conv.linked_document_ids.end());
    for (std::size_t j = 1; j < conv.utterances.size(); ++j) {
      const auto& u = conv.utterances[j];
      if (!u.is_clarification) continue;
      const std::size_t k = j + 1;
      if (k >= conv.utterances.size() || conv.utterances[k].speaker != Speaker::kUser) {
        skip(conv, j, "clarification has no user answer");
        continue;
      }
      if (!is_positive_answer(conv.utterances[k].text, cfg.polarity)) continue;

      auto opts = cfg.retrieval;
      opts.allowed_docs = &allowed;
      std::vector<Passage> passages;
      try {
        passages = retrieve_passages(context_prefix(conv, k + 1), doc_index, docs, opts);
      } catch (const EmptyQueryError&) {
        skip(conv, j, "retrieval context has no query terms");
        continue;
      }
      if (passages.empty()) {
        skip(conv, j, "no passage retrieved from a linked document");
        continue;
      }
      passages.resize(std::min(passages.size(), cfg.passages_per_positive));

      const auto ctx = build_context(context_prefix(conv, j), cfg.context);
      for (const auto& pos_id : u.cq_ids) {
        auto pos = by_id.find(pos_id);
        if (pos == by_id.end()) throw GenerationError("clarification " + pos_id + " missing from pool");
        const auto negs = sample_negatives(pool, excluded, cfg.sampling.negatives_per_positive, rng, conv.id);
        for (const auto& p : passages) {
          for (std::size_t d = 0; d < negs.size(); ++d) {
            Triplet t;
            t.context_text = ctx;
            t.passage_text = p.text;
            t.passage_doc_id = p.doc_id;
            t.positive_cq_text = pos->second->text;
            t.positive_cq_id = pos_id;
            t.negative_cq_text = pool[negs[d]].text;
            t.negative_cq_id = pool[negs[d]].id;
            t.conversation_id = conv.id;
            t.seed_tag = seed_tag(cfg.sampling.rng_seed, conv.id, j, d);
            out.push_back(std::move(t));
          }
        }
      }
    }
  }
  return out;
}

std::string triplet_to_json(const Triplet& t) {
  json j;
  j["context"] = t.context_text;
  if (t.passage_text) j["passage"] = *t.passage_text;
  j["positive"] = t.positive_cq_text;
  j["negative"] = t.negative_cq_text;
  j["conversation_id"] = t.conversation_id;
  j["seed_tag"] = t.seed_tag;
  j["positive_id"] = t.positive_cq_id;
  j["negative_id"] = t.negative_cq_id;
  if (t.passage_doc_id) j["passage_doc_id"] = *t.passage_doc_id;
  return j.dump();
}

Triplet triplet_from_json(std::string_view line) {
  try {
    const auto j = json::parse(line);
    Triplet t;
    t.context_text = j.at("context").get<std::string>();
    if (j.contains("passage")) t.passage_text = j.at("passage").get<std::string>();
    t.positive_cq_text = j.at("positive").get<std::string>();
    t.negative_cq_text = j.at("negative").get<std::string>();
    t.conversation_id = j.value("conversation_id", "");
    t.seed_tag = j.value("seed_tag", "");
    t.positive_cq_id = j.value("positive_id", "");
    t.negative_cq_id = j.value("negative_id", "");
    if (j.contains("passage_doc_id")) t.passage_doc_id = j.at("passage_doc_id").get<std::string>();
    return t;
  } catch (const json::exception& e) {
    throw ParseError("triplet", 0, e.what());
  }
}

void write_triplets(std::span<const Triplet> triplets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : triplets) out << triplet_to_json(t) << '\n';
}

std::vector<Triplet> read_triplets(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<Triplet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(triplet_from_json(line));
    } catch (const ParseError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

}  // namespace clarq
