#include "clarq/cq_retrieve.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "clarq/analyzer.hpp"
#include "clarq/errors.hpp"

namespace clarq {

CqIndex CqIndex::build(std::vector<ClarificationQuestion> pool) {
  if (pool.empty()) throw ArgumentError("clarification pool is empty");
  CqIndex out;
  std::vector<IndexEntry> entries;
  entries.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!out.by_id_.emplace(pool[i].id, i).second) throw ArgumentError("duplicate clarification id " + pool[i].id);
    entries.push_back({pool[i].id, pool[i].text});
  }
  out.index_ = FieldIndex::build(entries, Field::kText);
  out.pool_ = std::move(pool);
  return out;
}

const ClarificationQuestion* CqIndex::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &pool_[it->second];
}

void CqIndex::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_pool(pool_, dir / "pool.tsv");
  index_.save(dir / "cq.idx");
}

CqIndex CqIndex::load(const std::filesystem::path& dir) {
  auto pool = load_pool(dir / "pool.tsv");
  CqIndex out;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!out.by_id_.emplace(pool[i].id, i).second) throw ValidationError("duplicate clarification id " + pool[i].id);
  out.index_ = FieldIndex::load(dir / "cq.idx");
  if (out.index_.doc_count() != pool.size()) throw ValidationError("cq index and pool sizes differ in " + dir.string());
  for (std::uint32_t i = 0; i < out.index_.doc_count(); ++i)
    if (!out.by_id_.contains(out.index_.doc_id(i)))
      throw ValidationError("cq index entry " + out.index_.doc_id(i) + " missing from pool");
  out.pool_ = std::move(pool);
  return out;
}

void sort_by_retrieval(std::vector<Candidate>& candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.retrieval_score != b.retrieval_score) return a.retrieval_score > b.retrieval_score;
    return a.cq_id < b.cq_id;
  });
}

std::vector<Candidate> candidates_for_passage(std::span<const Utterance> context, const Passage* passage,
                                              const CqIndex& cq_index, std::size_t cap, const Bm25Params& bm25) {
  std::string text;
  for (const auto& u : context) {
    text += u.text;
    text += ' ';
  }
  if (passage) text += passage->text;

  std::set<std::string> terms;
  for (auto& t : analyze(text)) terms.insert(std::move(t));
  if (terms.empty() || cap == 0) return {};
  std::vector<QueryTerm> query;
  query.reserve(terms.size());
  for (const auto& t : terms) query.push_back({t, 1.0});

  std::vector<Candidate> out;
  for (auto& hit : cq_index.index().retrieve_topk(query, cap, bm25)) {
    Candidate c;
    c.cq_id = std::move(hit.doc_id);
    c.retrieval_score = hit.score;
    if (passage) {
      c.source_passage = PassageRef{passage->doc_id, passage->char_start};
      c.source_passage_score = passage->final_score;
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

bool better_source(const Candidate& a, const Candidate& b) {
  if (a.source_passage_score != b.source_passage_score) return a.source_passage_score > b.source_passage_score;
  if (!a.source_passage || !b.source_passage) return a.source_passage.has_value() && !b.source_passage.has_value();
  if (a.source_passage->doc_id != b.source_passage->doc_id) return a.source_passage->doc_id < b.source_passage->doc_id;
  return a.source_passage->char_start < b.source_passage->char_start;
}

}  // namespace

std::vector<Candidate> merge_candidates(std::span<const std::vector<Candidate>> per_passage) {
  std::unordered_map<std::string, Candidate> merged;
  for (const auto& list : per_passage) {
    for (const auto& c : list) {
      auto [it, inserted] = merged.emplace(c.cq_id, c);
      if (inserted) continue;
      auto& m = it->second;
      const double best_retrieval = std::max(m.retrieval_score, c.retrieval_score);
      if (better_source(c, m)) {
        m.source_passage = c.source_passage;
        m.source_passage_score = c.source_passage_score;
      }
      m.retrieval_score = best_retrieval;
    }
  }
  std::vector<Candidate> out;
  out.reserve(merged.size());
  for (auto& [_, c] : merged) out.push_back(std::move(c));
  sort_by_retrieval(out);
  return out;
}

}  // namespace clarq
