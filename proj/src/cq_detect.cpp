#include "clarq/cq_detect.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_map>

#include "clarq/errors.hpp"

namespace clarq {

std::string_view to_string(RuleFired r) { return r == RuleFired::kQwordSpan ? "QWORD_SPAN" : "CLAUSE_TYPE"; }

const std::vector<std::string>& default_question_words() {
  static const std::vector<std::string> words = {"what", "how", "where", "when", "which", "who",
                                                 "why",  "did", "do",    "does", "is",    "are",
                                                 "can",  "could", "would", "will", "have", "has"};
  return words;
}

const std::vector<std::string>& InversionHeuristic::auxiliaries() {
  static const std::vector<std::string> aux = {"am",   "is",    "are",   "was",    "were",  "do",    "does",
                                               "did",  "have",  "has",   "had",    "can",   "could", "will",
                                               "would", "shall", "should", "may",  "might", "must"};
  return aux;
}

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Word {
  std::size_t start;
  std::string text;  // lowercase
};

std::vector<Word> words_in(std::string_view text, std::size_t base) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_letter(text[i])) ++i;
    const std::size_t b = i;
    while (i < text.size() && is_letter(text[i])) ++i;
    if (i > b) out.push_back({base + b, lower(text.substr(b, i - b))});
  }
  return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

bool InversionHeuristic::is_question_clause(std::string_view sentence) const {
  const auto words = words_in(sentence, 0);
  if (words.empty()) return false;
  const auto& aux = auxiliaries();
  return std::find(aux.begin(), aux.end(), words.front().text) != aux.end();
}

bool classify_clause(std::string_view sentence) { return InversionHeuristic{}.is_question_clause(sentence); }

std::vector<TextRange> split_sentences(std::string_view text) {
  std::vector<TextRange> out;
  auto push = [&](std::size_t b, std::size_t e) {
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    if (e > b) out.push_back({b, e});
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() && is_space(text[i + 1])) {
      push(start, i + 1);
      start = i + 1;
    }
  }
  push(start, text.size());
  return out;
}

std::vector<QuestionSpan> extract_question_spans(const Utterance& u, std::span<const std::string> question_words,
                                                 const ClauseClassifier* classifier) {
  if (u.speaker != Speaker::kAgent) throw ArgumentError("question extraction applies to agent utterances only");
  const InversionHeuristic fallback;
  const ClauseClassifier& clause = classifier ? *classifier : fallback;
  const std::string_view text = u.text;

  std::vector<QuestionSpan> spans;
  for (const auto& s : split_sentences(text)) {
    std::size_t seg = s.start;
    for (std::size_t q = s.start; q < s.end; ++q) {
      if (text[q] != '?') continue;
      const auto words = words_in(text.substr(seg, q - seg), seg);
      std::size_t begin = std::string_view::npos;
      for (const auto& w : words) {
        if (std::find(question_words.begin(), question_words.end(), w.text) != question_words.end()) {
          begin = w.start;
          break;
        }
      }
      QuestionSpan span;
      span.utterance_index = u.index;
      span.char_end = q + 1;
      if (begin != std::string_view::npos) {
        span.char_start = begin;
        span.rule_fired = RuleFired::kQwordSpan;
      } else {
        std::size_t b = seg;
        while (b < q && is_space(text[b])) ++b;
        span.char_start = b;
        span.rule_fired = RuleFired::kClauseType;
        if (!clause.is_question_clause(text.substr(b, q + 1 - b))) {
          seg = q + 1;
          continue;
        }
      }
      span.text = std::string(text.substr(span.char_start, span.char_end - span.char_start));
      spans.push_back(std::move(span));
      seg = q + 1;
    }
  }
  return spans;
}

bool retrieval_filter(const QuestionSpan& question, const Utterance* answer, const Conversation& conv,
                      const FieldIndex& doc_index, const DocumentStore& docs, const FilterConfig& cfg) {
  if (conv.linked_document_ids.empty())
    throw ArgumentError("conversation " + conv.id + " links no documents; the retrieval filter needs one");
  std::vector<Utterance> query;
  query.push_back({0, Speaker::kAgent, question.text, false, {}});
  if (answer) query.push_back({1, Speaker::kUser, answer->text, false, {}});

  auto opts = cfg.retrieval;
  opts.passage.top_passages = std::max(opts.passage.top_passages, cfg.top_n);
  std::vector<Passage> passages;
  try {
    passages = retrieve_passages(query, doc_index, docs, opts);
  } catch (const EmptyQueryError&) {
    return false;
  }
  const std::size_t n = std::min(cfg.top_n, passages.size());
  for (std::size_t i = 0; i < n; ++i)
    if (conv.linked_document_ids.contains(passages[i].doc_id)) return true;
  return false;
}

DetectResult detect(const Conversation& conv, const FieldIndex& doc_index, const DocumentStore& docs,
                    const DetectConfig& cfg) {
  DetectResult result;
  result.conversation = conv;
  auto& utts = result.conversation.utterances;
  for (auto& u : utts) {
    u.is_clarification = false;
    u.cq_ids.clear();
  }
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (utts[i].speaker != Speaker::kAgent) continue;
    const Utterance* answer = (i + 1 < utts.size() && utts[i + 1].speaker == Speaker::kUser) ? &utts[i + 1] : nullptr;
    for (auto& span : extract_question_spans(utts[i], cfg.question_words, cfg.classifier)) {
      const bool keep =
          !cfg.apply_retrieval_filter || retrieval_filter(span, answer, conv, doc_index, docs, cfg.filter);
      if (keep) {
        utts[i].is_clarification = true;
        result.accepted.push_back(std::move(span));
      } else {
        result.rejected.push_back(std::move(span));
      }
    }
  }
  return result;
}

MiningReport mine_clarifications(DatasetBundle& bundle, const FieldIndex& doc_index, const DocumentStore& docs,
                                 const DetectConfig& cfg) {
  MiningReport report;
  std::vector<ClarificationQuestion> pool;
  std::unordered_map<std::string, std::string> by_text;
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    for (auto& conv : bundle.split(s)) {
      auto res = detect(conv, doc_index, docs, cfg);
      ++report.conversations;
      report.rejected_spans += res.rejected.size();
      for (const auto& span : res.accepted) {
        ++report.accepted_spans;
        auto [it, inserted] = by_text.emplace(span.text, "");
        if (inserted) {
          char id[32];
          std::snprintf(id, sizeof(id), "cq-%06zu", pool.size() + 1);
          it->second = id;
          pool.push_back({id, span.text, conv.id});
        }
        auto& ids = res.conversation.utterances[span.utterance_index].cq_ids;
        if (std::find(ids.begin(), ids.end(), it->second) == ids.end()) ids.push_back(it->second);
      }
      for (const auto& u : res.conversation.utterances) report.flagged_utterances += u.is_clarification ? 1 : 0;
      conv = std::move(res.conversation);
    }
  }
  bundle.clarification_pool = std::move(pool);
  return report;
}

}  // namespace clarq
