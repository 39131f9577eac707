#include "clarq/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "clarq/errors.hpp"
#include "tsv.hpp"

namespace clarq {

using nlohmann::json;

std::string_view to_string(Speaker s) { return s == Speaker::kUser ? "user" : "agent"; }

Speaker speaker_from_string(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "user") return Speaker::kUser;
  if (lower == "agent") return Speaker::kAgent;
  throw ArgumentError("unknown speaker '" + std::string(s) + "'");
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw ArgumentError("unknown split '" + std::string(s) + "'");
}

std::vector<Conversation>& DatasetBundle::split(Split s) {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kDev: return dev;
    case Split::kTest: return test;
  }
  return train;
}

const std::vector<Conversation>& DatasetBundle::split(Split s) const {
  return const_cast<DatasetBundle*>(this)->split(s);
}

const ClarificationQuestion* DatasetBundle::find_question(std::string_view id) const {
  for (const auto& q : clarification_pool)
    if (q.id == id) return &q;
  return nullptr;
}

const Document* DatasetBundle::find_document(std::string_view id) const {
  for (const auto& d : documents)
    if (d.id == id) return &d;
  return nullptr;
}

DocumentStore::DocumentStore(std::vector<Document> docs) : docs_(std::move(docs)) {
  for (std::size_t i = 0; i < docs_.size(); ++i)
    if (!by_id_.emplace(docs_[i].id, i).second) throw ArgumentError("duplicate document id " + docs_[i].id);
}

const Document* DocumentStore::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const Document& DocumentStore::at(std::string_view id) const {
  if (const auto* d = find(id)) return *d;
  throw ArgumentError("unknown document " + std::string(id));
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > 20) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

void validate_conversation(const Conversation& c, const std::unordered_set<std::string>& docs,
                           const std::unordered_set<std::string>& pool, std::vector<std::string>& dangling_docs,
                           std::vector<std::string>& problems) {
  if (c.utterances.empty()) {
    problems.push_back(c.id + ": no utterances");
    return;
  }
  if (c.utterances.front().speaker != Speaker::kUser) problems.push_back(c.id + ": first utterance is not a user query");
  for (std::size_t i = 0; i < c.utterances.size(); ++i) {
    const auto& u = c.utterances[i];
    if (u.index != i) problems.push_back(c.id + ": utterance indices are not contiguous");
    if (trim(u.text).empty()) problems.push_back(c.id + ": empty utterance " + std::to_string(i));
    if (u.is_clarification && u.speaker != Speaker::kAgent)
      problems.push_back(c.id + ": clarification flag on a user utterance " + std::to_string(i));
    if (!u.is_clarification && !u.cq_ids.empty())
      problems.push_back(c.id + ": cq ids on an unflagged utterance " + std::to_string(i));
    for (const auto& q : u.cq_ids)
      if (!pool.contains(q)) problems.push_back(c.id + ": unknown clarification id " + q);
  }
  for (const auto& d : c.linked_document_ids)
    if (!docs.contains(d)) dangling_docs.push_back(d);
}

}  // namespace

void validate(const DatasetBundle& bundle) {
  std::unordered_set<std::string> docs;
  std::vector<std::string> problems;
  for (const auto& d : bundle.documents) {
    if (!docs.insert(d.id).second) problems.push_back("duplicate document id " + d.id);
    if (d.anchor_and_text != d.anchor + kAnchorSeparator + d.text)
      problems.push_back(d.id + ": anchor_and_text is not anchor + separator + text");
  }
  std::unordered_set<std::string> pool;
  for (const auto& q : bundle.clarification_pool) {
    if (!pool.insert(q.id).second) problems.push_back("duplicate clarification id " + q.id);
    if (trim(q.text).empty()) problems.push_back(q.id + ": empty clarification text");
  }
  std::vector<std::string> dangling;
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest})
    for (const auto& c : bundle.split(s)) validate_conversation(c, docs, pool, dangling, problems);
  if (!dangling.empty() && !bundle.documents.empty()) {
    std::sort(dangling.begin(), dangling.end());
    dangling.erase(std::unique(dangling.begin(), dangling.end()), dangling.end());
    problems.push_back("dangling document ids: " + join_ids(dangling));
  }
  if (!problems.empty()) throw ValidationError(join_ids(problems));
}

void build_anchors(DatasetBundle& bundle) {
  std::unordered_map<std::string, std::string> anchors;
  for (const auto& c : bundle.train) {
    std::string text;
    for (const auto& u : c.utterances) {
      if (!text.empty()) text += ' ';
      text += u.text;
    }
    for (const auto& d : c.linked_document_ids) {
      auto& a = anchors[d];
      if (!a.empty()) a += kAnchorSeparator;
      a += text;
    }
  }
  for (auto& d : bundle.documents) {
    auto it = anchors.find(d.id);
    d.anchor = it == anchors.end() ? std::string() : it->second;
    d.anchor_and_text = d.anchor + kAnchorSeparator + d.text;
  }
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  detail::for_each_tsv_row(path, [&](std::size_t line, std::span<const std::string> cols) {
    if (cols.size() != 2) throw ParseError(path.string(), line, "expected 2 columns (id, text)");
    if (cols[0].empty()) throw ParseError(path.string(), line, "empty document id");
    if (!seen.insert(cols[0]).second) throw ParseError(path.string(), line, "duplicate document id " + cols[0]);
    Document d;
    d.id = cols[0];
    d.text = detail::unescape(cols[1]);
    d.anchor_and_text = d.anchor + kAnchorSeparator + d.text;
    docs.push_back(std::move(d));
  });
  return docs;
}

void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& d : docs) out << d.id << '\t' << detail::escape(d.text) << '\n';
}

std::vector<ClarificationQuestion> load_pool(const std::filesystem::path& path) {
  std::vector<ClarificationQuestion> pool;
  detail::for_each_tsv_row(path, [&](std::size_t line, std::span<const std::string> cols) {
    if (line == 1 && !cols.empty() && cols[0] == "question_id") return;
    if (cols.size() != 2) throw ParseError(path.string(), line, "expected 2 columns (question_id, question)");
    const auto text = detail::unescape(cols[1]);
    if (cols[0].empty() || trim(text).empty()) throw ParseError(path.string(), line, "empty question id or text");
    pool.push_back({cols[0], text, std::nullopt});
  });
  return pool;
}

void save_pool(const std::vector<ClarificationQuestion>& pool, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& q : pool) out << q.id << '\t' << detail::escape(q.text) << '\n';
}

namespace {

// Merges pool entries by exact text; the first id seen for a text wins.
class PoolBuilder {
 public:
  explicit PoolBuilder(std::vector<ClarificationQuestion>& pool) : pool_(pool) {
    for (const auto& q : pool_) {
      by_text_.emplace(q.text, q.id);
      by_id_.emplace(q.id, q.text);
    }
  }

  // Returns the pool id the text resolves to.
  std::string add(const std::string& id, const std::string& text, const std::optional<std::string>& origin) {
    if (auto it = by_text_.find(text); it != by_text_.end()) return it->second;
    if (auto it = by_id_.find(id); it != by_id_.end())
      throw ValidationError("clarification id " + id + " used for two different texts");
    pool_.push_back({id, text, origin});
    by_text_.emplace(text, id);
    by_id_.emplace(id, text);
    return id;
  }

 private:
  std::vector<ClarificationQuestion>& pool_;
  std::unordered_map<std::string, std::string> by_text_;
  std::unordered_map<std::string, std::string> by_id_;
};

}  // namespace

DatasetBundle load_open_domain(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  DatasetBundle bundle;
  if (std::filesystem::exists(dir / "documents.tsv")) bundle.documents = load_documents(dir / "documents.tsv");

  std::unordered_map<std::string, std::set<std::string>> links;
  if (std::filesystem::exists(dir / "links.tsv")) {
    const auto path = dir / "links.tsv";
    detail::for_each_tsv_row(path, [&](std::size_t line, std::span<const std::string> cols) {
      if (cols.size() != 2) throw ParseError(path.string(), line, "expected 2 columns (topic_id, doc_id)");
      links[cols[0]].insert(cols[1]);
    });
  }

  if (std::filesystem::exists(dir / "question_bank.tsv")) bundle.clarification_pool = load_pool(dir / "question_bank.tsv");
  PoolBuilder pool(bundle.clarification_pool);

  for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
    const auto path = dir / (std::string(to_string(split)) + ".tsv");
    if (!std::filesystem::exists(path)) continue;
    auto& out = bundle.split(split);
    detail::for_each_tsv_row(path, [&](std::size_t line, std::span<const std::string> cols) {
      if (line == 1 && !cols.empty() && cols[0] == "topic_id") return;
      if (cols.size() != 5)
        throw ParseError(path.string(), line,
                         "expected 5 columns (topic_id, initial_request, question_id, question, answer), got " +
                             std::to_string(cols.size()));
      for (std::size_t i = 0; i < cols.size(); ++i)
        if (trim(cols[i]).empty()) throw ParseError(path.string(), line, "empty column " + std::to_string(i + 1));
      Conversation c;
      c.id = cols[0] + "#" + cols[2];
      c.group_id = cols[0];
      const auto question = detail::unescape(cols[3]);
      const auto cq = pool.add(cols[2], question, c.id);
      c.utterances.push_back({0, Speaker::kUser, detail::unescape(cols[1]), false, {}});
      c.utterances.push_back({1, Speaker::kAgent, question, true, {cq}});
      c.utterances.push_back({2, Speaker::kUser, detail::unescape(cols[4]), false, {}});
      if (auto it = links.find(cols[0]); it != links.end()) c.linked_document_ids = it->second;
      out.push_back(std::move(c));
    });
  }

  build_anchors(bundle);
  validate(bundle);
  return bundle;
}

namespace {

// Returns the reason a record is skipped, or empty when it is usable.
std::string parse_support_record(const json& rec, Conversation& c, Split& split) {
  c.id = rec.at("id").get<std::string>();
  c.group_id = c.id;
  split = rec.contains("split") ? split_from_string(rec.at("split").get<std::string>()) : Split::kTrain;
  const auto& turns = rec.at("turns");
  if (!turns.is_array() || turns.empty()) return "no turns";
  for (const auto& t : turns) {
    Utterance u;
    u.index = c.utterances.size();
    u.speaker = speaker_from_string(t.at("speaker").get<std::string>());
    u.text = t.at("text").get<std::string>();
    if (trim(u.text).empty()) return "empty utterance " + std::to_string(u.index);
    c.utterances.push_back(std::move(u));
  }
  if (rec.contains("doc_id") && !rec.at("doc_id").is_null()) {
    const auto& d = rec.at("doc_id");
    if (d.is_string()) {
      if (!d.get<std::string>().empty()) c.linked_document_ids.insert(d.get<std::string>());
    } else {
      for (const auto& x : d) c.linked_document_ids.insert(x.get<std::string>());
    }
  }
  if (c.utterances.front().speaker != Speaker::kUser) return "first utterance is not a user query";
  if (c.utterances.back().speaker != Speaker::kAgent) return "last utterance is not an agent utterance";
  if (c.linked_document_ids.empty()) return "missing document link";
  return {};
}

}  // namespace

DatasetBundle load_support_logs(const std::filesystem::path& logs,
                                const std::optional<std::filesystem::path>& documents, SkipReport* skipped) {
  std::ifstream in(logs, std::ios::binary);
  if (!in) throw IoError("cannot read " + logs.string());
  DatasetBundle bundle;
  if (documents) bundle.documents = load_documents(*documents);

  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(logs.string(), lineno, e.what());
    }
    Conversation c;
    Split split = Split::kTrain;
    std::string reason;
    try {
      reason = parse_support_record(rec, c, split);
    } catch (const json::exception& e) {
      throw ParseError(logs.string(), lineno, e.what());
    } catch (const ArgumentError& e) {
      throw ParseError(logs.string(), lineno, e.what());
    }
    if (!reason.empty()) {
      if (skipped) skipped->entries.push_back({lineno, c.id, reason});
      continue;
    }
    if (!ids.insert(c.id).second) throw ParseError(logs.string(), lineno, "duplicate conversation id " + c.id);
    bundle.split(split).push_back(std::move(c));
  }

  build_anchors(bundle);
  validate(bundle);
  return bundle;
}

DatasetBundle load_dataset(const std::filesystem::path& path, const std::optional<std::filesystem::path>& documents) {
  if (std::filesystem::is_directory(path)) return load_open_domain(path);
  return load_support_logs(path, documents);
}

namespace {

json conversation_json(const Conversation& c) {
  json turns = json::array();
  for (const auto& u : c.utterances) {
    json t = {{"speaker", to_string(u.speaker)}, {"text", u.text}};
    if (u.is_clarification) {
      t["is_clarification"] = true;
      t["cq_ids"] = u.cq_ids;
    }
    turns.push_back(std::move(t));
  }
  json j = {{"id", c.id}, {"turns", std::move(turns)},
            {"doc_id", std::vector<std::string>(c.linked_document_ids.begin(), c.linked_document_ids.end())}};
  if (c.group_id != c.id) j["group_id"] = c.group_id;
  return j;
}

Conversation conversation_from(const json& j) {
  Conversation c;
  c.id = j.at("id").get<std::string>();
  c.group_id = j.value("group_id", c.id);
  for (const auto& t : j.at("turns")) {
    Utterance u;
    u.index = c.utterances.size();
    u.speaker = speaker_from_string(t.at("speaker").get<std::string>());
    u.text = t.at("text").get<std::string>();
    u.is_clarification = t.value("is_clarification", false);
    if (t.contains("cq_ids")) u.cq_ids = t.at("cq_ids").get<std::vector<std::string>>();
    c.utterances.push_back(std::move(u));
  }
  if (j.contains("doc_id")) {
    const auto& d = j.at("doc_id");
    if (d.is_string())
      c.linked_document_ids.insert(d.get<std::string>());
    else if (d.is_array())
      for (const auto& x : d) c.linked_document_ids.insert(x.get<std::string>());
  }
  return c;
}

}  // namespace

std::string conversation_to_json(const Conversation& c, Split split) {
  auto j = conversation_json(c);
  j["split"] = to_string(split);
  return j.dump();
}

Conversation conversation_from_json(std::string_view text) {
  try {
    return conversation_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError("conversation", 0, e.what());
  }
}

std::string bundle_to_json(const DatasetBundle& bundle) {
  json j;
  j["documents"] = json::array();
  for (const auto& d : bundle.documents)
    j["documents"].push_back({{"id", d.id}, {"text", d.text}, {"anchor", d.anchor}});
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    auto& arr = j[std::string(to_string(s))] = json::array();
    for (const auto& c : bundle.split(s)) arr.push_back(conversation_json(c));
  }
  j["pool"] = json::array();
  for (const auto& q : bundle.clarification_pool) {
    json e = {{"id", q.id}, {"text", q.text}};
    if (q.origin_conversation_id) e["origin"] = *q.origin_conversation_id;
    j["pool"].push_back(std::move(e));
  }
  return j.dump();
}

DatasetBundle bundle_from_json(std::string_view text) {
  DatasetBundle bundle;
  try {
    const auto j = json::parse(text);
    for (const auto& d : j.at("documents")) {
      Document doc{d.at("id").get<std::string>(), d.at("text").get<std::string>(), d.value("anchor", ""), {}};
      doc.anchor_and_text = doc.anchor + kAnchorSeparator + doc.text;
      bundle.documents.push_back(std::move(doc));
    }
    for (Split s : {Split::kTrain, Split::kDev, Split::kTest})
      for (const auto& c : j.at(std::string(to_string(s)))) bundle.split(s).push_back(conversation_from(c));
    for (const auto& q : j.at("pool")) {
      ClarificationQuestion cq{q.at("id").get<std::string>(), q.at("text").get<std::string>(), std::nullopt};
      if (q.contains("origin")) cq.origin_conversation_id = q.at("origin").get<std::string>();
      bundle.clarification_pool.push_back(std::move(cq));
    }
  } catch (const json::exception& e) {
    throw ParseError("bundle", 0, e.what());
  }
  validate(bundle);
  return bundle;
}

std::span<const Utterance> context_prefix(const Conversation& c, std::size_t j) {
  if (j < 1 || j > c.utterances.size())
    throw ArgumentError("context prefix length " + std::to_string(j) + " out of range [1, " +
                        std::to_string(c.utterances.size()) + "]");
  return std::span<const Utterance>(c.utterances.data(), j);
}

}  // namespace clarq
