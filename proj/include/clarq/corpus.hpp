#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clarq {

enum class Speaker { kUser, kAgent };

std::string_view to_string(Speaker s);
Speaker speaker_from_string(std::string_view s);

struct Utterance {
  std::size_t index = 0;
  Speaker speaker = Speaker::kUser;
  std::string text;
  bool is_clarification = false;
  // Pool ids of the clarification question(s) this utterance carries. Empty
  // unless is_clarification.
  std::vector<std::string> cq_ids;
};

struct Conversation {
  std::string id;
  // Conversations sharing a group are evaluated as one prediction point with
  // the union of their clarifications as the relevant set (open-domain topics).
  std::string group_id;
  std::vector<Utterance> utterances;
  std::set<std::string> linked_document_ids;

  std::size_t size() const { return utterances.size(); }
};

struct Document {
  std::string id;
  std::string text;
  std::string anchor;
  std::string anchor_and_text;
};

struct ClarificationQuestion {
  std::string id;
  std::string text;
  std::optional<std::string> origin_conversation_id;
};

enum class Split { kTrain, kDev, kTest };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

inline constexpr char kAnchorSeparator = '\n';

struct DatasetBundle {
  std::vector<Document> documents;
  std::vector<Conversation> train;
  std::vector<Conversation> dev;
  std::vector<Conversation> test;
  std::vector<ClarificationQuestion> clarification_pool;

  std::vector<Conversation>& split(Split s);
  const std::vector<Conversation>& split(Split s) const;

  const ClarificationQuestion* find_question(std::string_view id) const;
  const Document* find_document(std::string_view id) const;
};

/// Read-only id -> document lookup.
class DocumentStore {
 public:
  DocumentStore() = default;
  explicit DocumentStore(std::vector<Document> docs);

  const Document* find(std::string_view id) const;
  const Document& at(std::string_view id) const;
  const std::vector<Document>& documents() const { return docs_; }
  std::size_t size() const { return docs_.size(); }

 private:
  std::vector<Document> docs_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

/// Conversations dropped while loading, with the reason for each.
struct SkipReport {
  struct Entry {
    std::size_t line = 0;
    std::string conversation_id;
    std::string reason;
  };
  std::vector<Entry> entries;

  std::size_t size() const { return entries.size(); }
};

/// Checks every structural invariant of conversations, documents and pool.
/// Throws ValidationError naming all offending ids.
void validate(const DatasetBundle& bundle);

/// Rebuilds anchor/anchor_and_text for every document from the train split.
void build_anchors(DatasetBundle& bundle);

/// Reads `id TAB text` records. Text uses backslash escapes for tab,
/// newline and backslash.
std::vector<Document> load_documents(const std::filesystem::path& path);
void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path);

/// Reads `id TAB text` clarification pool records (question bank).
std::vector<ClarificationQuestion> load_pool(const std::filesystem::path& path);
void save_pool(const std::vector<ClarificationQuestion>& pool, const std::filesystem::path& path);

/// Open-domain directory layout:
///   documents.tsv                 id TAB text
///   train.tsv, dev.tsv, test.tsv  topic_id TAB initial_request TAB question_id TAB question TAB answer
///   question_bank.tsv (optional)  question_id TAB question
///   links.tsv (optional)          topic_id TAB doc_id
/// Missing split files are treated as empty.
DatasetBundle load_open_domain(const std::filesystem::path& dir);

/// Line-delimited JSON records:
///   {"id": str, "split": "train"|"dev"|"test" (optional, default train),
///    "turns": [{"speaker": "user"|"agent", "text": str}, ...],
///    "doc_id": str | [str, ...]}
/// Records whose final turn is not an agent turn or that lack a document
/// link are dropped and reported. Clarification flags are never set here.
DatasetBundle load_support_logs(const std::filesystem::path& logs,
                                const std::optional<std::filesystem::path>& documents = std::nullopt,
                                SkipReport* skipped = nullptr);

/// Loads whichever shape `path` is: a directory is open-domain, a file is a
/// support log.
DatasetBundle load_dataset(const std::filesystem::path& path,
                           const std::optional<std::filesystem::path>& documents = std::nullopt);

/// Full-fidelity JSON serialization of a bundle.
std::string bundle_to_json(const DatasetBundle& bundle);
DatasetBundle bundle_from_json(std::string_view json);

/// Serializes a conversation in the support-log record shape, including
/// clarification flags and cq ids when present.
std::string conversation_to_json(const Conversation& c, Split split = Split::kTrain);
Conversation conversation_from_json(std::string_view json);

/// The first `j` utterances of `c`. Requires 1 <= j <= c.size().
std::span<const Utterance> context_prefix(const Conversation& c, std::size_t j);

/// Trims ASCII whitespace.
std::string_view trim(std::string_view s);

}  // namespace clarq
