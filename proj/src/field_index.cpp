#include "clarq/field_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "clarq/analyzer.hpp"
#include "clarq/errors.hpp"

namespace clarq {

std::string_view to_string(Field f) {
  switch (f) {
    case Field::kText: return "text";
    case Field::kAnchor: return "anchor";
    case Field::kAnchorAndText: return "anchor_and_text";
  }
  return "text";
}

Field field_from_string(std::string_view s) {
  if (s == "text") return Field::kText;
  if (s == "anchor") return Field::kAnchor;
  if (s == "anchor_and_text") return Field::kAnchorAndText;
  throw ArgumentError("unknown field '" + std::string(s) + "' (expected text, anchor or anchor_and_text)");
}

const std::string& field_content(const Document& d, Field f) {
  switch (f) {
    case Field::kText: return d.text;
    case Field::kAnchor: return d.anchor;
    case Field::kAnchorAndText: return d.anchor_and_text;
  }
  return d.text;
}

void Bm25Params::validate() const {
  if (!(k1 >= 0.0)) throw ArgumentError("bm25 k1 must be >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ArgumentError("bm25 b must be in [0, 1]");
}

FieldIndex FieldIndex::build(std::span<const Document> docs, Field field) {
  std::vector<IndexEntry> entries;
  entries.reserve(docs.size());
  for (const auto& d : docs) entries.push_back({d.id, field_content(d, field)});
  return build(entries, field);
}

FieldIndex FieldIndex::build(std::span<const IndexEntry> entries, Field field) {
  FieldIndex idx;
  idx.field_ = field;
  idx.doc_ids_.reserve(entries.size());
  idx.doc_lengths_.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.id.empty() || e.id.find_first_of("\t\n\r") != std::string::npos)
      throw ArgumentError("invalid document id '" + e.id + "'");
    const auto ord = static_cast<std::uint32_t>(idx.doc_ids_.size());
    if (!idx.ordinals_.emplace(e.id, ord).second) throw ArgumentError("duplicate document id " + e.id);
    idx.doc_ids_.push_back(e.id);

    const auto terms = analyze(e.text);
    std::map<std::string_view, std::uint32_t> counts;
    for (const auto& t : terms) ++counts[t];
    for (const auto& [t, c] : counts) {
      auto& entry = idx.terms_[std::string(t)];
      entry.postings.push_back({ord, c});
      entry.cf += c;
    }
    idx.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
  }
  idx.finalize();
  return idx;
}

void FieldIndex::finalize() {
  total_terms_ = 0;
  for (auto len : doc_lengths_) total_terms_ += len;
  avg_doc_length_ = doc_lengths_.empty() ? 0.0 : static_cast<double>(total_terms_) / doc_lengths_.size();
}

std::optional<std::uint32_t> FieldIndex::ordinal(std::string_view doc_id) const {
  auto it = ordinals_.find(std::string(doc_id));
  if (it == ordinals_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t FieldIndex::doc_length(std::string_view doc_id) const {
  auto ord = ordinal(doc_id);
  if (!ord) throw ArgumentError("unknown document " + std::string(doc_id));
  return doc_lengths_[*ord];
}

std::span<const Posting> FieldIndex::postings(std::string_view term) const {
  auto it = terms_.find(std::string(term));
  if (it == terms_.end()) return {};
  return it->second.postings;
}

std::uint32_t FieldIndex::df(std::string_view term) const { return static_cast<std::uint32_t>(postings(term).size()); }

std::uint64_t FieldIndex::collection_count(std::string_view term) const {
  auto it = terms_.find(std::string(term));
  return it == terms_.end() ? 0 : it->second.cf;
}

std::uint32_t FieldIndex::tf(std::string_view term, std::uint32_t ord) const {
  const auto p = postings(term);
  auto it = std::lower_bound(p.begin(), p.end(), ord, [](const Posting& a, std::uint32_t o) { return a.doc < o; });
  return (it != p.end() && it->doc == ord) ? it->tf : 0;
}

double FieldIndex::idf(std::string_view term) const {
  const double n = static_cast<double>(doc_count());
  const double d = static_cast<double>(df(term));
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double FieldIndex::bm25_tf(double tf, double length, const Bm25Params& params) const {
  if (tf <= 0.0) return 0.0;
  const double norm = avg_doc_length_ > 0.0 ? length / avg_doc_length_ : 0.0;
  return tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * norm));
}

double FieldIndex::bm25_score(std::string_view doc_id, std::span<const QueryTerm> terms,
                              const Bm25Params& params) const {
  const auto ord = ordinal(doc_id);
  if (!ord) throw ArgumentError("unknown document " + std::string(doc_id));
  const double len = doc_lengths_[*ord];
  double score = 0.0;
  for (const auto& q : terms) {
    const auto f = tf(q.term, *ord);
    if (f == 0) continue;
    score += q.weight * idf(q.term) * bm25_tf(f, len, params);
  }
  return score;
}

std::vector<ScoredDoc> FieldIndex::retrieve_topk(std::span<const QueryTerm> terms, std::size_t k,
                                                 const Bm25Params& params,
                                                 const std::unordered_set<std::string>* allowed) const {
  if (k == 0) throw ArgumentError("k must be >= 1");
  std::vector<double> acc(doc_count(), 0.0);
  std::vector<char> touched(doc_count(), 0);
  std::vector<std::uint32_t> hits;
  for (const auto& q : terms) {
    const auto plist = postings(q.term);
    if (plist.empty()) continue;
    const double w = q.weight * idf(q.term);
    for (const auto& p : plist) {
      if (allowed && !allowed->contains(doc_ids_[p.doc])) continue;
      acc[p.doc] += w * bm25_tf(p.tf, doc_lengths_[p.doc], params);
      if (!touched[p.doc]) {
        touched[p.doc] = 1;
        hits.push_back(p.doc);
      }
    }
  }
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (acc[a] != acc[b]) return acc[a] > acc[b];
    return doc_ids_[a] < doc_ids_[b];
  };
  const std::size_t n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), better);
  std::vector<ScoredDoc> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({doc_ids_[hits[i]], acc[hits[i]]});
  return out;
}

double FieldIndex::collection_probability(std::string_view term) const {
  if (total_terms_ == 0) return 0.0;
  return static_cast<double>(collection_count(term)) / static_cast<double>(total_terms_);
}

double FieldIndex::document_probability(std::string_view term, std::uint32_t ord, double mu) const {
  const double pc = collection_probability(term);
  return (tf(term, ord) + mu * pc) / (doc_lengths_.at(ord) + mu);
}

std::vector<std::string_view> FieldIndex::sorted_terms() const {
  std::vector<std::string_view> out;
  out.reserve(terms_.size());
  for (const auto& [t, _] : terms_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

// Layout (text, one record per line):
//   clarq-field-index <version>
//   field <name>
//   docs <N>
//   <doc_id> TAB <length>            x N, in ordinal order
//   terms <M>
//   <term> TAB <ord>:<tf> <ord>:<tf> ...   x M, lexicographic
void FieldIndex::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << "clarq-field-index " << kFormatVersion << '\n';
  out << "field " << to_string(field_) << '\n';
  out << "docs " << doc_ids_.size() << '\n';
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) out << doc_ids_[i] << '\t' << doc_lengths_[i] << '\n';
  out << "terms " << terms_.size() << '\n';
  for (auto t : sorted_terms()) {
    out << t << '\t';
    const auto& plist = terms_.at(std::string(t)).postings;
    for (std::size_t i = 0; i < plist.size(); ++i) {
      if (i) out << ' ';
      out << plist[i].doc << ':' << plist[i].tf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + file.string());
}

FieldIndex FieldIndex::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  const auto src = file.string();
  std::size_t lineno = 0;
  std::string line;
  auto next = [&]() -> const std::string& {
    if (!std::getline(in, line)) throw ParseError(src, lineno + 1, "unexpected end of index");
    ++lineno;
    return line;
  };
  auto header = [&](std::string_view key) -> std::string {
    const auto& l = next();
    if (!l.starts_with(key) || l.size() <= key.size() || l[key.size()] != ' ')
      throw ParseError(src, lineno, "expected '" + std::string(key) + "'");
    return l.substr(key.size() + 1);
  };

  FieldIndex idx;
  try {
    const auto version = header("clarq-field-index");
    if (version != std::to_string(kFormatVersion)) throw ParseError(src, lineno, "unsupported index version " + version);
    idx.field_ = field_from_string(header("field"));
    const auto ndocs = std::stoull(header("docs"));
    for (std::size_t i = 0; i < ndocs; ++i) {
      const auto& l = next();
      const auto tab = l.find('\t');
      if (tab == std::string::npos) throw ParseError(src, lineno, "expected doc_id TAB length");
      auto id = l.substr(0, tab);
      idx.ordinals_.emplace(id, static_cast<std::uint32_t>(idx.doc_ids_.size()));
      idx.doc_ids_.push_back(std::move(id));
      idx.doc_lengths_.push_back(static_cast<std::uint32_t>(std::stoul(l.substr(tab + 1))));
    }
    const auto nterms = std::stoull(header("terms"));
    for (std::size_t i = 0; i < nterms; ++i) {
      const auto& l = next();
      const auto tab = l.find('\t');
      if (tab == std::string::npos) throw ParseError(src, lineno, "expected term TAB postings");
      TermEntry entry;
      std::istringstream ps(l.substr(tab + 1));
      std::string tok;
      while (ps >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) throw ParseError(src, lineno, "malformed posting '" + tok + "'");
        Posting p{static_cast<std::uint32_t>(std::stoul(tok.substr(0, colon))),
                  static_cast<std::uint32_t>(std::stoul(tok.substr(colon + 1)))};
        if (p.doc >= ndocs) throw ParseError(src, lineno, "posting references unknown ordinal");
        entry.cf += p.tf;
        entry.postings.push_back(p);
      }
      idx.terms_.emplace(l.substr(0, tab), std::move(entry));
    }
  } catch (const std::logic_error& e) {
    throw ParseError(src, lineno, std::string("malformed number: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(src, lineno, e.what());
  }
  idx.finalize();
  return idx;
}

}  // namespace clarq
