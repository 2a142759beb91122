#pragma once

// Plain-text corpus index with normalized phrase search, and linking of
// cell mentions back to cell records.
//
// Normalization, per whitespace-separated word:
//   * strip leading/trailing ASCII punctuation; if what is left looks like a
//     DOI (10.NNNN/...), keep it lower-cased as a single token;
//   * otherwise lower-case ASCII, turn '-' and '_' into spaces and drop the
//     remaining ASCII punctuation. Bytes >= 0x80 pass through untouched.
// The result is split on spaces.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bcl/context.hpp"
#include "bcl/detail/json.hpp"
#include "bcl/error.hpp"
#include "bcl/semantic.hpp"

namespace bcl {

struct Document {
  std::string doc_id;
  std::optional<std::string> doi;
  std::string text;
};

namespace detail {

inline bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

inline bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline bool looks_like_doi(std::string_view w) {
  if (w.size() < 4 || w.substr(0, 3) != "10.") return false;
  std::size_t i = 3;
  while (i < w.size() && w[i] >= '0' && w[i] <= '9') ++i;
  const std::size_t digits = i - 3;
  return digits >= 4 && digits <= 9 && i + 1 < w.size() && w[i] == '/';
}

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline void tokenize_word(std::string_view word, std::vector<std::string>& out) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && is_ascii_punct(word[b])) ++b;
  while (e > b && is_ascii_punct(word[e - 1])) --e;
  const std::string_view core = word.substr(b, e - b);
  if (looks_like_doi(core)) {
    std::string doi;
    for (char c : core) doi += ascii_lower(c);
    out.push_back(std::move(doi));
    return;
  }
  std::string cur;
  for (char c : word) {
    if (c == '-' || c == '_') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (!is_ascii_punct(c)) {
      cur += ascii_lower(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
}

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_ascii_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !detail::is_ascii_space(text[j])) ++j;
    if (j > i) detail::tokenize_word(text.substr(i, j - i), tokens);
    i = j;
  }
  return tokens;
}

/// Tokens joined by single spaces.
inline std::string normalize(std::string_view text) {
  std::string out;
  for (const auto& t : tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

struct Hit {
  std::string doc_id;
  std::size_t position = 0;

  auto operator<=>(const Hit&) const = default;
  bool operator==(const Hit&) const = default;
};

struct DocumentEntry {
  std::string doc_id;
  std::optional<std::string> doi;  // normalized
  std::size_t token_count = 0;

  bool operator==(const DocumentEntry&) const = default;
};

/// Positional inverted index. Postings per token are ordered by document
/// ordinal, then position.
class CorpusIndex {
 public:
  struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t pos = 0;

    auto operator<=>(const Posting&) const = default;
    bool operator==(const Posting&) const = default;
  };

  std::size_t index_document(const Document& doc) { return add_tokens(doc, tokenize(doc.text)); }

  /// Tokenizes on up to `threads` workers, then merges in input order, so
  /// the result equals indexing the documents one by one. All doc_ids are
  /// checked before anything is added.
  std::size_t index_documents(const std::vector<Document>& docs, unsigned threads = 0) {
    std::set<std::string_view> seen;
    for (const auto& d : docs) {
      if (contains(d.doc_id) || !seen.insert(d.doc_id).second) {
        throw Error(ErrorCode::DuplicateDocument, "'" + d.doc_id + "'");
      }
    }
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(docs.size(), 1)));

    std::vector<std::vector<std::string>> tokens(docs.size());
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < docs.size(); i += threads) tokens[i] = tokenize(docs[i].text);
      });
    }
    for (auto& t : pool) t.join();

    std::size_t total = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) total += add_tokens(docs[i], std::move(tokens[i]));
    return total;
  }

  /// Every occurrence of the phrase's token sequence, ordered by
  /// (doc_id, position). Throws EmptyPhrase when the phrase has no tokens.
  std::vector<Hit> search_phrase(std::string_view phrase) const {
    const auto words = tokenize(phrase);
    if (words.empty()) throw Error(ErrorCode::EmptyPhrase, "phrase '" + std::string(phrase) + "' has no tokens");
    std::vector<const std::vector<Posting>*> lists;
    for (const auto& w : words) {
      auto it = postings_.find(w);
      if (it == postings_.end()) return {};
      lists.push_back(&it->second);
    }
    std::vector<Hit> hits;
    for (const Posting& start : *lists[0]) {
      bool all = true;
      for (std::size_t k = 1; k < lists.size() && all; ++k) {
        all = std::binary_search(lists[k]->begin(), lists[k]->end(),
                                 Posting{start.doc, start.pos + static_cast<std::uint32_t>(k)});
      }
      if (all) hits.push_back({docs_[start.doc].doc_id, start.pos});
    }
    std::sort(hits.begin(), hits.end());
    return hits;
  }

  bool contains(std::string_view doc_id) const { return ordinal_.contains(std::string(doc_id)); }
  std::size_t document_count() const { return docs_.size(); }
  const std::vector<DocumentEntry>& documents() const { return docs_; }
  const DocumentEntry& document(std::uint32_t ordinal) const { return docs_.at(ordinal); }
  const std::unordered_map<std::string, std::vector<Posting>>& postings() const { return postings_; }

  /// Postings reference known documents, lie inside their token streams,
  /// are strictly ordered, and add up to the recorded token counts.
  bool consistent() const {
    std::vector<std::size_t> counted(docs_.size(), 0);
    for (const auto& [token, list] : postings_) {
      if (token.empty() || list.empty()) return false;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& p = list[i];
        if (p.doc >= docs_.size() || p.pos >= docs_[p.doc].token_count) return false;
        if (i > 0 && !(list[i - 1] < p)) return false;
        ++counted[p.doc];
      }
    }
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      if (counted[d] != docs_[d].token_count) return false;
    }
    return true;
  }

  /// {"documents": [{doc_id, doi|null, tokens}], "postings": {token: [doc, pos, doc, pos, ...]}}
  /// with tokens in byte order.
  Json to_json() const {
    Json out = Json::object();
    Json docs = Json::array();
    for (const auto& d : docs_) {
      Json entry = Json::object();
      entry["doc_id"] = d.doc_id;
      entry["doi"] = d.doi ? Json(*d.doi) : Json(nullptr);
      entry["tokens"] = d.token_count;
      docs.push_back(std::move(entry));
    }
    out["documents"] = std::move(docs);
    std::map<std::string_view, const std::vector<Posting>*> sorted;
    for (const auto& [token, list] : postings_) sorted.emplace(token, &list);
    Json postings = Json::object();
    for (const auto& [token, list] : sorted) {
      Json flat = Json::array();
      for (const auto& p : *list) {
        flat.push_back(p.doc);
        flat.push_back(p.pos);
      }
      postings[std::string(token)] = std::move(flat);
    }
    out["postings"] = std::move(postings);
    return out;
  }

  static CorpusIndex from_json(const Json& j) {
    auto bad = [](const std::string& what) -> Error { return Error(ErrorCode::ParseError, "corpus index: " + what); };
    if (!j.is_object() || !j.contains("documents") || !j.contains("postings")) throw bad("expected documents and postings");
    CorpusIndex index;
    for (const auto& d : j.at("documents")) {
      if (!d.is_object() || !d.contains("doc_id") || !d.at("doc_id").is_string() || !d.contains("tokens") ||
          !d.at("tokens").is_number_unsigned()) {
        throw bad("malformed document entry");
      }
      DocumentEntry e;
      e.doc_id = d.at("doc_id").get<std::string>();
      if (d.contains("doi") && d.at("doi").is_string()) e.doi = d.at("doi").get<std::string>();
      e.token_count = d.at("tokens").get<std::size_t>();
      if (!index.ordinal_.emplace(e.doc_id, static_cast<std::uint32_t>(index.docs_.size())).second) {
        throw Error(ErrorCode::DuplicateDocument, "'" + e.doc_id + "'");
      }
      index.docs_.push_back(std::move(e));
    }
    for (const auto& [token, flat] : j.at("postings").items()) {
      if (!flat.is_array() || flat.size() % 2 != 0) throw bad("malformed postings for '" + token + "'");
      auto& list = index.postings_[token];
      for (std::size_t i = 0; i < flat.size(); i += 2) {
        if (!flat[i].is_number_unsigned() || !flat[i + 1].is_number_unsigned()) throw bad("non-integer posting");
        list.push_back({flat[i].get<std::uint32_t>(), flat[i + 1].get<std::uint32_t>()});
      }
    }
    if (!index.consistent()) throw bad("postings do not match the document table");
    return index;
  }

 private:
  std::size_t add_tokens(const Document& doc, std::vector<std::string> tokens) {
    const auto ordinal = static_cast<std::uint32_t>(docs_.size());
    if (!ordinal_.emplace(doc.doc_id, ordinal).second) {
      throw Error(ErrorCode::DuplicateDocument, "'" + doc.doc_id + "'");
    }
    DocumentEntry entry{doc.doc_id, std::nullopt, tokens.size()};
    if (doc.doi && !doc.doi->empty()) entry.doi = normalize_doi(*doc.doi);
    docs_.push_back(std::move(entry));
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      postings_[std::move(tokens[pos])].push_back({ordinal, static_cast<std::uint32_t>(pos)});
    }
    return tokens.size();
  }

  std::vector<DocumentEntry> docs_;
  std::unordered_map<std::string, std::uint32_t> ordinal_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

// ---------------------------------------------------------------------------
// Aliases and mentions

/// Cell IRI -> alias strings.
struct AliasSet {
  std::map<std::string, std::vector<std::string>> cells;
};

/// Rejects empty alias lists, aliases that normalize to nothing, and two
/// cells sharing a normalized alias (AliasCollision).
inline void validate_alias_set(const AliasSet& set) {
  std::map<std::string, std::string> owner;
  for (const auto& [iri, aliases] : set.cells) {
    if (iri.empty()) throw Error(ErrorCode::BadIri, "empty cell IRI in alias set");
    if (aliases.empty()) throw Error(ErrorCode::MissingField, "no aliases for " + iri);
    for (const auto& a : aliases) {
      const std::string key = normalize(a);
      if (key.empty()) throw Error(ErrorCode::MissingField, "alias '" + a + "' of " + iri + " has no tokens");
      auto [it, fresh] = owner.emplace(key, iri);
      if (!fresh && it->second != iri) {
        throw Error(ErrorCode::AliasCollision, "'" + key + "' names both " + it->second + " and " + iri);
      }
    }
  }
}

/// JSON object {"<iri>": ["alias", ...], ...}.
inline AliasSet parse_alias_set(std::string_view text) {
  const Json j = detail::parse_json_strict(text);
  if (!j.is_object()) throw Error(ErrorCode::TypeMismatch, "alias set must be a JSON object");
  AliasSet set;
  for (const auto& [iri, list] : j.items()) {
    if (!list.is_array()) throw Error(ErrorCode::TypeMismatch, "aliases of " + iri + " must be an array");
    auto& out = set.cells[iri];
    for (const auto& a : list) {
      if (!a.is_string()) throw Error(ErrorCode::TypeMismatch, "alias of " + iri + " must be a string");
      out.push_back(a.get<std::string>());
    }
  }
  validate_alias_set(set);
  return set;
}

inline AliasSet load_alias_set(const std::filesystem::path& path) { return parse_alias_set(read_file(path)); }

struct CellMentions {
  std::vector<std::string> dois;              // normalized, sorted, unique
  std::vector<std::string> unlinked_doc_ids;  // matching documents without a DOI, sorted

  bool operator==(const CellMentions&) const = default;
};

using Mentions = std::map<std::string, CellMentions>;

/// Cells with no matching document are left out.
inline Mentions find_cell_mentions(const CorpusIndex& index, const AliasSet& aliases) {
  Mentions out;
  std::unordered_map<std::string_view, const DocumentEntry*> by_id;
  for (const auto& d : index.documents()) by_id.emplace(d.doc_id, &d);
  for (const auto& [iri, list] : aliases.cells) {
    std::set<std::string> doc_ids;
    for (const auto& alias : list) {
      if (tokenize(alias).empty()) continue;
      for (auto& hit : index.search_phrase(alias)) doc_ids.insert(std::move(hit.doc_id));
    }
    if (doc_ids.empty()) continue;
    CellMentions m;
    for (const auto& id : doc_ids) {
      const DocumentEntry* d = by_id.at(id);
      if (d->doi) m.dois.push_back(*d->doi);
      else m.unlinked_doc_ids.emplace_back(id);
    }
    sort_unique(m.dois);
    sort_unique(m.unlinked_doc_ids);
    out.emplace(iri, std::move(m));
  }
  return out;
}

inline Json mentions_to_json(const Mentions& mentions) {
  Json out = Json::object();
  for (const auto& [iri, m] : mentions) {
    Json entry = Json::object();
    entry["dois"] = m.dois;
    entry["unlinked_doc_ids"] = m.unlinked_doc_ids;
    out[iri] = std::move(entry);
  }
  return out;
}

inline Mentions mentions_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::TypeMismatch, "mentions report must be a JSON object");
  Mentions out;
  for (const auto& [iri, entry] : j.items()) {
    CellMentions m;
    if (!entry.is_object()) throw Error(ErrorCode::TypeMismatch, "mentions of " + iri + " must be an object");
    if (entry.contains("dois")) m.dois = entry.at("dois").get<std::vector<std::string>>();
    if (entry.contains("unlinked_doc_ids")) m.unlinked_doc_ids = entry.at("unlinked_doc_ids").get<std::vector<std::string>>();
    out.emplace(iri, std::move(m));
  }
  return out;
}

struct LinkResult {
  std::vector<CellRecord> records;
  std::vector<std::string> unknown_cells;  // mention IRIs with no record, sorted
  std::size_t added = 0;                   // DOIs that were new to their record
};

/// Merges mention DOIs into each record's paper_dois (sorted union).
/// Unknown IRIs are reported, not thrown; the other cells are still linked.
inline LinkResult link_papers(std::vector<CellRecord> records, const Mentions& mentions) {
  LinkResult result;
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < records.size(); ++i) by_id.emplace(records[i].id, i);
  for (const auto& [iri, m] : mentions) {
    auto it = by_id.find(iri);
    if (it == by_id.end()) {
      result.unknown_cells.push_back(iri);
      continue;
    }
    auto& dois = records[it->second].paper_dois;
    const std::size_t before = dois.size();
    for (const auto& d : m.dois) dois.push_back(normalize_doi(d));
    sort_unique(dois);
    result.added += dois.size() - before;
  }
  std::sort(result.unknown_cells.begin(), result.unknown_cells.end());
  result.records = std::move(records);
  return result;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string doc_id;
  std::optional<std::string> doi;
  std::filesystem::path path;  // resolved against the manifest's directory
};

namespace detail {

// One CSV record; handles "quoted, fields" and "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"' && fields.back().empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseFailure(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": open quote", 0, line_no, 0);
  return fields;
}

}  // namespace detail

/// CSV with header `doc_id,doi,path`. An empty doi field means none.
inline std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line, line_no);
    if (header) {
      if (fields != std::vector<std::string>{"doc_id", "doi", "path"}) {
        throw ParseFailure(ErrorCode::ParseError, "manifest header must be 'doc_id,doi,path'", 0, line_no, 1);
      }
      header = false;
      continue;
    }
    if (fields.size() != 3 || fields[0].empty() || fields[2].empty()) {
      throw ParseFailure(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": expected doc_id,doi,path",
                         0, line_no, 1);
    }
    ManifestEntry e;
    e.doc_id = fields[0];
    if (!fields[1].empty()) e.doi = fields[1];
    e.path = base_dir / fields[2];
    out.push_back(std::move(e));
  }
  if (header) throw ParseFailure(ErrorCode::ParseError, "manifest is empty", 0, 1, 1);
  return out;
}

/// Reads the manifest and every document it lists.
inline std::vector<Document> load_corpus(const std::filesystem::path& manifest) {
  std::vector<Document> docs;
  for (auto& e : parse_manifest(read_file(manifest), manifest.parent_path())) {
    docs.push_back({std::move(e.doc_id), std::move(e.doi), read_file(e.path)});
  }
  return docs;
}

}  // namespace bcl
