#pragma once

// In-memory triple store with a basic-graph-pattern query subset:
//
//   PREFIX p: <iri>
//   SELECT [DISTINCT] ?a ?b | *
//   WHERE { pattern . pattern ; p o , o . FILTER(?v op number [&& ...]) }
//   [LIMIT n]
//
// Pattern terms are variables (?x / $x), <iri>, prefixed names, `a`,
// "strings" (optionally ^^datatype or @lang) and bare numbers. FILTER
// compares a variable against a number with <, <=, =, >=, >; only typed
// numeric literals pass a comparison. Results are distinct and sorted by
// their N-Triples rendering.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bcl/error.hpp"
#include "bcl/rdf.hpp"

namespace bcl {

/// Set of triples indexed by subject, predicate and object. Inserts take an
/// exclusive lock per batch; queries share the lock.
class TripleStore {
 public:
  TripleStore() = default;
  TripleStore(const TripleStore&) = delete;
  TripleStore& operator=(const TripleStore&) = delete;

  /// Adds the triples not already present; returns how many were new.
  std::size_t insert(std::span<const Triple> batch) {
    std::unique_lock lock(mutex_);
    std::size_t added = 0;
    for (const auto& t : batch) {
      auto [it, inserted] = id_of_.emplace(t, static_cast<std::uint32_t>(triples_.size()));
      if (!inserted) continue;
      const std::uint32_t id = it->second;
      triples_.push_back(t);
      by_subject_[t.subject].push_back(id);
      by_predicate_[t.predicate].push_back(id);
      by_object_[t.object].push_back(id);
      ++added;
    }
    return added;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return triples_.size();
  }

  bool contains(const Triple& t) const {
    std::shared_lock lock(mutex_);
    return id_of_.contains(t);
  }

  /// Snapshot in insertion order.
  std::vector<Triple> triples() const {
    std::shared_lock lock(mutex_);
    return triples_;
  }

  /// Every index entry points at a stored triple with the indexed term, and
  /// every triple appears once in each index.
  bool indexes_consistent() const {
    std::shared_lock lock(mutex_);
    auto check = [&](const auto& index, auto part) {
      std::size_t entries = 0;
      for (const auto& [term, ids] : index) {
        for (auto id : ids) {
          if (id >= triples_.size() || triples_[id].*part != term) return false;
        }
        entries += ids.size();
      }
      return entries == triples_.size();
    };
    return id_of_.size() == triples_.size() && check(by_subject_, &Triple::subject) &&
           check(by_predicate_, &Triple::predicate) && check(by_object_, &Triple::object);
  }

  // Query-side access; callers hold read_lock().
  std::shared_lock<std::shared_mutex> read_lock() const { return std::shared_lock(mutex_); }
  const std::vector<Triple>& raw() const { return triples_; }
  const std::vector<std::uint32_t>* with_subject(const Term& t) const { return find(by_subject_, t); }
  const std::vector<std::uint32_t>* with_predicate(const Term& t) const { return find(by_predicate_, t); }
  const std::vector<std::uint32_t>* with_object(const Term& t) const { return find(by_object_, t); }

 private:
  using Index = std::unordered_map<Term, std::vector<std::uint32_t>>;
  static const std::vector<std::uint32_t>* find(const Index& index, const Term& t) {
    static const std::vector<std::uint32_t> empty;
    auto it = index.find(t);
    return it == index.end() ? &empty : &it->second;
  }

  std::vector<Triple> triples_;
  std::unordered_map<Triple, std::uint32_t> id_of_;
  Index by_subject_;
  Index by_predicate_;
  Index by_object_;
  mutable std::shared_mutex mutex_;
};

inline std::size_t insert_triples(TripleStore& store, std::span<const Triple> triples) {
  return store.insert(triples);
}

// ---------------------------------------------------------------------------
// Query model

/// One position of a triple pattern: a variable name or a fixed term.
struct Slot {
  std::optional<std::string> variable;
  Term term;

  static Slot var(std::string name) { return {std::move(name), {}}; }
  static Slot fixed(Term t) { return {std::nullopt, std::move(t)}; }
  bool is_var() const { return variable.has_value(); }

  bool operator==(const Slot&) const = default;
};

struct TriplePattern {
  Slot subject;
  Slot predicate;
  Slot object;

  bool operator==(const TriplePattern&) const = default;
};

enum class CompareOp { Less, LessEqual, Equal, GreaterEqual, Greater };

inline bool compare(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::Less: return lhs < rhs;
    case CompareOp::LessEqual: return lhs <= rhs;
    case CompareOp::Equal: return lhs == rhs;
    case CompareOp::GreaterEqual: return lhs >= rhs;
    case CompareOp::Greater: return lhs > rhs;
  }
  return false;
}

struct Filter {
  std::string variable;
  CompareOp op = CompareOp::Equal;
  double value = 0.0;

  bool operator==(const Filter&) const = default;
};

struct Query {
  std::map<std::string, std::string> prefixes;
  std::vector<std::string> select_vars;
  std::vector<TriplePattern> patterns;
  std::vector<Filter> filters;
  std::optional<std::uint64_t> limit;
};

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Term>> rows;

  /// Header of ?-prefixed variable names, then one N-Triples-rendered row
  /// per binding. LF endings.
  std::string to_tsv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "\t?" : "?") + columns[i];
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += '\t';
        out += row[i].to_ntriples();
      }
      out += '\n';
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

enum class Tok { Iri, PName, Var, String, Number, Punct, Word, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class QueryLexer {
 public:
  explicit QueryLexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token tok;
      tok.line = line_;
      tok.column = column_;
      if (pos_ >= text_.size()) {
        tok.kind = Tok::End;
        out.push_back(tok);
        return out;
      }
      const char c = text_[pos_];
      if (c == '<' && looks_like_iri()) {
        advance();
        while (text_[pos_] != '>') tok.text += advance();
        advance();
        tok.kind = Tok::Iri;
      } else if (c == '?' || c == '$') {
        advance();
        while (pos_ < text_.size() && is_name_char(text_[pos_])) tok.text += advance();
        if (tok.text.empty()) fail(tok, "empty variable name");
        tok.kind = Tok::Var;
      } else if (c == '"') {
        tok.kind = Tok::String;
        tok.text = read_string(tok);
      } else if (is_digit(c) || ((c == '-' || c == '+' || c == '.') && pos_ + 1 < text_.size() &&
                                 (is_digit(text_[pos_ + 1]) || text_[pos_ + 1] == '.'))) {
        tok.kind = Tok::Number;
        tok.text += advance();
        while (pos_ < text_.size() && (is_digit(text_[pos_]) || text_[pos_] == '.' || text_[pos_] == 'e' ||
                                       text_[pos_] == 'E' ||
                                       ((text_[pos_] == '-' || text_[pos_] == '+') &&
                                        (tok.text.back() == 'e' || tok.text.back() == 'E')))) {
          // A trailing '.' ends a triple rather than continuing the number.
          if (text_[pos_] == '.' && (pos_ + 1 >= text_.size() || !is_digit(text_[pos_ + 1]))) break;
          tok.text += advance();
        }
      } else if (c == '<' || c == '>') {
        tok.kind = Tok::Punct;
        tok.text += advance();
        if (pos_ < text_.size() && text_[pos_] == '=') tok.text += advance();
      } else if (c == '&' || c == '|' || c == '!') {
        tok.kind = Tok::Punct;
        tok.text += advance();
        if (pos_ < text_.size() && (text_[pos_] == c || text_[pos_] == '=')) tok.text += advance();
      } else if (c == '{' || c == '}' || c == '(' || c == ')' || c == '.' || c == ';' || c == ',' || c == '=' ||
                 c == '*') {
        tok.kind = Tok::Punct;
        tok.text += advance();
      } else if (c == '^' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '^') {
        tok.kind = Tok::Punct;
        tok.text = "^^";
        advance();
        advance();
      } else if (c == '@') {
        tok.kind = Tok::Punct;
        tok.text += advance();
      } else if (is_name_start(c) || c == ':') {
        while (pos_ < text_.size() && (is_name_char(text_[pos_]) || text_[pos_] == ':' || text_[pos_] == '-' ||
                                       (text_[pos_] == '.' && pos_ + 1 < text_.size() &&
                                        is_name_char(text_[pos_ + 1])))) {
          tok.text += advance();
        }
        tok.kind = tok.text.find(':') == std::string::npos ? Tok::Word : Tok::PName;
      } else {
        fail(tok, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(tok));
    }
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_name_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || static_cast<unsigned char>(c) >= 0x80;
  }
  static bool is_name_char(char c) { return is_name_start(c) || is_digit(c); }

  [[noreturn]] static void fail(const Token& at, const std::string& what) {
    throw ParseFailure(ErrorCode::SyntaxError,
                       "line " + std::to_string(at.line) + ", column " + std::to_string(at.column) + ": " + what, 0,
                       at.line, at.column);
  }

  char advance() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  bool looks_like_iri() const {
    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') return false;
    for (std::size_t i = pos_ + 1; i < text_.size(); ++i) {
      const char c = text_[i];
      if (c == '>') return i > pos_ + 1;
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '<' || c == '"' || c == '{' || c == '}') return false;
    }
    return false;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string read_string(const Token& tok) {
    advance();  // opening quote
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = advance();
      if (c == '\n') fail(tok, "unterminated string");
      if (c == '\\') {
        if (pos_ >= text_.size()) break;
        const char e = advance();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(tok, "bad escape in string");
        }
        continue;
      }
      out += c;
    }
    if (pos_ >= text_.size()) fail(tok, "unterminated string");
    advance();  // closing quote
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

class QueryParser {
 public:
  explicit QueryParser(std::string_view text) : tokens_(QueryLexer(text).run()) {}

  Query parse() {
    Query q;
    while (is_word("PREFIX")) {
      next();
      const Token& name = expect(Tok::PName, "prefix name");
      if (name.text.back() != ':') fail(name, "prefix name must end with ':'");
      const Token& iri = expect(Tok::Iri, "prefix IRI");
      q.prefixes[name.text.substr(0, name.text.size() - 1)] = iri.text;
    }
    prefixes_ = &q.prefixes;

    if (!is_word("SELECT")) fail(peek(), "expected SELECT");
    next();
    if (is_word("DISTINCT")) next();
    bool select_all = false;
    if (is_punct("*")) {
      next();
      select_all = true;
    } else {
      while (peek().kind == Tok::Var) q.select_vars.push_back(next().text);
      if (q.select_vars.empty()) fail(peek(), "expected at least one variable after SELECT");
    }
    if (is_word("WHERE")) next();
    expect_punct("{");
    const Token& body_start = peek();
    parse_group(q);
    expect_punct("}");
    if (q.patterns.empty()) fail(body_start, "query body has no triple pattern");
    if (is_word("LIMIT")) {
      next();
      const Token& n = expect(Tok::Number, "LIMIT count");
      if (n.text.find_first_not_of("0123456789") != std::string::npos || n.text == "0") {
        fail(n, "LIMIT needs a positive integer");
      }
      q.limit = std::stoull(n.text);
    }
    if (peek().kind != Tok::End) fail(peek(), "unexpected '" + peek().text + "' after query");

    std::vector<std::string> bound;
    for (const auto& p : q.patterns) {
      for (const Slot* s : {&p.subject, &p.predicate, &p.object}) {
        if (s->is_var() && std::find(bound.begin(), bound.end(), *s->variable) == bound.end()) {
          bound.push_back(*s->variable);
        }
      }
    }
    if (select_all) q.select_vars = bound;
    for (const auto& v : q.select_vars) {
      if (std::find(bound.begin(), bound.end(), v) == bound.end()) {
        throw Error(ErrorCode::UnboundVariable, "?" + v + " is selected but appears in no pattern");
      }
    }
    for (const auto& f : q.filters) {
      if (std::find(bound.begin(), bound.end(), f.variable) == bound.end()) {
        throw Error(ErrorCode::UnboundFilter, "?" + f.variable + " is filtered but appears in no pattern");
      }
    }
    return q;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() {
    const Token& t = tokens_[pos_];
    if (t.kind != Tok::End) ++pos_;
    return t;
  }
  bool is_word(std::string_view w) const { return peek().kind == Tok::Word && iequals(peek().text, w); }
  bool is_punct(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }

  [[noreturn]] static void fail(const Token& at, const std::string& what) {
    throw ParseFailure(ErrorCode::SyntaxError,
                       "line " + std::to_string(at.line) + ", column " + std::to_string(at.column) + ": " + what, 0,
                       at.line, at.column);
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(peek(), std::string("expected ") + what);
    return next();
  }
  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail(peek(), "expected '" + std::string(p) + "'");
    next();
  }

  void parse_group(Query& q) {
    while (!is_punct("}")) {
      if (peek().kind == Tok::End) fail(peek(), "expected '}'");
      if (is_word("FILTER")) {
        next();
        parse_filter(q);
        if (is_punct(".")) next();
        continue;
      }
      parse_triples(q);
      if (is_punct(".")) {
        next();
      } else if (!is_punct("}") && !is_word("FILTER")) {
        fail(peek(), "expected '.' or '}' after triple pattern");
      }
    }
  }

  void parse_triples(Query& q) {
    const Slot subject = parse_slot(false);
    for (;;) {
      const Slot predicate = parse_slot(true);
      for (;;) {
        q.patterns.push_back({subject, predicate, parse_slot(false)});
        if (!is_punct(",")) break;
        next();
      }
      if (!is_punct(";")) break;
      next();
      if (is_punct(".") || is_punct("}")) break;
    }
  }

  Slot parse_slot(bool predicate_position) {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Var: next(); return Slot::var(t.text);
      case Tok::Iri: next(); return Slot::fixed(Term::iri(t.text));
      case Tok::PName: next(); return Slot::fixed(Term::iri(expand(t)));
      case Tok::Word:
        if (predicate_position && t.text == "a") {
          next();
          return Slot::fixed(Term::iri(std::string(kRdfType)));
        }
        if (!predicate_position && (t.text == "true" || t.text == "false")) {
          next();
          return Slot::fixed(Term::typed(t.text, std::string(kXsdBoolean)));
        }
        fail(t, "unexpected '" + t.text + "' in triple pattern");
      case Tok::String: {
        next();
        Term lit = Term::literal(t.text);
        if (is_punct("^^")) {
          next();
          const Token& dt = peek();
          if (dt.kind == Tok::Iri) lit.datatype = next().text;
          else if (dt.kind == Tok::PName) lit.datatype = expand(next());
          else fail(dt, "expected datatype IRI");
        } else if (is_punct("@")) {
          next();
          lit.lang = expect(Tok::Word, "language tag").text;
        }
        if (predicate_position) fail(t, "a literal cannot be a predicate");
        return Slot::fixed(std::move(lit));
      }
      case Tok::Number: {
        if (predicate_position) fail(t, "a literal cannot be a predicate");
        next();
        if (!parse_double(t.text)) fail(t, "malformed number");
        const bool has_exp = t.text.find_first_of("eE") != std::string::npos;
        const bool has_dot = t.text.find('.') != std::string::npos;
        std::string_view dt = has_exp ? kXsdDouble : has_dot ? kXsdDecimal : kXsdInteger;
        return Slot::fixed(Term::typed(t.text, std::string(dt)));
      }
      default: fail(t, "expected a term, found '" + t.text + "'");
    }
  }

  std::string expand(const Token& t) const {
    const auto colon = t.text.find(':');
    const std::string prefix = t.text.substr(0, colon);
    auto it = prefixes_->find(prefix);
    if (it == prefixes_->end()) throw Error(ErrorCode::UnknownPrefix, "'" + prefix + ":' at line " + std::to_string(t.line));
    return it->second + t.text.substr(colon + 1);
  }

  void parse_filter(Query& q) {
    expect_punct("(");
    for (;;) {
      parse_comparison(q);
      if (!is_punct("&&")) break;
      next();
    }
    expect_punct(")");
  }

  void parse_comparison(Query& q) {
    auto read_op = [&]() {
      const Token& t = peek();
      if (t.kind != Tok::Punct) fail(t, "expected a comparison operator");
      CompareOp op;
      if (t.text == "<") op = CompareOp::Less;
      else if (t.text == "<=") op = CompareOp::LessEqual;
      else if (t.text == "=") op = CompareOp::Equal;
      else if (t.text == ">=") op = CompareOp::GreaterEqual;
      else if (t.text == ">") op = CompareOp::Greater;
      else fail(t, "unsupported operator '" + t.text + "'");
      next();
      return op;
    };
    auto read_number = [&]() {
      const Token& t = expect(Tok::Number, "a number");
      auto v = parse_double(t.text);
      if (!v) fail(t, "malformed number");
      return *v;
    };
    if (peek().kind == Tok::Var) {
      std::string var = next().text;
      CompareOp op = read_op();
      q.filters.push_back({std::move(var), op, read_number()});
      return;
    }
    if (peek().kind == Tok::Number) {
      const double value = read_number();
      CompareOp op = read_op();
      const Token& v = expect(Tok::Var, "a variable");
      // number OP ?v  ==  ?v OP' number
      switch (op) {
        case CompareOp::Less: op = CompareOp::Greater; break;
        case CompareOp::LessEqual: op = CompareOp::GreaterEqual; break;
        case CompareOp::GreaterEqual: op = CompareOp::LessEqual; break;
        case CompareOp::Greater: op = CompareOp::Less; break;
        case CompareOp::Equal: break;
      }
      q.filters.push_back({v.text, op, value});
      return;
    }
    fail(peek(), "FILTER expects '?var op number'");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const std::map<std::string, std::string>* prefixes_ = nullptr;
};

}  // namespace detail

/// Throws ParseFailure(SyntaxError) with line/column, or Error with
/// UnknownPrefix / UnboundFilter / UnboundVariable.
inline Query parse_query(std::string_view text) { return detail::QueryParser(text).parse(); }

// ---------------------------------------------------------------------------
// Execution

namespace detail {

class QueryExecutor {
 public:
  QueryExecutor(const TripleStore& store, const Query& q) : store_(store), q_(q) {
    for (const auto& p : q.patterns) {
      for (const Slot* s : {&p.subject, &p.predicate, &p.object}) {
        if (s->is_var()) slot_of(*s->variable);
      }
    }
    order_patterns();
  }

  ResultTable run() {
    ResultTable table;
    table.columns = q_.select_vars;
    auto lock = store_.read_lock();
    binding_.assign(vars_.size(), nullptr);
    search(0);

    std::vector<std::pair<std::vector<std::string>, std::vector<Term>>> keyed;
    keyed.reserve(rows_.size());
    for (auto& row : rows_) {
      std::vector<std::string> key;
      key.reserve(row.size());
      for (const auto& t : row) key.push_back(t.to_ntriples());
      keyed.emplace_back(std::move(key), std::move(row));
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    keyed.erase(std::unique(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
                keyed.end());
    for (auto& [key, row] : keyed) {
      if (q_.limit && table.rows.size() >= *q_.limit) break;
      table.rows.push_back(std::move(row));
    }
    return table;
  }

 private:
  struct Step {
    const TriplePattern* pattern;
    std::vector<const Filter*> filters;  // checkable once this step has bound its variables
  };

  std::size_t slot_of(const std::string& name) {
    auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it != vars_.end()) return static_cast<std::size_t>(it - vars_.begin());
    vars_.push_back(name);
    return vars_.size() - 1;
  }
  std::size_t index_of(const std::string& name) const {
    return static_cast<std::size_t>(std::find(vars_.begin(), vars_.end(), name) - vars_.begin());
  }

  std::size_t constant_cardinality(const TriplePattern& p) const {
    std::size_t best = store_.raw().size();
    if (!p.subject.is_var()) best = std::min(best, store_.with_subject(p.subject.term)->size());
    if (!p.predicate.is_var()) best = std::min(best, store_.with_predicate(p.predicate.term)->size());
    if (!p.object.is_var()) best = std::min(best, store_.with_object(p.object.term)->size());
    return best;
  }

  // Greedy: start from the most selective pattern, then prefer patterns
  // connected to already-bound variables.
  void order_patterns() {
    auto lock = store_.read_lock();
    std::vector<const TriplePattern*> remaining;
    for (const auto& p : q_.patterns) remaining.push_back(&p);
    std::vector<bool> bound(vars_.size(), false);
    while (!remaining.empty()) {
      auto score = [&](const TriplePattern* p) {
        int shared = 0;
        for (const Slot* s : {&p->subject, &p->predicate, &p->object}) {
          if (s->is_var() && bound[index_of(*s->variable)]) ++shared;
        }
        return std::make_pair(-shared, constant_cardinality(*p));
      };
      auto best = std::min_element(remaining.begin(), remaining.end(),
                                   [&](auto* a, auto* b) { return score(a) < score(b); });
      const TriplePattern* chosen = *best;
      remaining.erase(best);
      for (const Slot* s : {&chosen->subject, &chosen->predicate, &chosen->object}) {
        if (s->is_var()) bound[index_of(*s->variable)] = true;
      }
      plan_.push_back({chosen, {}});
    }
    for (const auto& f : q_.filters) {
      const std::size_t var = index_of(f.variable);
      for (auto& step : plan_) {
        const auto& p = *step.pattern;
        const bool binds = (p.subject.is_var() && *p.subject.variable == f.variable) ||
                           (p.predicate.is_var() && *p.predicate.variable == f.variable) ||
                           (p.object.is_var() && *p.object.variable == f.variable);
        if (binds) {
          step.filters.push_back(&f);
          break;
        }
      }
      (void)var;
    }
  }

  const Term* resolved(const Slot& s) const {
    if (!s.is_var()) return &s.term;
    return binding_[index_of(*s.variable)];
  }

  void search(std::size_t depth) {
    if (depth == plan_.size()) {
      std::vector<Term> row;
      row.reserve(q_.select_vars.size());
      for (const auto& v : q_.select_vars) row.push_back(*binding_[index_of(v)]);
      rows_.push_back(std::move(row));
      return;
    }
    const Step& step = plan_[depth];
    const TriplePattern& p = *step.pattern;
    const Term* s = resolved(p.subject);
    const Term* pr = resolved(p.predicate);
    const Term* o = resolved(p.object);

    const std::vector<std::uint32_t>* candidates = nullptr;
    auto narrow = [&](const std::vector<std::uint32_t>* list) {
      if (candidates == nullptr || list->size() < candidates->size()) candidates = list;
    };
    if (s) narrow(store_.with_subject(*s));
    if (pr) narrow(store_.with_predicate(*pr));
    if (o) narrow(store_.with_object(*o));

    const auto& triples = store_.raw();
    auto visit = [&](const Triple& t) {
      if (s && t.subject != *s) return;
      if (pr && t.predicate != *pr) return;
      if (o && t.object != *o) return;
      // Bind fresh variables; a variable repeated inside the pattern must
      // bind consistently.
      std::vector<std::size_t> fresh;
      auto bind = [&](const Slot& slot, const Term& value) {
        if (!slot.is_var()) return true;
        const std::size_t i = index_of(*slot.variable);
        if (binding_[i] != nullptr) return *binding_[i] == value;
        binding_[i] = &value;
        fresh.push_back(i);
        return true;
      };
      const bool ok = bind(p.subject, t.subject) && bind(p.predicate, t.predicate) && bind(p.object, t.object);
      if (ok && passes(step)) search(depth + 1);
      for (auto i : fresh) binding_[i] = nullptr;
    };
    if (candidates != nullptr) {
      for (auto id : *candidates) visit(triples[id]);
    } else {
      for (const auto& t : triples) visit(t);
    }
  }

  bool passes(const Step& step) const {
    for (const Filter* f : step.filters) {
      auto value = binding_[index_of(f->variable)]->numeric();
      if (!value || !compare(*value, f->op, f->value)) return false;
    }
    return true;
  }

  const TripleStore& store_;
  const Query& q_;
  std::vector<std::string> vars_;
  std::vector<Step> plan_;
  std::vector<const Term*> binding_;
  std::vector<std::vector<Term>> rows_;
};

}  // namespace detail

/// Distinct solutions of the pattern conjunction that pass every filter,
/// projected, sorted by N-Triples rendering, then truncated to LIMIT.
inline ResultTable execute_query(const TripleStore& store, const Query& q) {
  return detail::QueryExecutor(store, q).run();
}

}  // namespace bcl
