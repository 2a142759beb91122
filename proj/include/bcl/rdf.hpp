#pragma once

#include <cctype>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcl/detail/number.hpp"
#include "bcl/error.hpp"

namespace bcl {

inline constexpr std::string_view kXsdString = "http://www.w3.org/2001/XMLSchema#string";
inline constexpr std::string_view kXsdDouble = "http://www.w3.org/2001/XMLSchema#double";
inline constexpr std::string_view kXsdDecimal = "http://www.w3.org/2001/XMLSchema#decimal";
inline constexpr std::string_view kXsdInteger = "http://www.w3.org/2001/XMLSchema#integer";
inline constexpr std::string_view kXsdBoolean = "http://www.w3.org/2001/XMLSchema#boolean";
inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kRdfJson = "http://www.w3.org/1999/02/22-rdf-syntax-ns#JSON";

/// An IRI or a literal. Literals carry an optional datatype IRI (empty means
/// a plain string) or a language tag. Numeric literals use their unit IRI as
/// datatype, or xsd:double when dimensionless.
struct Term {
  enum class Kind : std::uint8_t { Iri, Literal };

  Kind kind = Kind::Iri;
  std::string value;
  std::string datatype;
  std::string lang;

  static Term iri(std::string v) { return {Kind::Iri, std::move(v), {}, {}}; }
  static Term literal(std::string v) { return {Kind::Literal, std::move(v), {}, {}}; }
  static Term typed(std::string lexical, std::string dt) { return {Kind::Literal, std::move(lexical), std::move(dt), {}}; }
  static Term number(double v, std::string unit_iri = std::string(kXsdDouble)) {
    return typed(detail::shortest(v), std::move(unit_iri));
  }

  bool is_iri() const { return kind == Kind::Iri; }
  bool is_literal() const { return kind == Kind::Literal; }

  /// Value of a typed, non-string literal whose lexical form is a number.
  std::optional<double> numeric() const {
    if (kind != Kind::Literal || datatype.empty() || datatype == kXsdString || datatype == kRdfJson ||
        datatype == kXsdBoolean) {
      return std::nullopt;
    }
    return detail::parse_double(value);
  }

  std::string to_ntriples() const;

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;
};

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  std::string to_ntriples() const {
    return subject.to_ntriples() + ' ' + predicate.to_ntriples() + ' ' + object.to_ntriples() + " .";
  }

  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

namespace detail {

inline std::string escape_literal(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

class NTriplesReader {
 public:
  NTriplesReader(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  Term read_term() {
    skip_ws();
    if (at_end()) fail("unexpected end of line");
    const char c = text_[pos_];
    if (c == '<') return Term::iri(read_iri());
    if (c == '"') return read_literal();
    if (c == '_') fail("blank nodes are not supported");
    fail("expected '<' or '\"'");
  }

  void expect_dot() {
    skip_ws();
    if (at_end() || text_[pos_] != '.') fail("expected '.'");
    ++pos_;
    skip_ws();
    if (!at_end() && text_[pos_] != '#') fail("trailing characters after '.'");
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseFailure(ErrorCode::ParseError, "N-Triples line " + std::to_string(line_) + ": " + what, pos_,
                       line_, pos_ + 1);
  }

  std::uint32_t read_hex(std::size_t digits) {
    if (pos_ + digits > text_.size()) fail("truncated \\u escape");
    std::uint32_t cp = 0;
    for (std::size_t i = 0; i < digits; ++i) {
      const char h = text_[pos_++];
      cp <<= 4;
      if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
      else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
      else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
      else fail("bad hex digit");
    }
    return cp;
  }

  std::string read_iri() {
    ++pos_;  // '<'
    std::string out;
    while (!at_end() && text_[pos_] != '>') {
      if (text_[pos_] == '\\') {
        ++pos_;
        if (at_end()) fail("dangling escape");
        const char e = text_[pos_++];
        if (e == 'u') append_utf8(out, read_hex(4));
        else if (e == 'U') append_utf8(out, read_hex(8));
        else fail("bad IRI escape");
        continue;
      }
      out += text_[pos_++];
    }
    if (at_end()) fail("unterminated IRI");
    ++pos_;  // '>'
    return out;
  }

  Term read_literal() {
    ++pos_;  // '"'
    std::string lexical;
    while (!at_end() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') {
        ++pos_;
        if (at_end()) fail("dangling escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': lexical += '\n'; break;
          case 'r': lexical += '\r'; break;
          case 't': lexical += '\t'; break;
          case 'b': lexical += '\b'; break;
          case 'f': lexical += '\f'; break;
          case '"': lexical += '"'; break;
          case '\'': lexical += '\''; break;
          case '\\': lexical += '\\'; break;
          case 'u': append_utf8(lexical, read_hex(4)); break;
          case 'U': append_utf8(lexical, read_hex(8)); break;
          default: fail("bad string escape");
        }
        continue;
      }
      lexical += text_[pos_++];
    }
    if (at_end()) fail("unterminated literal");
    ++pos_;  // '"'
    if (text_.substr(pos_, 2) == "^^") {
      pos_ += 2;
      if (at_end() || text_[pos_] != '<') fail("expected datatype IRI");
      return Term::typed(std::move(lexical), read_iri());
    }
    if (!at_end() && text_[pos_] == '@') {
      ++pos_;
      std::string tag;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-')) {
        tag += text_[pos_++];
      }
      if (tag.empty()) fail("empty language tag");
      Term t = Term::literal(std::move(lexical));
      t.lang = std::move(tag);
      return t;
    }
    return Term::literal(std::move(lexical));
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string Term::to_ntriples() const {
  if (kind == Kind::Iri) return '<' + value + '>';
  std::string out = '"' + detail::escape_literal(value) + '"';
  if (!lang.empty()) return out + '@' + lang;
  if (!datatype.empty()) out += "^^<" + datatype + '>';
  return out;
}

/// One triple per line, LF endings.
inline std::string to_ntriples(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    out += t.to_ntriples();
    out += '\n';
  }
  return out;
}

inline std::vector<Triple> parse_ntriples(std::string_view text) {
  std::vector<Triple> triples;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);

    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;

    detail::NTriplesReader reader(line, line_no);
    Triple t{reader.read_term(), reader.read_term(), reader.read_term()};
    if (!t.subject.is_iri() || !t.predicate.is_iri()) {
      throw ParseFailure(ErrorCode::ParseError,
                         "N-Triples line " + std::to_string(line_no) + ": subject and predicate must be IRIs", 0,
                         line_no, 1);
    }
    reader.expect_dot();
    triples.push_back(std::move(t));
  }
  return triples;
}

}  // namespace bcl

template <>
struct std::hash<bcl::Term> {
  std::size_t operator()(const bcl::Term& t) const noexcept {
    std::size_t h = std::hash<std::string>{}(t.value);
    h ^= std::hash<std::string>{}(t.datatype) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<std::string>{}(t.lang) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h ^ static_cast<std::size_t>(t.kind);
  }
};

template <>
struct std::hash<bcl::Triple> {
  std::size_t operator()(const bcl::Triple& t) const noexcept {
    std::hash<bcl::Term> h;
    std::size_t out = h(t.subject);
    out ^= h(t.predicate) + 0x9e3779b97f4a7c15ULL + (out << 6) + (out >> 2);
    out ^= h(t.object) + 0x9e3779b97f4a7c15ULL + (out << 6) + (out >> 2);
    return out;
  }
};
