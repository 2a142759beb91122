#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bcl/default_context.hpp"
#include "bcl/error.hpp"

namespace bcl {

/// Terms every context must define.
inline constexpr std::array<std::string_view, 10> kRequiredTerms = {
    "RatedCapacity",      "Manufacturer",       "PositiveElectrode", "NegativeElectrode",
    "LowerCutoffVoltage", "UpperCutoffVoltage", "CRate",             "Ampere",
    "Volt",               "Second"};

/// Names classified as units rather than vocabulary terms.
inline constexpr std::array<std::string_view, 6> kUnitNames = {
    "CRate", "Ampere", "Volt", "Second", "AmpereHour", "DegreeCelsius"};

/// Well-known vocabulary filled in when a context file leaves it out.
inline const std::map<std::string, std::string>& standard_terms() {
  static const std::map<std::string, std::string> terms = {
      {"type", "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"},
      {"name", "https://schema.org/name"},
      {"citation", "https://schema.org/citation"},
      {"subjectOf", "https://schema.org/subjectOf"},
      {"isReferencedBy", "http://purl.org/dc/terms/isReferencedBy"},
      {"value", "http://www.w3.org/1999/02/22-rdf-syntax-ns#value"},
  };
  return terms;
}

inline bool is_absolute_iri(std::string_view iri) {
  auto colon = iri.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  if (!alpha(iri[0])) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    char c = iri[i];
    if (!alpha(c) && !(c >= '0' && c <= '9') && c != '+' && c != '-' && c != '.') return false;
  }
  for (char c : iri) {
    if (c == ' ' || c == '<' || c == '>' || c == '"' || c == '\n' || c == '\t') return false;
  }
  return true;
}

/// Term -> IRI mapping that grounds every emitted key and predicate.
struct ContextMap {
  std::map<std::string, std::string> entries;
  std::map<std::string, std::string> unit_entries;

  std::optional<std::string> iri(std::string_view term) const {
    if (auto it = entries.find(std::string(term)); it != entries.end()) return it->second;
    if (auto it = unit_entries.find(std::string(term)); it != unit_entries.end()) return it->second;
    return std::nullopt;
  }

  const std::string& require(std::string_view term) const {
    if (auto it = entries.find(std::string(term)); it != entries.end()) return it->second;
    if (auto it = unit_entries.find(std::string(term)); it != unit_entries.end()) return it->second;
    throw Error(ErrorCode::MissingContextTerm, std::string(term));
  }

  /// Reverse lookup; the first term (in sorted order) mapped to the IRI.
  std::optional<std::string> term_for(std::string_view iri_value) const {
    for (const auto& [term, mapped] : entries) {
      if (mapped == iri_value) return term;
    }
    for (const auto& [term, mapped] : unit_entries) {
      if (mapped == iri_value) return term;
    }
    return std::nullopt;
  }

  bool contains_iri(std::string_view iri_value) const { return term_for(iri_value).has_value(); }
};

inline ContextMap parse_context(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseFailure(ErrorCode::ParseError, e.what(), e.byte);
  }
  if (!doc.is_object()) throw Error(ErrorCode::TypeMismatch, "context: expected a JSON object");
  // Accept either a bare term map or a JSON-LD document wrapping one.
  if (auto it = doc.find("@context"); it != doc.end() && it->is_object()) doc = *it;

  ContextMap ctx;
  for (const auto& [term, value] : doc.items()) {
    if (!term.empty() && term.front() == '@') continue;
    if (!value.is_string()) throw Error(ErrorCode::TypeMismatch, "context term \"" + term + "\": expected an IRI string");
    const auto& iri = value.get_ref<const std::string&>();
    if (!is_absolute_iri(iri)) throw Error(ErrorCode::BadIri, "context term \"" + term + "\": " + iri);
    bool is_unit = std::find(kUnitNames.begin(), kUnitNames.end(), term) != kUnitNames.end();
    (is_unit ? ctx.unit_entries : ctx.entries)[term] = iri;
  }
  for (auto term : kRequiredTerms) {
    if (!ctx.iri(term)) throw Error(ErrorCode::IncompleteContext, std::string(term));
  }
  for (const auto& [term, iri] : standard_terms()) ctx.entries.emplace(term, iri);
  return ctx;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ContextMap load_context(const std::filesystem::path& path) { return parse_context(read_file(path)); }

inline const ContextMap& default_context() {
  static const ContextMap ctx = parse_context(kDefaultContextJson);
  return ctx;
}

}  // namespace bcl
