#pragma once

// Cell datasheet records: JSON-LD ingestion, expansion into triples, and the
// inverse mapping.
//
// Triple mapping (emitted in this order):
//   1. <id> type BatteryCell
//   2. <id> Manufacturer "..."
//   3. <id> name "..."                        (product name)
//   4. <id> RatedCapacity "x"^^<AmpereHour>
//   5. <id> LowerCutoffVoltage "x"^^<Volt>
//   6. <id> UpperCutoffVoltage "x"^^<Volt>
//   7. <id> MinimumTemperature "x"^^<DegreeCelsius>   if present
//   8. <id> MaximumTemperature "x"^^<DegreeCelsius>   if present
//   9. <id> PositiveElectrode "..."                     if present
//  10. <id> NegativeElectrode "..."                     if present
//  11. <id> citation "..."                              if present
//  12. <id> isReferencedBy "doi"                        one per DOI, sorted
//  13. extension triples, sorted by (predicate, object)
// Predicates and unit datatypes are the context IRIs of the named terms.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcl/context.hpp"
#include "bcl/detail/json.hpp"
#include "bcl/error.hpp"
#include "bcl/rdf.hpp"

namespace bcl {

/// Predicate namespace for record keys that no context maps.
inline constexpr std::string_view kExtensionNamespace = "https://example.org/bcl/ext#";

struct Extension {
  std::string predicate;
  Term object;

  auto operator<=>(const Extension&) const = default;
  bool operator==(const Extension&) const = default;
};

struct CellRecord {
  std::string id;
  std::string manufacturer;
  std::string product_name;
  double rated_capacity_ah = 0.0;
  double lower_cutoff_v = 0.0;
  double upper_cutoff_v = 0.0;
  std::optional<double> temp_min_c;
  std::optional<double> temp_max_c;
  std::optional<std::string> positive_material;
  std::optional<std::string> negative_material;
  std::optional<std::string> citation;
  /// Lower-cased, unique, sorted.
  std::vector<std::string> paper_dois;
  /// Facts without a dedicated field, sorted.
  std::vector<Extension> extensions;

  bool operator==(const CellRecord&) const = default;
};

/// Lower-cases and strips resolver prefixes ("https://doi.org/", "doi:").
inline std::string normalize_doi(std::string_view doi) {
  std::string out;
  out.reserve(doi.size());
  for (char c : doi) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  std::size_t lead = 0;
  while (lead < out.size() && std::isspace(static_cast<unsigned char>(out[lead]))) ++lead;
  out.erase(0, lead);
  for (std::string_view prefix : {"https://doi.org/", "http://doi.org/", "https://dx.doi.org/",
                                  "http://dx.doi.org/", "doi:"}) {
    if (out.rfind(prefix, 0) == 0) {
      out.erase(0, prefix.size());
      break;
    }
  }
  return out;
}

inline void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

/// Restores the ordering invariants on DOIs and extensions.
inline void canonicalize(CellRecord& r) {
  for (auto& doi : r.paper_dois) doi = normalize_doi(doi);
  sort_unique(r.paper_dois);
  std::sort(r.extensions.begin(), r.extensions.end());
  r.extensions.erase(std::unique(r.extensions.begin(), r.extensions.end()), r.extensions.end());
}

inline void validate_cell_record(const CellRecord& r) {
  if (r.id.empty()) throw Error(ErrorCode::MissingId, "cell record has no @id");
  if (!is_absolute_iri(r.id)) throw Error(ErrorCode::BadIri, r.id);
  if (!(r.rated_capacity_ah > 0.0)) throw Error(ErrorCode::BadCapacity, r.id);
  if (!(r.lower_cutoff_v < r.upper_cutoff_v)) throw Error(ErrorCode::BadVoltageWindow, r.id);
}

namespace detail {

enum class FieldKind { Text, Number, DoiList };

struct FieldSpec {
  std::string_view term;
  FieldKind kind;
  std::string_view unit;  // Number fields only
};

inline constexpr std::array<FieldSpec, 10> kCellFields = {{
    {"Manufacturer", FieldKind::Text, ""},
    {"name", FieldKind::Text, ""},
    {"RatedCapacity", FieldKind::Number, "AmpereHour"},
    {"LowerCutoffVoltage", FieldKind::Number, "Volt"},
    {"UpperCutoffVoltage", FieldKind::Number, "Volt"},
    {"MinimumTemperature", FieldKind::Number, "DegreeCelsius"},
    {"MaximumTemperature", FieldKind::Number, "DegreeCelsius"},
    {"PositiveElectrode", FieldKind::Text, ""},
    {"NegativeElectrode", FieldKind::Text, ""},
    {"citation", FieldKind::Text, ""},
}};

inline constexpr std::string_view kDoiTerm = "isReferencedBy";

/// Writable view of a record field by term.
struct FieldRef {
  std::string* text = nullptr;
  std::optional<std::string>* optional_text = nullptr;
  double* number = nullptr;
  std::optional<double>* optional_number = nullptr;
};

inline FieldRef field_of(CellRecord& r, std::string_view term) {
  if (term == "Manufacturer") return {&r.manufacturer, nullptr, nullptr, nullptr};
  if (term == "name") return {&r.product_name, nullptr, nullptr, nullptr};
  if (term == "RatedCapacity") return {nullptr, nullptr, &r.rated_capacity_ah, nullptr};
  if (term == "LowerCutoffVoltage") return {nullptr, nullptr, &r.lower_cutoff_v, nullptr};
  if (term == "UpperCutoffVoltage") return {nullptr, nullptr, &r.upper_cutoff_v, nullptr};
  if (term == "MinimumTemperature") return {nullptr, nullptr, nullptr, &r.temp_min_c};
  if (term == "MaximumTemperature") return {nullptr, nullptr, nullptr, &r.temp_max_c};
  if (term == "PositiveElectrode") return {nullptr, &r.positive_material, nullptr, nullptr};
  if (term == "NegativeElectrode") return {nullptr, &r.negative_material, nullptr, nullptr};
  if (term == "citation") return {nullptr, &r.citation, nullptr, nullptr};
  return {};
}

inline const FieldSpec* field_for_key(std::string_view key, const ContextMap& ctx) {
  for (const auto& f : kCellFields) {
    if (key == f.term) return &f;
    if (auto iri = ctx.iri(f.term); iri && *iri == key) return &f;
  }
  return nullptr;
}

inline bool is_doi_key(std::string_view key, const ContextMap& ctx) {
  if (key == kDoiTerm) return true;
  auto iri = ctx.iri(kDoiTerm);
  return iri && *iri == key;
}

inline Term json_to_term(const Json& v) {
  if (v.is_string()) return Term::literal(v.get<std::string>());
  if (v.is_boolean()) return Term::typed(v.get<bool>() ? "true" : "false", std::string(kXsdBoolean));
  if (v.is_number()) return Term::number(v.get<double>());
  if (v.is_object() && v.size() == 1 && v.contains("@id") && v["@id"].is_string()) {
    return Term::iri(v["@id"].get<std::string>());
  }
  if (v.is_object() && v.contains("@value") && v["@value"].is_string()) {
    Term t = Term::literal(v["@value"].get<std::string>());
    if (auto lang = v.find("@language"); lang != v.end() && lang->is_string()) t.lang = lang->get<std::string>();
    else if (auto type = v.find("@type"); type != v.end() && type->is_string()) t.datatype = type->get<std::string>();
    return t;
  }
  return Term::typed(v.dump(), std::string(kRdfJson));
}

inline Json term_to_json(const Term& t) {
  if (t.is_iri()) return Json{{"@id", t.value}};
  if (t.datatype == kXsdBoolean) return Json(t.value == "true");
  if (t.datatype == kXsdDouble) {
    if (auto v = t.numeric()) return Json(*v);
  }
  if (t.datatype == kRdfJson) {
    try {
      return Json::parse(t.value);
    } catch (const nlohmann::json::parse_error&) {
    }
  }
  if (t.datatype.empty() && t.lang.empty()) return Json(t.value);
  Json out{{"@value", t.value}};
  if (!t.lang.empty()) out["@language"] = t.lang;
  else out["@type"] = t.datatype;
  return out;
}

inline double record_number(const Json& v, const FieldSpec& f, const ContextMap& ctx, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_object()) {
    const Json* value = nullptr;
    if (auto it = v.find("value"); it != v.end()) value = &*it;
    if (auto it = v.find("@value"); it != v.end()) value = &*it;
    if (value != nullptr && value->is_number()) {
      if (auto unit = v.find("unit"); unit != v.end()) {
        const auto expected = ctx.iri(f.unit);
        const bool ok = unit->is_string() && (*unit == std::string(f.unit) || (expected && *unit == *expected));
        if (!ok) throw Error(ErrorCode::TypeMismatch, where + ": " + std::string(f.term) + " must be in " + std::string(f.unit));
      }
      return value->get<double>();
    }
  }
  throw Error(ErrorCode::TypeMismatch, where + ": " + std::string(f.term) + " must be a number");
}

inline std::string record_text(const Json& v, const FieldSpec& f, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object()) {
    for (const char* key : {"name", "@value"}) {
      if (auto it = v.find(key); it != v.end() && it->is_string()) return it->get<std::string>();
    }
  }
  throw Error(ErrorCode::TypeMismatch, where + ": " + std::string(f.term) + " must be a string");
}

}  // namespace detail

/// Reads one cell record. Keys match either a context term or its IRI; keys
/// that match no field become extension facts (predicate taken from the
/// document's own @context, the supplied context, the key itself when it is
/// an absolute IRI, or the extension namespace).
inline CellRecord parse_cell_record(std::string_view doc_text, const ContextMap& ctx) {
  const Json doc = detail::parse_json_strict(doc_text);
  if (!doc.is_object()) throw Error(ErrorCode::TypeMismatch, "cell record: expected a JSON object");
  auto id_it = doc.find("@id");
  if (id_it == doc.end()) throw Error(ErrorCode::MissingId, "cell record has no @id");
  if (!id_it->is_string()) throw Error(ErrorCode::TypeMismatch, "@id must be a string");

  CellRecord r;
  r.id = id_it->get<std::string>();
  const std::string& where = r.id;

  std::map<std::string, std::string> local_context;
  if (auto it = doc.find("@context"); it != doc.end() && it->is_object()) {
    for (const auto& [term, def] : it->items()) {
      if (def.is_string()) local_context[term] = def.get<std::string>();
      else if (def.is_object() && def.contains("@id") && def["@id"].is_string()) local_context[term] = def["@id"].get<std::string>();
    }
  }

  const std::string type_iri = ctx.require("type");
  const std::string cell_iri = ctx.require("BatteryCell");
  bool seen_capacity = false, seen_lower = false, seen_upper = false;

  for (const auto& [key, value] : doc.items()) {
    if (key == "@id" || key == "@context") continue;
    if (key == "@type") {
      std::vector<Json> types = value.is_array() ? std::vector<Json>(value.begin(), value.end()) : std::vector<Json>{value};
      for (const auto& t : types) {
        if (!t.is_string()) throw Error(ErrorCode::TypeMismatch, where + ": @type must be a string");
        const auto& s = t.get_ref<const std::string&>();
        if (s == "BatteryCell" || s == cell_iri) continue;
        std::string iri = ctx.iri(s).value_or(s);
        if (auto lit = local_context.find(s); lit != local_context.end()) iri = lit->second;
        r.extensions.push_back({type_iri, Term::iri(iri)});
      }
      continue;
    }
    if (detail::is_doi_key(key, ctx)) {
      std::vector<Json> dois = value.is_array() ? std::vector<Json>(value.begin(), value.end()) : std::vector<Json>{value};
      for (const auto& d : dois) {
        if (!d.is_string()) throw Error(ErrorCode::TypeMismatch, where + ": DOIs must be strings");
        r.paper_dois.push_back(d.get<std::string>());
      }
      continue;
    }
    if (const auto* field = detail::field_for_key(key, ctx)) {
      auto ref = detail::field_of(r, field->term);
      if (field->kind == detail::FieldKind::Number) {
        const double v = detail::record_number(value, *field, ctx, where);
        if (ref.number) *ref.number = v;
        else *ref.optional_number = v;
        seen_capacity |= field->term == "RatedCapacity";
        seen_lower |= field->term == "LowerCutoffVoltage";
        seen_upper |= field->term == "UpperCutoffVoltage";
      } else {
        std::string v = detail::record_text(value, *field, where);
        if (ref.text) *ref.text = std::move(v);
        else *ref.optional_text = std::move(v);
      }
      continue;
    }

    std::string predicate;
    if (auto lit = local_context.find(key); lit != local_context.end()) predicate = lit->second;
    else if (auto iri = ctx.iri(key)) predicate = *iri;
    else if (is_absolute_iri(key)) predicate = key;
    else predicate = std::string(kExtensionNamespace) + key;
    if (value.is_array()) {
      for (const auto& v : value) r.extensions.push_back({predicate, detail::json_to_term(v)});
    } else {
      r.extensions.push_back({predicate, detail::json_to_term(value)});
    }
  }

  if (!seen_capacity) throw Error(ErrorCode::BadCapacity, where + ": RatedCapacity missing");
  if (r.manufacturer.empty()) throw Error(ErrorCode::MissingField, where + ": Manufacturer missing");
  if (r.product_name.empty()) throw Error(ErrorCode::MissingField, where + ": name missing");
  if (!seen_lower || !seen_upper) throw Error(ErrorCode::MissingField, where + ": cutoff voltages missing");
  canonicalize(r);
  validate_cell_record(r);
  return r;
}

/// Number of triples cell_record_to_triples emits for a record.
inline std::size_t expected_triple_count(const CellRecord& r) {
  std::size_t numeric = 3 + (r.temp_min_c ? 1 : 0) + (r.temp_max_c ? 1 : 0);
  std::size_t materials = (r.positive_material ? 1 : 0) + (r.negative_material ? 1 : 0);
  return 3 + numeric + materials + (r.citation ? 1 : 0) + r.paper_dois.size() + r.extensions.size();
}

inline std::vector<Triple> cell_record_to_triples(const CellRecord& r, const ContextMap& ctx) {
  std::vector<Triple> out;
  out.reserve(expected_triple_count(r));
  const Term subject = Term::iri(r.id);
  auto emit = [&](std::string_view term, Term object) {
    out.push_back({subject, Term::iri(ctx.require(term)), std::move(object)});
  };
  emit("type", Term::iri(ctx.require("BatteryCell")));
  emit("Manufacturer", Term::literal(r.manufacturer));
  emit("name", Term::literal(r.product_name));
  emit("RatedCapacity", Term::number(r.rated_capacity_ah, ctx.require("AmpereHour")));
  emit("LowerCutoffVoltage", Term::number(r.lower_cutoff_v, ctx.require("Volt")));
  emit("UpperCutoffVoltage", Term::number(r.upper_cutoff_v, ctx.require("Volt")));
  if (r.temp_min_c) emit("MinimumTemperature", Term::number(*r.temp_min_c, ctx.require("DegreeCelsius")));
  if (r.temp_max_c) emit("MaximumTemperature", Term::number(*r.temp_max_c, ctx.require("DegreeCelsius")));
  if (r.positive_material) emit("PositiveElectrode", Term::literal(*r.positive_material));
  if (r.negative_material) emit("NegativeElectrode", Term::literal(*r.negative_material));
  if (r.citation) emit("citation", Term::literal(*r.citation));
  for (const auto& doi : r.paper_dois) emit(detail::kDoiTerm, Term::literal(doi));
  for (const auto& ext : r.extensions) out.push_back({subject, Term::iri(ext.predicate), ext.object});
  return out;
}

/// Inverse of cell_record_to_triples. The subject is the single resource
/// typed BatteryCell; triples about other subjects are ignored.
inline CellRecord triples_to_cell_record(const std::vector<Triple>& triples, const ContextMap& ctx) {
  const Term type_pred = Term::iri(ctx.require("type"));
  const Term cell_type = Term::iri(ctx.require("BatteryCell"));

  std::vector<Term> subjects;
  for (const auto& t : triples) {
    if (t.predicate == type_pred && t.object == cell_type &&
        std::find(subjects.begin(), subjects.end(), t.subject) == subjects.end()) {
      subjects.push_back(t.subject);
    }
  }
  if (subjects.size() != 1) {
    throw Error(ErrorCode::AmbiguousSubject, std::to_string(subjects.size()) + " BatteryCell subjects");
  }

  CellRecord r;
  r.id = subjects.front().value;
  std::map<std::string_view, Term> single;
  const std::string doi_iri = ctx.require(detail::kDoiTerm);

  for (const auto& t : triples) {
    if (t.subject != subjects.front()) continue;
    if (t.predicate == type_pred && t.object == cell_type) continue;
    if (t.predicate.value == doi_iri && t.object.is_literal()) {
      r.paper_dois.push_back(t.object.value);
      continue;
    }
    const detail::FieldSpec* field = nullptr;
    for (const auto& f : detail::kCellFields) {
      if (auto iri = ctx.iri(f.term); iri && *iri == t.predicate.value) field = &f;
    }
    if (field == nullptr || !t.object.is_literal()) {
      r.extensions.push_back({t.predicate.value, t.object});
      continue;
    }
    auto [it, inserted] = single.emplace(field->term, t.object);
    if (!inserted && it->second != t.object) {
      throw Error(ErrorCode::ConflictingField, r.id + ": " + std::string(field->term));
    }
  }

  auto require_field = [&](std::string_view term) -> const Term& {
    auto it = single.find(term);
    if (it == single.end()) {
      if (term == "RatedCapacity") throw Error(ErrorCode::BadCapacity, r.id + ": RatedCapacity missing");
      throw Error(ErrorCode::MissingField, r.id + ": " + std::string(term));
    }
    return it->second;
  };
  for (const auto& f : detail::kCellFields) {
    auto ref = detail::field_of(r, f.term);
    const bool required = ref.text != nullptr || ref.number != nullptr;
    if (!required && !single.contains(f.term)) continue;
    const Term& object = require_field(f.term);
    if (f.kind == detail::FieldKind::Number) {
      const std::string unit = ctx.require(f.unit);
      auto v = object.numeric();
      if (!v || object.datatype != unit) {
        throw Error(ErrorCode::TypeMismatch, r.id + ": " + std::string(f.term) + " must be a number in " + std::string(f.unit));
      }
      if (ref.number) *ref.number = *v;
      else *ref.optional_number = *v;
    } else {
      if (ref.text) *ref.text = object.value;
      else *ref.optional_text = object.value;
    }
  }
  canonicalize(r);
  validate_cell_record(r);
  return r;
}

/// JSON-LD document for a record; its @context covers every key used.
inline std::string emit_cell_record_jsonld(const CellRecord& r, const ContextMap& ctx) {
  Json context = Json::object();
  Json body = Json::object();
  body["@id"] = r.id;
  body["@type"] = "BatteryCell";
  context["BatteryCell"] = ctx.require("BatteryCell");

  auto put_text = [&](std::string_view term, const std::string& v) {
    context[std::string(term)] = ctx.require(term);
    body[std::string(term)] = v;
  };
  auto put_number = [&](std::string_view term, std::string_view unit, double v) {
    context[std::string(term)] = Json{{"@id", ctx.require(term)}, {"@type", ctx.require(unit)}};
    body[std::string(term)] = v;
  };
  put_text("Manufacturer", r.manufacturer);
  put_text("name", r.product_name);
  put_number("RatedCapacity", "AmpereHour", r.rated_capacity_ah);
  put_number("LowerCutoffVoltage", "Volt", r.lower_cutoff_v);
  put_number("UpperCutoffVoltage", "Volt", r.upper_cutoff_v);
  if (r.temp_min_c) put_number("MinimumTemperature", "DegreeCelsius", *r.temp_min_c);
  if (r.temp_max_c) put_number("MaximumTemperature", "DegreeCelsius", *r.temp_max_c);
  if (r.positive_material) put_text("PositiveElectrode", *r.positive_material);
  if (r.negative_material) put_text("NegativeElectrode", *r.negative_material);
  if (r.citation) put_text("citation", *r.citation);
  if (!r.paper_dois.empty()) {
    context[std::string(detail::kDoiTerm)] = ctx.require(detail::kDoiTerm);
    body[std::string(detail::kDoiTerm)] = r.paper_dois;
  }

  // Extension predicates get a context term: the mapped term if the context
  // knows the IRI, otherwise the IRI's local name (suffixed on collision).
  std::map<std::string, std::string> term_of_predicate;
  for (const auto& ext : r.extensions) {
    if (term_of_predicate.contains(ext.predicate)) continue;
    std::string term = ctx.term_for(ext.predicate).value_or("");
    if (term.empty() || (context.contains(term) && !(context[term].is_string() && context[term] == ext.predicate))) {
      auto cut = ext.predicate.find_last_of("#/");
      std::string base = cut == std::string::npos ? "ext" : ext.predicate.substr(cut + 1);
      if (base.empty()) base = "ext";
      term = base;
      for (int n = 2; context.contains(term) && context[term] != ext.predicate; ++n) term = base + std::to_string(n);
    }
    context[term] = ext.predicate;
    term_of_predicate[ext.predicate] = term;
  }
  for (const auto& ext : r.extensions) {
    const std::string& term = term_of_predicate[ext.predicate];
    Json value = detail::term_to_json(ext.object);
    if (!body.contains(term)) {
      body[term] = value;
    } else {
      if (!body[term].is_array()) body[term] = Json::array({body[term]});
      body[term].push_back(value);
    }
  }

  Json doc = Json::object();
  doc["@context"] = std::move(context);
  for (auto& [key, value] : body.items()) doc[key] = std::move(value);
  return doc.dump(2) + "\n";
}

/// All *.json / *.jsonld records in a directory, in filename order.
inline std::vector<CellRecord> load_cell_records(const std::filesystem::path& dir, const ContextMap& ctx) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".json" || ext == ".jsonld")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<CellRecord> records;
  for (const auto& f : files) {
    try {
      records.push_back(parse_cell_record(read_file(f), ctx));
    } catch (const ParseFailure& e) {
      throw ParseFailure(e.code(), f.filename().string() + ": " + e.what(), e.position());
    } catch (const Error& e) {
      throw Error(e.code(), f.filename().string() + ": " + e.what());
    }
  }
  return records;
}

}  // namespace bcl
