#pragma once

// Battery Cycler Language document model: parsing, validation and
// canonical serialization of protocol files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bcl/detail/json.hpp"
#include "bcl/error.hpp"

namespace bcl {

enum class StepKind { ElectricCurrent, Voltage, Rest };
enum class TerminationKind { Voltage, ElectricCurrent, Time };
enum class Unit { CRate, Ampere, Volt, Second };

constexpr std::string_view to_string(StepKind kind) {
  switch (kind) {
    case StepKind::ElectricCurrent: return "ElectricCurrent";
    case StepKind::Voltage: return "Voltage";
    case StepKind::Rest: return "Rest";
  }
  return "";
}

constexpr std::string_view to_string(TerminationKind kind) {
  switch (kind) {
    case TerminationKind::Voltage: return "Voltage";
    case TerminationKind::ElectricCurrent: return "ElectricCurrent";
    case TerminationKind::Time: return "Time";
  }
  return "";
}

constexpr std::string_view to_string(Unit unit) {
  switch (unit) {
    case Unit::CRate: return "CRate";
    case Unit::Ampere: return "Ampere";
    case Unit::Volt: return "Volt";
    case Unit::Second: return "Second";
  }
  return "";
}

inline std::optional<StepKind> step_kind_from_string(std::string_view s) {
  if (s == "ElectricCurrent") return StepKind::ElectricCurrent;
  if (s == "Voltage") return StepKind::Voltage;
  if (s == "Rest") return StepKind::Rest;
  return std::nullopt;
}

inline std::optional<TerminationKind> termination_kind_from_string(std::string_view s) {
  if (s == "Voltage") return TerminationKind::Voltage;
  if (s == "ElectricCurrent") return TerminationKind::ElectricCurrent;
  if (s == "Time") return TerminationKind::Time;
  return std::nullopt;
}

inline std::optional<Unit> unit_from_string(std::string_view s) {
  if (s == "CRate") return Unit::CRate;
  if (s == "Ampere") return Unit::Ampere;
  if (s == "Volt") return Unit::Volt;
  if (s == "Second") return Unit::Second;
  return std::nullopt;
}

/// Reserved parameter names and the unit each one is implicitly given in.
inline constexpr std::string_view kCapacity = "Capacity";
inline constexpr std::string_view kLowerCutoffVoltage = "LowerCutoffVoltage";
inline constexpr std::string_view kUpperCutoffVoltage = "UpperCutoffVoltage";
inline constexpr std::string_view kAmpereHour = "AmpereHour";

inline std::optional<std::string_view> reserved_parameter_unit(std::string_view name) {
  if (name == kCapacity) return kAmpereHour;
  if (name == kLowerCutoffVoltage || name == kUpperCutoffVoltage) return to_string(Unit::Volt);
  return std::nullopt;
}

/// Units a parameter may declare in object form.
inline bool is_parameter_unit(std::string_view s) {
  return unit_from_string(s).has_value() || s == kAmpereHour;
}

/// Either a literal number or the name of an entry in Protocol::parameters.
class ValueRef {
 public:
  ValueRef() = default;
  ValueRef(double literal) : value_(literal) {}  // NOLINT(google-explicit-constructor)
  ValueRef(std::string parameter) : value_(std::move(parameter)) {}  // NOLINT
  ValueRef(const char* parameter) : value_(std::string(parameter)) {}  // NOLINT

  bool is_literal() const { return std::holds_alternative<double>(value_); }
  double literal() const { return std::get<double>(value_); }
  const std::string& parameter() const { return std::get<std::string>(value_); }

  bool operator==(const ValueRef&) const = default;

 private:
  std::variant<double, std::string> value_ = 0.0;
};

struct Termination {
  TerminationKind kind = TerminationKind::Voltage;
  ValueRef value;
  Unit unit = Unit::Volt;

  bool operator==(const Termination&) const = default;
};

struct Step {
  StepKind kind = StepKind::ElectricCurrent;
  ValueRef value;
  Unit unit = Unit::Ampere;
  std::vector<Termination> terminations;

  bool operator==(const Step&) const = default;
};

struct InstructionBlock {
  std::vector<Step> sequence;
  std::optional<std::string> name;
  std::int64_t repeat = 1;

  bool operator==(const InstructionBlock&) const = default;
};

struct Parameter {
  std::string name;
  double value = 0.0;
  /// Set only when the document used the {"value": n, "unit": u} form.
  std::optional<std::string> unit;

  bool operator==(const Parameter&) const = default;
};

struct Protocol {
  std::string name;
  std::optional<std::string> subject_of;
  std::optional<std::string> id;
  std::optional<std::string> citation;
  std::vector<Parameter> parameters;
  std::vector<InstructionBlock> instructions;
  /// Unrecognized top-level keys, kept verbatim in document order.
  Json extensions = Json::object();

  const Parameter* find_parameter(std::string_view key) const {
    auto it = std::find_if(parameters.begin(), parameters.end(),
                           [&](const Parameter& p) { return p.name == key; });
    return it == parameters.end() ? nullptr : &*it;
  }

  bool operator==(const Protocol&) const = default;
};

struct Finding {
  std::string code;
  std::string path;
  std::string message;

  bool operator==(const Finding&) const = default;
};

struct ValidationReport {
  std::vector<Finding> errors;
  std::vector<Finding> warnings;

  bool ok() const { return errors.empty(); }
  bool has_error(std::string_view code) const {
    return std::any_of(errors.begin(), errors.end(), [&](const Finding& f) { return f.code == code; });
  }
  bool has_warning(std::string_view code) const {
    return std::any_of(warnings.begin(), warnings.end(),
                       [&](const Finding& f) { return f.code == code; });
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string block_path(std::size_t b) { return "instructions[" + std::to_string(b) + "]"; }
inline std::string step_path(std::size_t b, std::size_t s) {
  return block_path(b) + ".sequence[" + std::to_string(s) + "]";
}
inline std::string termination_path(std::size_t b, std::size_t s, std::size_t t) {
  return step_path(b, s) + ".termination[" + std::to_string(t) + "]";
}

inline const std::string& expect_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw Error(ErrorCode::TypeMismatch, path + ": expected a string");
  return j.get_ref<const std::string&>();
}

inline double expect_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw Error(ErrorCode::TypeMismatch, path + ": expected a number");
  return j.get<double>();
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::MissingField, path + ": missing \"" + key + "\"");
  return *it;
}

inline ValueRef parse_value_ref(const Json& j, const std::string& path) {
  if (j.is_number()) return ValueRef(j.get<double>());
  if (j.is_string()) return ValueRef(j.get<std::string>());
  throw Error(ErrorCode::TypeMismatch, path + ": expected a number or a parameter name");
}

inline Unit parse_unit(const Json& j, const std::string& path) {
  const auto& s = expect_string(j, path);
  auto unit = unit_from_string(s);
  if (!unit) throw Error(ErrorCode::UnknownUnit, path + ": unknown unit \"" + s + "\"");
  return *unit;
}

inline Termination parse_termination(const Json& j, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::TypeMismatch, path + ": expected an object");
  Termination t;
  for (const auto& [key, value] : j.items()) {
    if (key != "type" && key != "value" && key != "unit") {
      throw Error(ErrorCode::UnknownField, path + ": unknown key \"" + key + "\"");
    }
  }
  const auto& type = expect_string(require(j, "type", path), path + ".type");
  auto kind = termination_kind_from_string(type);
  if (!kind) throw Error(ErrorCode::UnknownKind, path + ".type: unknown termination type \"" + type + "\"");
  t.kind = *kind;
  t.value = parse_value_ref(require(j, "value", path), path + ".value");
  t.unit = parse_unit(require(j, "unit", path), path + ".unit");
  return t;
}

inline Step parse_step(const Json& j, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::TypeMismatch, path + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "repeat") {
      throw Error(ErrorCode::InvalidRepeat,
                  path + ": \"repeat\" belongs on the instruction block, not on a step");
    }
    if (key != "type" && key != "value" && key != "unit" && key != "termination") {
      throw Error(ErrorCode::UnknownField, path + ": unknown key \"" + key + "\"");
    }
  }
  Step s;
  const auto& type = expect_string(require(j, "type", path), path + ".type");
  auto kind = step_kind_from_string(type);
  if (!kind) throw Error(ErrorCode::UnknownKind, path + ".type: unknown step type \"" + type + "\"");
  s.kind = *kind;
  s.value = parse_value_ref(require(j, "value", path), path + ".value");
  s.unit = parse_unit(require(j, "unit", path), path + ".unit");
  if (auto it = j.find("termination"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::TypeMismatch, path + ".termination: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      s.terminations.push_back(
          parse_termination((*it)[i], path + ".termination[" + std::to_string(i) + "]"));
    }
  }
  return s;
}

inline InstructionBlock parse_block(const Json& j, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::TypeMismatch, path + ": expected an object");
  InstructionBlock block;
  for (const auto& [key, value] : j.items()) {
    if (key == "sequence") {
      if (!value.is_array()) throw Error(ErrorCode::TypeMismatch, path + ".sequence: expected an array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        block.sequence.push_back(parse_step(value[i], path + ".sequence[" + std::to_string(i) + "]"));
      }
    } else if (key == "name") {
      block.name = expect_string(value, path + ".name");
    } else if (key == "repeat") {
      if (!value.is_number_integer()) {
        throw Error(ErrorCode::TypeMismatch, path + ".repeat: expected an integer");
      }
      auto repeat = value.get<std::int64_t>();
      if (value.is_number_unsigned() && value.get<std::uint64_t>() > INT64_MAX) repeat = -1;
      if (repeat < 1) throw Error(ErrorCode::InvalidRepeat, path + ".repeat: must be at least 1");
      block.repeat = repeat;
    } else {
      throw Error(ErrorCode::UnknownField, path + ": unknown key \"" + key + "\"");
    }
  }
  return block;
}

inline Parameter parse_parameter(const std::string& name, const Json& j) {
  const std::string path = "parameters." + name;
  Parameter p{name, 0.0, std::nullopt};
  if (j.is_number()) {
    p.value = j.get<double>();
    return p;
  }
  if (!j.is_object()) throw Error(ErrorCode::TypeMismatch, path + ": expected a number or {value, unit}");
  for (const auto& [key, value] : j.items()) {
    if (key != "value" && key != "unit") {
      throw Error(ErrorCode::UnknownField, path + ": unknown key \"" + key + "\"");
    }
  }
  p.value = expect_number(require(j, "value", path), path + ".value");
  const auto& unit = expect_string(require(j, "unit", path), path + ".unit");
  if (!is_parameter_unit(unit)) throw Error(ErrorCode::UnknownUnit, path + ".unit: unknown unit \"" + unit + "\"");
  p.unit = unit;
  return p;
}

}  // namespace detail

/// Parses a BCL document. Throws ParseFailure for malformed JSON and Error
/// (UnknownKind, UnknownUnit, TypeMismatch, InvalidRepeat, ...) for
/// well-formed JSON that does not describe a protocol.
inline Protocol parse_protocol(std::string_view text) {
  const Json doc = detail::parse_json_strict(text);
  if (!doc.is_object()) throw Error(ErrorCode::TypeMismatch, "document: expected a JSON object");

  Protocol p;
  for (const auto& [key, value] : doc.items()) {
    if (key == "name") {
      p.name = detail::expect_string(value, "name");
    } else if (key == "subjectOf") {
      p.subject_of = detail::expect_string(value, "subjectOf");
    } else if (key == "id") {
      p.id = detail::expect_string(value, "id");
    } else if (key == "citation") {
      p.citation = detail::expect_string(value, "citation");
    } else if (key == "parameters") {
      if (!value.is_object()) throw Error(ErrorCode::TypeMismatch, "parameters: expected an object");
      for (const auto& [pname, pvalue] : value.items()) {
        p.parameters.push_back(detail::parse_parameter(pname, pvalue));
      }
    } else if (key == "instructions") {
      if (!value.is_array()) throw Error(ErrorCode::TypeMismatch, "instructions: expected an array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        p.instructions.push_back(detail::parse_block(value[i], detail::block_path(i)));
      }
    } else {
      p.extensions[key] = value;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool unit_fits_step(StepKind kind, Unit unit) {
  switch (kind) {
    case StepKind::ElectricCurrent: return unit == Unit::CRate || unit == Unit::Ampere;
    case StepKind::Voltage: return unit == Unit::Volt;
    case StepKind::Rest: return unit == Unit::Second;
  }
  return false;
}

inline Unit unit_for(TerminationKind kind) {
  switch (kind) {
    case TerminationKind::Voltage: return Unit::Volt;
    case TerminationKind::ElectricCurrent: return Unit::Ampere;
    case TerminationKind::Time: return Unit::Second;
  }
  return Unit::Second;
}

inline std::string_view parameter_unit(const Parameter& p) {
  if (auto reserved = reserved_parameter_unit(p.name)) return *reserved;
  return p.unit ? std::string_view(*p.unit) : std::string_view();
}

/// Resolves a reference against the protocol. Adds UNRESOLVED_PARAMETER or
/// PARAMETER_UNIT_MISMATCH findings and returns nullopt when it cannot.
inline std::optional<double> check_value_ref(const Protocol& p, const ValueRef& ref, Unit used_as,
                                             const std::string& path, ValidationReport& report) {
  if (ref.is_literal()) return ref.literal();
  const Parameter* param = p.find_parameter(ref.parameter());
  if (param == nullptr) {
    report.errors.push_back({"UNRESOLVED_PARAMETER", path,
                             "parameter \"" + ref.parameter() + "\" is not defined"});
    return std::nullopt;
  }
  auto declared = parameter_unit(*param);
  if (!declared.empty() && declared != to_string(used_as)) {
    report.errors.push_back({"PARAMETER_UNIT_MISMATCH", path,
                             "parameter \"" + param->name + "\" is in " + std::string(declared) +
                                 " but is used as " + std::string(to_string(used_as))});
    return std::nullopt;
  }
  return param->value;
}

}  // namespace detail

/// Checks every structural and referential invariant. Never throws.
inline ValidationReport validate_protocol(const Protocol& p) {
  ValidationReport report;
  auto error = [&](std::string code, std::string path, std::string message) {
    report.errors.push_back({std::move(code), std::move(path), std::move(message)});
  };
  auto warn = [&](std::string code, std::string path, std::string message) {
    report.warnings.push_back({std::move(code), std::move(path), std::move(message)});
  };

  if (p.name.empty()) error("EMPTY_NAME", "name", "protocol name must be non-empty");

  std::set<std::string> names;
  for (const auto& param : p.parameters) {
    const std::string path = "parameters." + param.name;
    if (!names.insert(param.name).second) {
      error("DUPLICATE_PARAMETER", path, "parameter defined more than once");
    }
    if (!std::isfinite(param.value)) error("NON_FINITE_PARAMETER", path, "value must be finite");
    if (auto reserved = reserved_parameter_unit(param.name)) {
      if (param.unit && *param.unit != *reserved) {
        error("RESERVED_PARAMETER_UNIT", path,
              "reserved parameter must be in " + std::string(*reserved) + ", got " + *param.unit);
      }
    } else if (!param.unit) {
      error("UNKNOWN_PARAMETER_UNIT", path,
            "non-reserved parameters need the {\"value\": n, \"unit\": u} form");
    }
  }

  const Parameter* capacity = p.find_parameter(kCapacity);
  const Parameter* lower = p.find_parameter(kLowerCutoffVoltage);
  const Parameter* upper = p.find_parameter(kUpperCutoffVoltage);
  if (capacity != nullptr && !(capacity->value > 0.0)) {
    error("INVALID_CAPACITY", "parameters.Capacity", "capacity must be positive");
  }
  if (lower != nullptr && upper != nullptr && !(lower->value < upper->value)) {
    error("INVALID_CUTOFF_WINDOW", "parameters",
          "LowerCutoffVoltage must be below UpperCutoffVoltage");
  }

  if (p.instructions.empty()) warn("EMPTY_INSTRUCTIONS", "instructions", "protocol has no instructions");
  for (const auto& [key, value] : p.extensions.items()) {
    warn("UNKNOWN_KEY", key, "unrecognized top-level key preserved verbatim");
  }

  for (std::size_t b = 0; b < p.instructions.size(); ++b) {
    const auto& block = p.instructions[b];
    if (block.repeat < 1) error("INVALID_REPEAT", detail::block_path(b), "repeat must be at least 1");
    if (block.sequence.empty()) {
      error("EMPTY_SEQUENCE", detail::block_path(b) + ".sequence", "sequence must contain a step");
    }
    for (std::size_t s = 0; s < block.sequence.size(); ++s) {
      const auto& step = block.sequence[s];
      const std::string path = detail::step_path(b, s);

      if (!detail::unit_fits_step(step.kind, step.unit)) {
        error("UNIT_MISMATCH", path,
              std::string(to_string(step.kind)) + " step cannot use unit " +
                  std::string(to_string(step.unit)));
      }

      if (step.kind == StepKind::Rest) {
        if (!step.terminations.empty()) {
          error("REST_HAS_TERMINATION", path, "rest steps carry their duration and take no termination");
        }
        if (!step.value.is_literal()) {
          error("REST_VALUE_NOT_LITERAL", path, "rest duration must be a literal number of seconds");
        } else if (!(step.value.literal() >= 0.0)) {
          error("NEGATIVE_DURATION", path, "rest duration must be non-negative");
        }
        continue;
      }

      if (step.terminations.empty()) {
        error("MISSING_TERMINATION", path, "non-rest steps need at least one termination");
      }

      if (step.kind == StepKind::ElectricCurrent) {
        if (step.unit == Unit::CRate && capacity == nullptr) {
          error("MISSING_CAPACITY", path, "CRate step requires the Capacity parameter");
        }
        auto value = detail::check_value_ref(
            p, step.value, step.unit == Unit::CRate ? Unit::CRate : Unit::Ampere, path, report);
        if (value && *value == 0.0) error("ZERO_CURRENT", path, "current step resolves to 0");
      } else if (detail::unit_fits_step(step.kind, step.unit)) {
        detail::check_value_ref(p, step.value, step.unit, path, report);
      }

      bool can_stop = false;
      for (std::size_t t = 0; t < step.terminations.size(); ++t) {
        const auto& term = step.terminations[t];
        const std::string tpath = detail::termination_path(b, s, t);
        if (term.unit != detail::unit_for(term.kind)) {
          error("UNIT_MISMATCH", tpath,
                std::string(to_string(term.kind)) + " termination cannot use unit " +
                    std::string(to_string(term.unit)));
          continue;
        }
        auto value = detail::check_value_ref(p, term.value, term.unit, tpath, report);
        if (term.kind == TerminationKind::Time) {
          can_stop = true;
          if (value && !(*value > 0.0)) error("INVALID_TIME_LIMIT", tpath, "time limit must be positive");
        }
        if (term.kind == TerminationKind::Voltage && step.kind == StepKind::ElectricCurrent) can_stop = true;
        if (term.kind == TerminationKind::ElectricCurrent && step.kind == StepKind::Voltage) can_stop = true;
        if (term.kind == TerminationKind::Voltage && value) {
          if (upper != nullptr && *value > upper->value) {
            warn("TERMINATION_ABOVE_UPPER_CUTOFF", tpath, "voltage termination exceeds UpperCutoffVoltage");
          }
          if (lower != nullptr && *value < lower->value) {
            warn("TERMINATION_BELOW_LOWER_CUTOFF", tpath, "voltage termination is below LowerCutoffVoltage");
          }
        }
      }
      if (!step.terminations.empty() && !can_stop) {
        warn("NO_STOP_CONDITION", path,
             "no termination can end this step kind; only the step duration cap will stop it");
      }
    }
  }
  return report;
}

inline Json report_to_json(const ValidationReport& report) {
  auto list = [](const std::vector<Finding>& findings) {
    Json out = Json::array();
    for (const auto& f : findings) out.push_back({{"code", f.code}, {"path", f.path}, {"message", f.message}});
    return out;
  };
  return Json{{"errors", list(report.errors)}, {"warnings", list(report.warnings)}};
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline Json value_ref_json(const ValueRef& ref) {
  return ref.is_literal() ? Json(ref.literal()) : Json(ref.parameter());
}

}  // namespace detail

inline Json protocol_to_json(const Protocol& p) {
  Json doc = Json::object();
  doc["name"] = p.name;
  if (p.subject_of) doc["subjectOf"] = *p.subject_of;
  if (p.id) doc["id"] = *p.id;
  if (p.citation) doc["citation"] = *p.citation;

  Json params = Json::object();
  for (const auto& param : p.parameters) {
    if (param.unit) {
      params[param.name] = Json{{"value", param.value}, {"unit", *param.unit}};
    } else {
      params[param.name] = param.value;
    }
  }
  doc["parameters"] = std::move(params);

  Json instructions = Json::array();
  for (const auto& block : p.instructions) {
    Json sequence = Json::array();
    for (const auto& step : block.sequence) {
      Json js = Json::object();
      js["type"] = to_string(step.kind);
      js["value"] = detail::value_ref_json(step.value);
      js["unit"] = to_string(step.unit);
      if (!step.terminations.empty()) {
        Json terms = Json::array();
        for (const auto& t : step.terminations) {
          terms.push_back(Json{{"type", to_string(t.kind)},
                               {"value", detail::value_ref_json(t.value)},
                               {"unit", to_string(t.unit)}});
        }
        js["termination"] = std::move(terms);
      }
      sequence.push_back(std::move(js));
    }
    Json jb = Json::object();
    jb["sequence"] = std::move(sequence);
    if (block.name) jb["name"] = *block.name;
    if (block.repeat != 1) jb["repeat"] = block.repeat;
    instructions.push_back(std::move(jb));
  }
  doc["instructions"] = std::move(instructions);

  for (const auto& [key, value] : p.extensions.items()) doc[key] = value;
  return doc;
}

/// Canonical form: fixed key order, 2-space indent, shortest round-trip
/// numbers, "repeat" omitted when 1. Ends with a newline.
inline std::string serialize_protocol(const Protocol& p) { return protocol_to_json(p).dump(2) + "\n"; }

}  // namespace bcl
