#pragma once

// Resolution of symbolic values into physical quantities, repeat unrolling,
// and the two export paths (experiment text, JSON-LD).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcl/context.hpp"
#include "bcl/detail/number.hpp"
#include "bcl/protocol.hpp"

namespace bcl {

struct Quantity {
  double magnitude = 0.0;
  Unit unit = Unit::Ampere;

  bool operator==(const Quantity&) const = default;
};

/// x CRate -> x * capacity amperes. 1C is the rated capacity in Ah taken
/// numerically as amperes.
inline Quantity crate_to_current(Quantity q, double capacity_ah) {
  if (q.unit != Unit::CRate) return q;
  return {q.magnitude * capacity_ah, Unit::Ampere};
}

struct ResolvedTermination {
  TerminationKind kind = TerminationKind::Voltage;
  Quantity threshold;

  bool operator==(const ResolvedTermination&) const = default;
};

struct ResolvedStep {
  StepKind kind = StepKind::ElectricCurrent;
  /// Current in A, held voltage in V, or rest duration in s.
  Quantity setpoint;
  std::vector<ResolvedTermination> terminations;

  bool operator==(const ResolvedStep&) const = default;
};

struct ResolvedBlock {
  std::optional<std::string> name;
  std::int64_t repeat = 1;
  std::vector<ResolvedStep> sequence;

  bool operator==(const ResolvedBlock&) const = default;
};

/// Executable protocol: no parameter references, no CRate units.
struct ResolvedProtocol {
  std::string name;
  std::optional<std::string> subject_of;
  std::optional<std::string> id;
  std::optional<std::string> citation;
  std::optional<double> capacity_ah;
  std::vector<ResolvedBlock> blocks;

  bool operator==(const ResolvedProtocol&) const = default;
};

struct FlatStep {
  std::size_t block_index = 0;
  std::int64_t iteration = 0;
  std::size_t step_index = 0;
  ResolvedStep step;

  bool operator==(const FlatStep&) const = default;
};

namespace detail {

inline double resolve_value(const Protocol& p, const ValueRef& ref) {
  if (ref.is_literal()) return ref.literal();
  const Parameter* param = p.find_parameter(ref.parameter());
  if (param == nullptr) throw Error(ErrorCode::InvalidProtocol, "unresolved parameter " + ref.parameter());
  return param->value;
}

}  // namespace detail

/// Replaces every parameter reference by its value and converts CRate to
/// amperes. Throws MissingCapacity, ZeroCurrent, or InvalidProtocol for any
/// other validation error.
inline ResolvedProtocol resolve_quantities(const Protocol& p) {
  const ValidationReport report = validate_protocol(p);
  if (report.has_error("MISSING_CAPACITY")) {
    throw Error(ErrorCode::MissingCapacity, "CRate step without a Capacity parameter");
  }
  if (report.has_error("ZERO_CURRENT")) {
    for (const auto& f : report.errors) {
      if (f.code == "ZERO_CURRENT") throw Error(ErrorCode::ZeroCurrent, f.path);
    }
  }
  if (!report.ok()) {
    const auto& first = report.errors.front();
    throw Error(ErrorCode::InvalidProtocol, first.code + " at " + first.path + ": " + first.message);
  }

  ResolvedProtocol rp;
  rp.name = p.name;
  rp.subject_of = p.subject_of;
  rp.id = p.id;
  rp.citation = p.citation;
  if (const Parameter* cap = p.find_parameter(kCapacity)) rp.capacity_ah = cap->value;

  for (const auto& block : p.instructions) {
    ResolvedBlock rb{block.name, block.repeat, {}};
    for (const auto& step : block.sequence) {
      ResolvedStep rs;
      rs.kind = step.kind;
      rs.setpoint = {detail::resolve_value(p, step.value), step.unit};
      if (rs.setpoint.unit == Unit::CRate) rs.setpoint = crate_to_current(rs.setpoint, *rp.capacity_ah);
      if (rs.kind == StepKind::ElectricCurrent && rs.setpoint.magnitude == 0.0) {
        throw Error(ErrorCode::ZeroCurrent, "current step resolves to 0 A");
      }
      for (const auto& t : step.terminations) {
        rs.terminations.push_back({t.kind, {detail::resolve_value(p, t.value), t.unit}});
      }
      rb.sequence.push_back(std::move(rs));
    }
    rp.blocks.push_back(std::move(rb));
  }
  return rp;
}

/// Flattens repeats into execution order (block, iteration, step).
inline std::vector<FlatStep> unroll(const ResolvedProtocol& rp) {
  std::size_t total = 0;
  for (const auto& block : rp.blocks) total += static_cast<std::size_t>(block.repeat) * block.sequence.size();
  std::vector<FlatStep> flat;
  flat.reserve(total);
  for (std::size_t b = 0; b < rp.blocks.size(); ++b) {
    const auto& block = rp.blocks[b];
    for (std::int64_t it = 0; it < block.repeat; ++it) {
      for (std::size_t s = 0; s < block.sequence.size(); ++s) flat.push_back({b, it, s, block.sequence[s]});
    }
  }
  return flat;
}

// ---------------------------------------------------------------------------
// Experiment text

namespace detail {

inline std::string condition_text(const ResolvedTermination& t) {
  switch (t.kind) {
    case TerminationKind::Voltage: return decimal(t.threshold.magnitude) + " V";
    case TerminationKind::ElectricCurrent: return decimal(std::fabs(t.threshold.magnitude)) + " A";
    case TerminationKind::Time: return decimal(t.threshold.magnitude) + " seconds";
  }
  return {};
}

// "until A or B", "for t seconds", or "for t seconds or until A".
inline std::string stop_clause(const std::vector<ResolvedTermination>& terms) {
  std::string limits;
  std::string conditions;
  for (const auto& t : terms) {
    std::string& target = t.kind == TerminationKind::Time ? limits : conditions;
    if (!target.empty()) target += " or ";
    target += condition_text(t);
  }
  if (limits.empty()) return "until " + conditions;
  if (conditions.empty()) return "for " + limits;
  return "for " + limits + " or until " + conditions;
}

}  // namespace detail

inline std::string experiment_line(const ResolvedStep& step) {
  switch (step.kind) {
    case StepKind::ElectricCurrent: {
      const double current = step.setpoint.magnitude;
      return std::string(current >= 0.0 ? "Charge" : "Discharge") + " at " +
             detail::decimal(std::fabs(current)) + " A " + detail::stop_clause(step.terminations);
    }
    case StepKind::Voltage:
      return "Hold at " + detail::decimal(step.setpoint.magnitude) + " V " +
             detail::stop_clause(step.terminations);
    case StepKind::Rest: return "Rest for " + detail::decimal(step.setpoint.magnitude) + " seconds";
  }
  return {};
}

/// One instruction per step; a "Repeat n:" line precedes each block whose
/// repeat count exceeds one.
inline std::vector<std::string> export_experiment_text(const ResolvedProtocol& rp) {
  std::vector<std::string> lines;
  for (const auto& block : rp.blocks) {
    if (block.repeat > 1) lines.push_back("Repeat " + std::to_string(block.repeat) + ":");
    for (const auto& step : block.sequence) lines.push_back(experiment_line(step));
  }
  return lines;
}

/// Plain JSON view of a resolved protocol (magnitudes in A, V or s).
inline Json resolved_to_json(const ResolvedProtocol& rp) {
  Json out = Json::object();
  out["name"] = rp.name;
  if (rp.subject_of) out["subjectOf"] = *rp.subject_of;
  if (rp.id) out["id"] = *rp.id;
  if (rp.citation) out["citation"] = *rp.citation;
  out["capacity_ah"] = rp.capacity_ah ? Json(*rp.capacity_ah) : Json(nullptr);
  Json blocks = Json::array();
  for (const auto& block : rp.blocks) {
    Json jb = Json::object();
    jb["name"] = block.name ? Json(*block.name) : Json(nullptr);
    jb["repeat"] = block.repeat;
    Json seq = Json::array();
    for (const auto& step : block.sequence) {
      Json js = Json::object();
      js["type"] = to_string(step.kind);
      js["value"] = step.setpoint.magnitude;
      js["unit"] = to_string(step.setpoint.unit);
      Json terms = Json::array();
      for (const auto& t : step.terminations) {
        terms.push_back(Json{{"type", to_string(t.kind)}, {"value", t.threshold.magnitude}, {"unit", to_string(t.threshold.unit)}});
      }
      js["termination"] = std::move(terms);
      seq.push_back(std::move(js));
    }
    jb["sequence"] = std::move(seq);
    blocks.push_back(std::move(jb));
  }
  out["blocks"] = std::move(blocks);
  return out;
}

// ---------------------------------------------------------------------------
// JSON-LD

namespace detail {

class ContextBuilder {
 public:
  explicit ContextBuilder(const ContextMap& ctx) : ctx_(ctx) {}

  /// Registers a term and returns it, so call sites read as the term itself.
  std::string use(const std::string& term) {
    if (!context_.contains(term)) {
      const std::string& iri = ctx_.require(term);
      if (term == "unit") {
        context_[term] = Json{{"@id", iri}, {"@type", "@vocab"}};
      } else {
        context_[term] = iri;
      }
    }
    return term;
  }
  std::string use(std::string_view term) { return use(std::string(term)); }
  std::string use(const char* term) { return use(std::string(term)); }

  /// Registers every key nested inside an extension value.
  void use_nested(const Json& value) {
    if (value.is_array()) {
      for (const auto& v : value) use_nested(v);
    } else if (value.is_object()) {
      for (const auto& [key, v] : value.items()) {
        if (key.empty() || key.front() != '@') use(key);
        use_nested(v);
      }
    }
  }

  Json take() { return std::move(context_); }

 private:
  const ContextMap& ctx_;
  Json context_ = Json::object();
};

inline std::string fragment_id(const std::string& name) {
  std::string out = "#";
  for (char c : name) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_' || c == '.';
    out += keep ? c : '_';
  }
  return out == "#" ? "#protocol" : out;
}

}  // namespace detail

/// JSON-LD rendering of a protocol. The @context holds exactly the terms
/// the body uses, each mapped through ctx. Throws MissingContextTerm.
inline std::string emit_protocol_jsonld(const Protocol& p, const ContextMap& ctx) {
  detail::ContextBuilder terms(ctx);
  Json body = Json::object();
  body["@id"] = p.id ? *p.id : detail::fragment_id(p.name);
  body["@type"] = terms.use("CyclingProtocol");
  body[terms.use("name")] = p.name;
  if (p.subject_of) body[terms.use("subjectOf")] = *p.subject_of;
  if (p.citation) body[terms.use("citation")] = *p.citation;

  Json params = Json::array();
  for (const auto& param : p.parameters) {
    Json jp = Json::object();
    const bool reserved = reserved_parameter_unit(param.name).has_value();
    const std::string type = param.name == kCapacity ? "RatedCapacity" : reserved ? param.name : "Parameter";
    jp["@type"] = terms.use(type);
    jp[terms.use("name")] = param.name;
    jp[terms.use("value")] = param.value;
    std::string unit(detail::parameter_unit(param));
    if (!unit.empty()) jp[terms.use("unit")] = terms.use(unit);
    params.push_back(std::move(jp));
  }
  body[terms.use("parameters")] = std::move(params);

  Json instructions = Json::array();
  for (const auto& block : p.instructions) {
    Json jb = Json::object();
    jb["@type"] = terms.use("InstructionBlock");
    if (block.name) jb[terms.use("name")] = *block.name;
    jb[terms.use("repeat")] = block.repeat;
    Json sequence = Json::array();
    for (const auto& step : block.sequence) {
      Json js = Json::object();
      js["@type"] = terms.use(to_string(step.kind));
      js[terms.use("value")] = detail::value_ref_json(step.value);
      js[terms.use("unit")] = terms.use(to_string(step.unit));
      if (!step.terminations.empty()) {
        Json jt = Json::array();
        for (const auto& t : step.terminations) {
          Json term = Json::object();
          term["@type"] = terms.use(to_string(t.kind));
          term[terms.use("value")] = detail::value_ref_json(t.value);
          term[terms.use("unit")] = terms.use(to_string(t.unit));
          jt.push_back(std::move(term));
        }
        js[terms.use("termination")] = std::move(jt);
      }
      sequence.push_back(std::move(js));
    }
    jb[terms.use("sequence")] = std::move(sequence);
    instructions.push_back(std::move(jb));
  }
  body[terms.use("instructions")] = std::move(instructions);

  for (const auto& [key, value] : p.extensions.items()) {
    terms.use_nested(value);
    body[terms.use(key)] = value;
  }

  Json doc = Json::object();
  doc["@context"] = terms.take();
  for (auto& [key, value] : body.items()) doc[key] = std::move(value);
  return doc.dump(2) + "\n";
}

}  // namespace bcl
