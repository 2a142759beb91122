#pragma once

// Deterministic execution of a resolved protocol against a zeroth-order
// equivalent-circuit cell (OCV source + series resistance).
//
// Sign convention: positive current charges the cell.
//
// Trace layout: every flat step opens with a row at its start time, so the
// first row of a step shares its timestamp with the last row of the step
// before it (the current is discontinuous there). Within a step t_s is
// strictly increasing. A termination located by bisection leaves two rows
// (last sample before the crossing, first sample after it) no more than
// event_tol_s apart.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcl/detail/number.hpp"
#include "bcl/error.hpp"
#include "bcl/transform.hpp"

namespace bcl {

struct OcvPoint {
  double soc = 0.0;
  double volts = 0.0;

  bool operator==(const OcvPoint&) const = default;
};

struct CellModel {
  double capacity_ah = 0.0;
  std::vector<OcvPoint> ocv_table;
  double r0_ohm = 0.0;
  /// Fractional capacity loss per completed block iteration.
  double fade_per_cycle = 0.0;

  void validate() const {
    if (!(capacity_ah > 0.0) || !std::isfinite(capacity_ah)) {
      throw Error(ErrorCode::InvalidModel, "capacity must be positive");
    }
    if (!(r0_ohm >= 0.0) || !std::isfinite(r0_ohm)) throw Error(ErrorCode::InvalidModel, "r0 must be >= 0");
    if (!(fade_per_cycle >= 0.0)) throw Error(ErrorCode::InvalidModel, "fade_per_cycle must be >= 0");
    if (ocv_table.size() < 2) throw Error(ErrorCode::InvalidModel, "OCV table needs at least 2 points");
    for (std::size_t i = 1; i < ocv_table.size(); ++i) {
      if (!(ocv_table[i].soc > ocv_table[i - 1].soc)) {
        throw Error(ErrorCode::InvalidModel, "OCV table SOC must be strictly increasing");
      }
      if (!(ocv_table[i].volts >= ocv_table[i - 1].volts)) {
        throw Error(ErrorCode::InvalidModel, "OCV table voltage must be non-decreasing");
      }
    }
    if (ocv_table.front().soc > 0.0 || ocv_table.back().soc < 1.0) {
      throw Error(ErrorCode::InvalidModel, "OCV table must span SOC 0..1");
    }
  }

  /// Piecewise-linear OCV, held constant beyond the table ends.
  double ocv(double soc) const {
    if (soc <= ocv_table.front().soc) return ocv_table.front().volts;
    if (soc >= ocv_table.back().soc) return ocv_table.back().volts;
    auto hi = std::upper_bound(ocv_table.begin(), ocv_table.end(), soc,
                               [](double s, const OcvPoint& p) { return s < p.soc; });
    auto lo = hi - 1;
    const double w = (soc - lo->soc) / (hi->soc - lo->soc);
    return lo->volts + w * (hi->volts - lo->volts);
  }

  /// Q_k = capacity * (1 - fade * k), clamped at 0.
  double capacity_at(std::int64_t completed_iterations) const {
    return std::max(0.0, capacity_ah * (1.0 - fade_per_cycle * static_cast<double>(completed_iterations)));
  }
};

/// Linear OCV from v_min at SOC 0 to v_max at SOC 1, no fade.
inline CellModel build_reference_model(double capacity_ah, double v_min, double v_max, double r0_ohm) {
  if (!(capacity_ah > 0.0)) throw Error(ErrorCode::InvalidModel, "capacity must be positive");
  if (!(v_min < v_max)) throw Error(ErrorCode::InvalidModel, "v_min must be below v_max");
  if (!(r0_ohm >= 0.0)) throw Error(ErrorCode::InvalidModel, "r0 must be >= 0");
  CellModel m{capacity_ah, {{0.0, v_min}, {1.0, v_max}}, r0_ohm, 0.0};
  m.validate();
  return m;
}

struct SimConfig {
  double dt_s = 1.0;
  double event_tol_s = 1e-3;
  double max_step_duration_s = 86400.0;
  double initial_soc = 0.0;

  void validate() const {
    if (!(dt_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt_s must be positive");
    if (!(event_tol_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "event_tol_s must be positive");
    if (!(event_tol_s < dt_s)) throw Error(ErrorCode::InvalidConfig, "event_tol_s must be below dt_s");
    if (!(max_step_duration_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "max_step_duration_s must be positive");
    if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw Error(ErrorCode::InvalidConfig, "initial_soc must be in [0,1]");
  }
};

enum class EventKind { Voltage, ElectricCurrent, Time, SocBound, StepTimeout };

constexpr std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Voltage: return "Voltage";
    case EventKind::ElectricCurrent: return "ElectricCurrent";
    case EventKind::Time: return "Time";
    case EventKind::SocBound: return "SOC_BOUND";
    case EventKind::StepTimeout: return "StepTimeout";
  }
  return "";
}

struct TraceRow {
  double t_s = 0.0;
  double current_a = 0.0;
  double voltage_v = 0.0;
  double soc = 0.0;
  std::uint32_t block = 0;
  std::uint32_t step = 0;
  std::int64_t iteration = 0;
};

struct TraceEvent {
  double t_s = 0.0;
  std::uint32_t block = 0;
  std::int64_t iteration = 0;
  std::uint32_t step = 0;
  EventKind kind = EventKind::Voltage;
};

struct CycleSummary {
  std::uint32_t block = 0;
  std::int64_t iteration = 0;
  double charge_ah_in = 0.0;
  double discharge_ah_out = 0.0;
};

struct SimTrace {
  std::vector<TraceRow> rows;
  std::vector<TraceEvent> events;
  std::vector<CycleSummary> per_cycle;
  /// Names of the protocol's blocks, indexed like TraceRow::block.
  std::vector<std::optional<std::string>> block_names;
};

namespace detail {

constexpr double kSocSlack = 1e-12;

inline bool soc_out_of_bounds(double soc) { return soc > 1.0 + kSocSlack || soc < -kSocSlack; }
inline double clamp_soc(double soc) { return std::clamp(soc, 0.0, 1.0); }

// Linear piece of the OCV curve that governs motion from `soc` in direction
// `dir`: OCV(s) = intercept + slope * s for s in [lo, hi].
struct OcvSegment {
  double lo, hi, intercept, slope;
};

inline OcvSegment segment_for(const CellModel& m, double soc, double dir) {
  const auto& table = m.ocv_table;
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (soc > table.back().soc || (soc == table.back().soc && dir > 0)) {
    return {table.back().soc, inf, table.back().volts, 0.0};
  }
  if (soc < table.front().soc || (soc == table.front().soc && dir < 0)) {
    return {-inf, table.front().soc, table.front().volts, 0.0};
  }
  std::size_t i = 0;
  while (i + 2 < table.size() && (dir > 0 ? soc >= table[i + 1].soc : soc > table[i + 1].soc)) ++i;
  const auto& a = table[i];
  const auto& b = table[i + 1];
  const double slope = (b.volts - a.volts) / (b.soc - a.soc);
  return {a.soc, b.soc, a.volts - slope * a.soc, slope};
}

/// State propagation for a single step kind over a fixed model and capacity.
class StepDynamics {
 public:
  StepDynamics(const CellModel& model, const ResolvedStep& step, double capacity)
      : model_(model), step_(step), capacity_(capacity) {}

  double current(double soc) const {
    switch (step_.kind) {
      case StepKind::ElectricCurrent: return step_.setpoint.magnitude;
      case StepKind::Voltage: return (step_.setpoint.magnitude - model_.ocv(clamp_soc(soc))) / model_.r0_ohm;
      case StepKind::Rest: return 0.0;
    }
    return 0.0;
  }

  double voltage(double soc) const {
    switch (step_.kind) {
      case StepKind::ElectricCurrent: return model_.ocv(clamp_soc(soc)) + step_.setpoint.magnitude * model_.r0_ohm;
      case StepKind::Voltage: return step_.setpoint.magnitude;
      case StepKind::Rest: return model_.ocv(clamp_soc(soc));
    }
    return 0.0;
  }

  /// SOC after holding this step for `h` seconds from `soc` (unclamped).
  double advance(double soc, double h) const {
    switch (step_.kind) {
      case StepKind::Rest: return soc;
      case StepKind::ElectricCurrent: return soc + step_.setpoint.magnitude * h / (3600.0 * capacity_);
      case StepKind::Voltage: return advance_hold(soc, h);
    }
    return soc;
  }

  /// The first termination satisfied at `soc`, in declaration order.
  std::optional<EventKind> fired(double soc) const {
    for (const auto& t : step_.terminations) {
      switch (t.kind) {
        case TerminationKind::Voltage:
          if (step_.kind == StepKind::ElectricCurrent) {
            const double v = voltage(soc);
            const bool charging = step_.setpoint.magnitude > 0.0;
            if (charging ? v >= t.threshold.magnitude : v <= t.threshold.magnitude) return EventKind::Voltage;
          }
          break;
        case TerminationKind::ElectricCurrent:
          if (std::fabs(current(soc)) <= std::fabs(t.threshold.magnitude)) return EventKind::ElectricCurrent;
          break;
        case TerminationKind::Time: break;  // handled as a step time limit
      }
    }
    return std::nullopt;
  }

 private:
  // Exact solution of the hold ODE dS/dt = (V_set - OCV(S)) / (3600 Q r0),
  // piece by piece along the OCV segments.
  double advance_hold(double soc, double h) const {
    const double v_set = step_.setpoint.magnitude;
    const double k = 3600.0 * capacity_ * model_.r0_ohm;
    double remaining = h;
    for (int guard = 0; remaining > 0.0 && guard < 1000; ++guard) {
      const double drive = v_set - model_.ocv(clamp_soc(soc));
      if (drive == 0.0) return soc;
      const double dir = drive > 0.0 ? 1.0 : -1.0;
      const OcvSegment seg = segment_for(model_, soc, dir);
      const double boundary = dir > 0 ? seg.hi : seg.lo;
      double next;
      double time_to_boundary;
      if (seg.slope == 0.0) {
        const double rate = (v_set - seg.intercept) / k;
        next = soc + rate * remaining;
        time_to_boundary = std::isfinite(boundary) ? (boundary - soc) / rate : remaining;
      } else {
        const double target = (v_set - seg.intercept) / seg.slope;
        const double lambda = seg.slope / k;
        next = target + (soc - target) * std::exp(-lambda * remaining);
        // The fixed point lies inside the segment: the boundary is never reached.
        const bool reaches = dir > 0 ? target > boundary : target < boundary;
        time_to_boundary = reaches ? -std::log((boundary - target) / (soc - target)) / lambda : remaining;
      }
      const bool crosses = dir > 0 ? next > boundary : next < boundary;
      if (!crosses || !(time_to_boundary < remaining)) return next;
      soc = boundary;
      remaining -= time_to_boundary;
    }
    return soc;
  }

  const CellModel& model_;
  const ResolvedStep& step_;
  double capacity_;
};

class Simulation {
 public:
  Simulation(const CellModel& model, const SimConfig& cfg) : model_(model), cfg_(cfg), soc_(cfg.initial_soc) {}

  void run_step(const FlatStep& flat, double capacity, SimTrace& trace) {
    const ResolvedStep& step = flat.step;
    StepDynamics dyn(model_, step, capacity);
    auto row = [&](double t, double soc) {
      trace.rows.push_back({t, dyn.current(soc), dyn.voltage(soc), clamp_soc(soc),
                            static_cast<std::uint32_t>(flat.block_index),
                            static_cast<std::uint32_t>(flat.step_index), flat.iteration});
    };
    auto event = [&](double t, EventKind kind) {
      trace.events.push_back({t, static_cast<std::uint32_t>(flat.block_index), flat.iteration,
                              static_cast<std::uint32_t>(flat.step_index), kind});
    };

    // Time limit for this step and the event it raises (none for rests).
    double limit = cfg_.max_step_duration_s;
    std::optional<EventKind> limit_kind = EventKind::StepTimeout;
    if (step.kind == StepKind::Rest) {
      limit = step.setpoint.magnitude;
      limit_kind = std::nullopt;
    }
    for (const auto& t : step.terminations) {
      if (t.kind == TerminationKind::Time && t.threshold.magnitude <= limit) {
        limit = t.threshold.magnitude;
        limit_kind = EventKind::Time;
      }
    }

    const double t0 = t_;
    row(t_, soc_);
    if (step.kind != StepKind::Rest && !(capacity > 0.0)) {
      event(t_, EventKind::SocBound);
      return;
    }
    if (auto kind = dyn.fired(soc_)) {
      event(t_, *kind);
      return;
    }

    double elapsed = 0.0;
    while (elapsed < limit) {
      const bool last = limit - elapsed <= cfg_.dt_s;
      const double h = last ? limit - elapsed : cfg_.dt_s;
      const double next = dyn.advance(soc_, h);
      if (dyn.fired(next) || soc_out_of_bounds(next)) {
        locate_event(dyn, h, row, event);
        return;
      }
      soc_ = next;
      elapsed = last ? limit : elapsed + h;
      t_ = t0 + elapsed;
      row(t_, soc_);
    }
    if (limit_kind) event(t_, *limit_kind);
  }

 private:
  template <typename RowFn, typename EventFn>
  void locate_event(const StepDynamics& dyn, double h, RowFn& row, EventFn& event) {
    auto triggered = [&](double soc) { return dyn.fired(soc).has_value() || soc_out_of_bounds(soc); };
    double lo = 0.0;
    double hi = h;
    while (hi - lo > cfg_.event_tol_s) {
      const double mid = 0.5 * (lo + hi);
      (triggered(dyn.advance(soc_, mid)) ? hi : lo) = mid;
    }
    const double start = t_;
    if (lo > 0.0) row(start + lo, dyn.advance(soc_, lo));
    const double soc_hi = dyn.advance(soc_, hi);
    row(start + hi, soc_hi);
    auto kind = dyn.fired(soc_hi);
    event(start + hi, kind ? *kind : EventKind::SocBound);
    soc_ = clamp_soc(soc_hi);
    t_ = start + hi;
  }

  const CellModel& model_;
  const SimConfig& cfg_;
  double t_ = 0.0;
  double soc_;
};

}  // namespace detail

/// Trapezoidal charge/discharge throughput per (block, iteration), in
/// execution order.
inline std::vector<CycleSummary> cycle_summary(const SimTrace& trace) {
  std::vector<CycleSummary> out;
  const auto& rows = trace.rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (out.empty() || out.back().block != rows[i].block || out.back().iteration != rows[i].iteration) {
      out.push_back({rows[i].block, rows[i].iteration, 0.0, 0.0});
    }
    if (i == 0) continue;
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    if (a.block != b.block || a.iteration != b.iteration) continue;
    const double dt = b.t_s - a.t_s;
    out.back().charge_ah_in += 0.5 * (std::max(a.current_a, 0.0) + std::max(b.current_a, 0.0)) * dt / 3600.0;
    out.back().discharge_ah_out += 0.5 * (std::max(-a.current_a, 0.0) + std::max(-b.current_a, 0.0)) * dt / 3600.0;
  }
  return out;
}

/// Runs every flat step in order. Throws SingularHold when the protocol
/// holds a voltage on a cell without series resistance.
inline SimTrace simulate(const ResolvedProtocol& rp, const CellModel& model, const SimConfig& cfg) {
  model.validate();
  cfg.validate();
  for (const auto& block : rp.blocks) {
    for (const auto& step : block.sequence) {
      if (step.kind == StepKind::Voltage && model.r0_ohm == 0.0) {
        throw Error(ErrorCode::SingularHold, "voltage hold requires r0 > 0");
      }
    }
  }

  SimTrace trace;
  for (const auto& block : rp.blocks) trace.block_names.push_back(block.name);

  detail::Simulation sim(model, cfg);
  std::int64_t completed = 0;
  for (std::size_t b = 0; b < rp.blocks.size(); ++b) {
    const auto& block = rp.blocks[b];
    for (std::int64_t it = 0; it < block.repeat; ++it) {
      const double capacity = model.capacity_at(completed);
      for (std::size_t s = 0; s < block.sequence.size(); ++s) {
        sim.run_step(FlatStep{b, it, s, block.sequence[s]}, capacity, trace);
      }
      ++completed;
    }
  }
  trace.per_cycle = cycle_summary(trace);
  return trace;
}

/// Discharge throughput of the named block (its last iteration) divided by
/// the rated capacity.
inline double capacity_check(const SimTrace& trace, std::string_view reference_block_name,
                             double rated_capacity_ah) {
  if (!(rated_capacity_ah > 0.0)) throw Error(ErrorCode::InvalidModel, "rated capacity must be positive");
  std::optional<std::uint32_t> block;
  for (std::size_t b = 0; b < trace.block_names.size(); ++b) {
    if (trace.block_names[b] && *trace.block_names[b] == reference_block_name) block = static_cast<std::uint32_t>(b);
  }
  if (!block) throw Error(ErrorCode::UnknownBlock, std::string(reference_block_name));

  const auto summary = trace.per_cycle.empty() ? cycle_summary(trace) : trace.per_cycle;
  const CycleSummary* last = nullptr;
  for (const auto& c : summary) {
    if (c.block == *block) last = &c;
  }
  if (last == nullptr || !(last->discharge_ah_out > 0.0)) {
    throw Error(ErrorCode::NoDischarge, std::string(reference_block_name));
  }
  return last->discharge_ah_out / rated_capacity_ah;
}

inline std::string trace_to_csv(const SimTrace& trace) {
  std::string out = "t_s,current_a,voltage_v,soc,block,iter,step\n";
  out.reserve(out.size() + trace.rows.size() * 64);
  for (const auto& r : trace.rows) {
    out += detail::shortest(r.t_s);
    out += ',';
    out += detail::shortest(r.current_a);
    out += ',';
    out += detail::shortest(r.voltage_v);
    out += ',';
    out += detail::shortest(r.soc);
    out += ',' + std::to_string(r.block) + ',' + std::to_string(r.iteration) + ',' + std::to_string(r.step) + '\n';
  }
  return out;
}

inline std::string events_to_csv(const SimTrace& trace) {
  std::string out = "t_s,block,iter,step,kind\n";
  for (const auto& e : trace.events) {
    out += detail::shortest(e.t_s) + ',' + std::to_string(e.block) + ',' + std::to_string(e.iteration) + ',' +
           std::to_string(e.step) + ',' + std::string(to_string(e.kind)) + '\n';
  }
  return out;
}

inline std::string cycle_summary_to_csv(const std::vector<CycleSummary>& summary) {
  std::string out = "block,iter,charge_ah_in,discharge_ah_out\n";
  for (const auto& c : summary) {
    out += std::to_string(c.block) + ',' + std::to_string(c.iteration) + ',' + detail::shortest(c.charge_ah_in) +
           ',' + detail::shortest(c.discharge_ah_out) + '\n';
  }
  return out;
}

}  // namespace bcl
