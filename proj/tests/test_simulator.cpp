#include <gtest/gtest.h>

#include "support.hpp"

using namespace bcl;
using bcl::test::LinearCell;

namespace {

ResolvedStep cc(double amps, std::vector<ResolvedTermination> terms) {
  return {StepKind::ElectricCurrent, {amps, Unit::Ampere}, std::move(terms)};
}
ResolvedStep cv(double volts, std::vector<ResolvedTermination> terms) {
  return {StepKind::Voltage, {volts, Unit::Volt}, std::move(terms)};
}
ResolvedStep rest(double seconds) { return {StepKind::Rest, {seconds, Unit::Second}, {}}; }
ResolvedTermination until_v(double v) { return {TerminationKind::Voltage, {v, Unit::Volt}}; }
ResolvedTermination until_a(double a) { return {TerminationKind::ElectricCurrent, {a, Unit::Ampere}}; }
ResolvedTermination for_s(double s) { return {TerminationKind::Time, {s, Unit::Second}}; }

ResolvedProtocol single_block(std::vector<ResolvedStep> steps, std::int64_t repeat = 1,
                              std::optional<std::string> name = std::nullopt) {
  ResolvedProtocol rp;
  rp.name = "t";
  rp.blocks.push_back({std::move(name), repeat, std::move(steps)});
  return rp;
}

// First event raised by the given step index.
const TraceEvent& event_for(const SimTrace& trace, std::uint32_t step) {
  for (const auto& e : trace.events) {
    if (e.step == step) return e;
  }
  throw std::runtime_error("no event for step");
}

const TraceRow& last_row_of(const SimTrace& trace, std::uint32_t step) {
  const TraceRow* last = nullptr;
  for (const auto& r : trace.rows) {
    if (r.step == step) last = &r;
  }
  if (last == nullptr) throw std::runtime_error("no rows for step");
  return *last;
}

double step_duration(const SimTrace& trace, std::uint32_t step) {
  double first = -1.0;
  double last = 0.0;
  for (const auto& r : trace.rows) {
    if (r.step != step) continue;
    if (first < 0.0) first = r.t_s;
    last = r.t_s;
  }
  return last - first;
}

// dsoc/dt = (V - OCV(soc)) / (r0 Q 3600), integrated with small RK4 steps.
double rk4_hold_time(const CellModel& m, double v, double soc, double i_end, double h = 0.01) {
  const double k = m.r0_ohm * m.capacity_ah * 3600.0;
  auto f = [&](double s) { return (v - m.ocv(s)) / k; };
  double t = 0.0;
  while ((v - m.ocv(soc)) / m.r0_ohm > i_end) {
    const double k1 = f(soc);
    const double k2 = f(soc + 0.5 * h * k1);
    const double k3 = f(soc + 0.5 * h * k2);
    const double k4 = f(soc + h * k3);
    soc += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return t;
}

}  // namespace

TEST(ClosedForm, ConstantCurrentNoResistance) {
  const CellModel m = build_reference_model(2.5, 3.0, 4.2, 0.0);
  const SimTrace tr = simulate(single_block({cc(2.5, {until_v(4.2)})}), m, {});
  EXPECT_NEAR(event_for(tr, 0).t_s, 3600.0, 0.5);
  EXPECT_NEAR(tr.rows.back().soc, 1.0, 1e-6);
}

TEST(ClosedForm, ConstantCurrentThenHold) {
  const double r0 = 0.02;
  const LinearCell oracle{2.5, 3.0, 4.2, r0};
  const CellModel m = build_reference_model(2.5, 3.0, 4.2, r0);
  const SimTrace tr = simulate(single_block({cc(2.5, {until_v(4.2)}), cv(4.2, {until_a(0.1)})}), m, {});

  EXPECT_NEAR(oracle.cc_time_to(0.0, 2.5, 4.2), 3450.0, 1e-9);
  EXPECT_NEAR(event_for(tr, 0).t_s, oracle.cc_time_to(0.0, 2.5, 4.2), 1.0);

  const double i0 = (4.2 - 3.0 - 1.2 * last_row_of(tr, 0).soc) / r0;
  EXPECT_NEAR(oracle.cv_time_to(2.5, 0.1), 482.8, 0.05);
  EXPECT_NEAR(step_duration(tr, 1), oracle.cv_time_to(i0, 0.1), 1.0);
  EXPECT_NEAR(step_duration(tr, 1), 482.8, 1.0);
  EXPECT_NEAR(last_row_of(tr, 1).soc, oracle.soc_at_cv_end(4.2, 0.1), 1e-4);
  EXPECT_NEAR(last_row_of(tr, 1).soc, 0.998333, 1e-4);
  EXPECT_NEAR(last_row_of(tr, 1).current_a, 0.1, 1e-3);
}

TEST(ClosedForm, EventLocatedWithinTolerance) {
  for (double tol : {1e-1, 1e-3, 1e-6}) {
    for (double dt : {1.0, 7.0, 60.0}) {
      const LinearCell oracle{3.0, 2.8, 4.1, 0.01};
      const CellModel m = build_reference_model(3.0, 2.8, 4.1, 0.01);
      SimConfig cfg;
      cfg.dt_s = dt;
      cfg.event_tol_s = tol;
      cfg.initial_soc = 0.2;
      const SimTrace tr = simulate(single_block({cc(1.3, {until_v(4.0)})}), m, cfg);
      const double t = event_for(tr, 0).t_s;
      const double exact = oracle.cc_time_to(0.2, 1.3, 4.0);
      EXPECT_GE(t, exact - 1e-9) << dt << " " << tol;
      EXPECT_LE(t - exact, tol + 1e-9) << dt << " " << tol;
    }
  }
}

TEST(ClosedForm, DischargeToLowerCutoff) {
  const LinearCell oracle{2.0, 2.5, 4.2, 0.03};
  const CellModel m = build_reference_model(2.0, 2.5, 4.2, 0.03);
  SimConfig cfg;
  cfg.initial_soc = 0.9;
  const SimTrace tr = simulate(single_block({cc(-1.0, {until_v(2.5)})}), m, cfg);
  // soc_stop = (2.5 + 1.0 * r0 - v_min) / slope
  const double soc_stop = (2.5 + 0.03 - 2.5) / oracle.slope();
  const double exact = (0.9 - soc_stop) * 2.0 * 3600.0 / 1.0;
  EXPECT_NEAR(event_for(tr, 0).t_s, exact, 1e-2);
  EXPECT_EQ(event_for(tr, 0).kind, EventKind::Voltage);
  EXPECT_NEAR(tr.rows.back().voltage_v, 2.5, 1e-4);
}

TEST(ClosedForm, HoldMatchesNumericIntegrationOnPiecewiseOcv) {
  CellModel m{3.4, {{0.0, 2.5}, {0.1, 3.4}, {0.5, 3.7}, {0.9, 4.05}, {1.0, 4.2}}, 0.015, 0.0};
  for (double soc0 : {0.05, 0.3, 0.6, 0.95}) {
    SimConfig cfg;
    cfg.initial_soc = soc0;
    cfg.event_tol_s = 1e-4;
    const SimTrace tr = simulate(single_block({cv(4.2, {until_a(0.05)})}), m, cfg);
    const double expected = rk4_hold_time(m, 4.2, soc0, 0.05);
    EXPECT_NEAR(step_duration(tr, 0), expected, 0.05) << soc0;
    EXPECT_NEAR(last_row_of(tr, 0).current_a, 0.05, 1e-4);
  }
}

TEST(Conservation, CurrentIntegralMatchesSocChange) {
  bcl::test::Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const double cap = bcl::test::uniform_real(rng, 0.5, 10.0);
    const double vmin = bcl::test::uniform_real(rng, 2.0, 3.0);
    const double vmax = vmin + bcl::test::uniform_real(rng, 0.5, 1.5);
    const double r0 = bcl::test::uniform_real(rng, 0.0, 0.05);
    const CellModel m = build_reference_model(cap, vmin, vmax, r0);
    SimConfig cfg;
    cfg.dt_s = bcl::test::uniform_real(rng, 0.5, 120.0);
    cfg.event_tol_s = 1e-3;
    cfg.initial_soc = bcl::test::uniform_real(rng, 0.0, 0.5);
    const double amps = bcl::test::uniform_real(rng, 0.1, 2.0) * cap;
    const SimTrace tr = simulate(
        single_block({cc(amps, {until_v(vmax), for_s(7200.0)}), rest(60.0), cc(-amps, {until_v(vmin)})}), m, cfg);

    for (std::uint32_t s = 0; s < 3; ++s) {
      double ah = 0.0;
      const TraceRow* prev = nullptr;
      const TraceRow* first = nullptr;
      for (const auto& r : tr.rows) {
        if (r.step != s) continue;
        if (first == nullptr) first = &r;
        if (prev != nullptr) ah += 0.5 * (prev->current_a + r.current_a) * (r.t_s - prev->t_s) / 3600.0;
        prev = &r;
      }
      ASSERT_NE(first, nullptr);
      EXPECT_NEAR(ah, (prev->soc - first->soc) * cap, 1e-9 * cap + 1e-9) << trial << " step " << s;
    }
  }
}

TEST(Trace, TimeOrderingAndBounds) {
  const CellModel m = build_reference_model(3.4, 2.5, 4.2, 0.01);
  const Protocol p = parse_protocol(bcl::test::slurp(bcl::test::data_path("protocols/cycle_life_mj1.json")));
  ResolvedProtocol rp = resolve_quantities(p);
  rp.blocks[0].repeat = 5;
  SimConfig cfg;
  cfg.dt_s = 30.0;
  const SimTrace tr = simulate(rp, m, cfg);
  ASSERT_FALSE(tr.rows.empty());
  for (std::size_t i = 1; i < tr.rows.size(); ++i) {
    const auto& a = tr.rows[i - 1];
    const auto& b = tr.rows[i];
    ASSERT_LE(a.t_s, b.t_s) << i;
    const bool same_step = a.block == b.block && a.iteration == b.iteration && a.step == b.step;
    if (same_step) {
      ASSERT_LT(a.t_s, b.t_s) << i;
    }
  }
  for (const auto& r : tr.rows) {
    ASSERT_GE(r.soc, 0.0);
    ASSERT_LE(r.soc, 1.0);
  }
  for (std::size_t i = 1; i < tr.events.size(); ++i) ASSERT_LE(tr.events[i - 1].t_s, tr.events[i].t_s);
  // 5 * 5 + 3 flat steps; rests raise no event, every other step exactly one.
  EXPECT_EQ(tr.events.size(), 5u * 3u + 3u);
}

TEST(Trace, Deterministic) {
  const CellModel m = build_reference_model(2.5, 3.0, 4.2, 0.02);
  const auto rp = single_block({cc(2.5, {until_v(4.2)}), cv(4.2, {until_a(0.1)}), rest(300), cc(-1.0, {until_v(3.0)})}, 3);
  SimConfig cfg;
  cfg.dt_s = 13.0;
  const SimTrace a = simulate(rp, m, cfg);
  const SimTrace b = simulate(rp, m, cfg);
  EXPECT_EQ(trace_to_csv(a), trace_to_csv(b));
  EXPECT_EQ(events_to_csv(a), events_to_csv(b));
}

TEST(Trace, EventTimesIndependentOfStepSize) {
  const CellModel m = build_reference_model(2.5, 3.0, 4.2, 0.02);
  const auto rp = single_block({cc(2.5, {until_v(4.2)}), cv(4.2, {until_a(0.1)}), cc(-1.0, {until_v(3.0)})});
  std::vector<double> reference;
  for (double dt : {0.5, 5.0, 50.0, 500.0}) {
    SimConfig cfg;
    cfg.dt_s = dt;
    cfg.event_tol_s = 1e-4;
    const SimTrace tr = simulate(rp, m, cfg);
    ASSERT_EQ(tr.events.size(), 3u);
    if (reference.empty()) {
      for (const auto& e : tr.events) reference.push_back(e.t_s);
    } else {
      for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(tr.events[i].t_s, reference[i], 1e-3) << dt;
    }
  }
}

TEST(Trace, RestAndTimeLimits) {
  const CellModel m = build_reference_model(2.5, 3.0, 4.2, 0.02);
  SimConfig cfg;
  cfg.dt_s = 7.0;
  cfg.initial_soc = 0.5;
  const SimTrace tr = simulate(single_block({rest(100.0), cc(0.5, {for_s(50.0), until_v(4.19)})}), m, cfg);
  EXPECT_DOUBLE_EQ(last_row_of(tr, 0).t_s, 100.0);
  EXPECT_DOUBLE_EQ(last_row_of(tr, 0).soc, 0.5);
  ASSERT_EQ(tr.events.size(), 1u);
  EXPECT_EQ(tr.events[0].kind, EventKind::Time);
  EXPECT_DOUBLE_EQ(tr.events[0].t_s, 150.0);
  EXPECT_NEAR(last_row_of(tr, 1).soc, 0.5 + 0.5 * 50.0 / (2.5 * 3600.0), 1e-12);
}

TEST(Trace, SocBoundAndTimeout) {
  const CellModel m = build_reference_model(2.5, 3.0, 4.2, 0.0);
  SimConfig cfg;
  // 4.3 V is above the model's ceiling, so the cell fills up first.
  SimTrace tr = simulate(single_block({cc(2.5, {until_v(4.3)})}), m, cfg);
  ASSERT_EQ(tr.events.size(), 1u);
  EXPECT_EQ(tr.events[0].kind, EventKind::SocBound);
  EXPECT_NEAR(tr.events[0].t_s, 3600.0, 1e-2);

  cfg.max_step_duration_s = 600.0;
  tr = simulate(single_block({cc(2.5, {until_v(4.2)})}), m, cfg);
  ASSERT_EQ(tr.events.size(), 1u);
  EXPECT_EQ(tr.events[0].kind, EventKind::StepTimeout);
  EXPECT_DOUBLE_EQ(tr.events[0].t_s, 600.0);
}

TEST(Trace, AlreadySatisfiedTerminationEndsImmediately) {
  const CellModel m = build_reference_model(2.5, 3.0, 4.2, 0.0);
  SimConfig cfg;
  cfg.initial_soc = 1.0;
  const SimTrace tr = simulate(single_block({cc(1.0, {until_v(4.2)})}), m, cfg);
  ASSERT_EQ(tr.events.size(), 1u);
  EXPECT_EQ(tr.events[0].t_s, 0.0);
  EXPECT_EQ(tr.rows.size(), 1u);
}

TEST(Errors, ModelAndConfig) {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code_of([] { build_reference_model(0.0, 3.0, 4.2, 0.0); }), ErrorCode::InvalidModel);
  EXPECT_EQ(code_of([] { build_reference_model(1.0, 4.2, 3.0, 0.0); }), ErrorCode::InvalidModel);
  EXPECT_EQ(code_of([] { build_reference_model(1.0, 3.0, 4.2, -1.0); }), ErrorCode::InvalidModel);
  EXPECT_EQ(code_of([] { CellModel{1.0, {{0.0, 3.0}, {0.5, 2.9}, {1.0, 4.0}}, 0.0, 0.0}.validate(); }),
            ErrorCode::InvalidModel);
  EXPECT_EQ(code_of([] { CellModel{1.0, {{0.1, 3.0}, {1.0, 4.0}}, 0.0, 0.0}.validate(); }), ErrorCode::InvalidModel);

  const CellModel m = build_reference_model(2.5, 3.0, 4.2, 0.0);
  const auto rp = single_block({cc(1.0, {until_v(4.2)})});
  for (SimConfig bad : {SimConfig{0.0, 1e-3, 100.0, 0.0}, SimConfig{1.0, 2.0, 100.0, 0.0},
                        SimConfig{1.0, 1e-3, 0.0, 0.0}, SimConfig{1.0, 1e-3, 100.0, 1.5}}) {
    EXPECT_EQ(code_of([&] { simulate(rp, m, bad); }), ErrorCode::InvalidConfig);
  }
  EXPECT_EQ(code_of([&] { simulate(single_block({cv(4.2, {until_a(0.1)})}), m, {}); }), ErrorCode::SingularHold);
}

TEST(CapacityCheck, Errors) {
  const CellModel m = build_reference_model(2.5, 3.0, 4.2, 0.01);
  const SimTrace tr = simulate(single_block({cc(1.0, {until_v(4.1)})}, 1, "charge_only"), m, {});
  EXPECT_THROW(
      {
        try {
          capacity_check(tr, "missing", 2.5);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::UnknownBlock);
          throw;
        }
      },
      Error);
  try {
    capacity_check(tr, "charge_only", 2.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoDischarge);
  }
}

TEST(CapacityCheck, FadeLaw) {
  CellModel m = build_reference_model(3.4, 2.5, 4.2, 0.005);
  m.fade_per_cycle = 0.0005;
  EXPECT_DOUBLE_EQ(m.capacity_at(0), 3.4);
  EXPECT_NEAR(m.capacity_at(400), 0.8 * 3.4, 1e-12);
  EXPECT_NEAR(m.capacity_at(1), 3.4 * 0.9995, 1e-12);
  EXPECT_EQ(m.capacity_at(5000), 0.0);
}

TEST(CapacityCheck, CycleLifeReferenceRatio) {
  const Protocol p = parse_protocol(bcl::test::slurp(bcl::test::data_path("protocols/cycle_life_mj1.json")));
  const ResolvedProtocol rp = resolve_quantities(p);
  const double r0 = 0.005;
  CellModel m = build_reference_model(3.4, 2.5, 4.2, r0);
  m.fade_per_cycle = 0.2 / 400.0;
  SimConfig cfg;
  cfg.dt_s = 10.0;
  const SimTrace tr = simulate(rp, m, cfg);
  const double ratio = capacity_check(tr, "cycle_401_reference_test", 3.4);

  // Reference block: CC-CV to 0.05 A, then 0.68 A down to 2.5 V, on Q_400.
  const double slope = 4.2 - 2.5;
  const double soc_top = (4.2 - 0.05 * r0 - 2.5) / slope;
  const double soc_bottom = (2.5 + 0.68 * r0 - 2.5) / slope;
  const double expected = 0.8 * (soc_top - soc_bottom);
  EXPECT_NEAR(ratio, expected, 1e-3);
  EXPECT_NEAR(ratio, 0.80, 0.005);

  ASSERT_EQ(tr.per_cycle.size(), 401u);
  EXPECT_EQ(tr.per_cycle.back().block, 1u);
  // Throughput in the cycling block shrinks with the fade.
  EXPECT_GT(tr.per_cycle[1].discharge_ah_out, tr.per_cycle[399].discharge_ah_out);
}
