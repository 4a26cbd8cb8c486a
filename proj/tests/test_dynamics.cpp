#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gfmswing/analytic.hpp"
#include "gfmswing/dynamics.hpp"
#include "gfmswing/harness.hpp"

#include <cmath>

using namespace gfmswing;
using doctest::Approx;

namespace {

// Classical RK4 on the same swing equation with Pe at v = v_ref.
SwingState rk4(SwingState s, const SystemParams& p, double dt, int steps)
{
    const double wb = 2.0 * std::numbers::pi * p.f_n;
    auto f = [&](double delta, double w) {
        const double dw = (p.p0 - unsaturated_power(delta, p) - p.swing_damping * w) / p.swing_inertia;
        const double dd = rad2deg(wb * w);
        return std::pair{dd, dw};
    };
    for (int n = 0; n < steps; ++n) {
        const auto [d1, w1] = f(s.delta_deg, s.omega_dev);
        const auto [d2, w2] = f(s.delta_deg + 0.5 * dt * d1, s.omega_dev + 0.5 * dt * w1);
        const auto [d3, w3] = f(s.delta_deg + 0.5 * dt * d2, s.omega_dev + 0.5 * dt * w2);
        const auto [d4, w4] = f(s.delta_deg + dt * d3, s.omega_dev + dt * w3);
        s.delta_deg += dt / 6.0 * (d1 + 2 * d2 + 2 * d3 + d4);
        s.omega_dev += dt / 6.0 * (w1 + 2 * w2 + 2 * w3 + w4);
    }
    return s;
}

const TraceSample& sample_at(const Trace& tr, double t)
{
    const double dt = tr.scenario.dt;
    const auto k = static_cast<std::size_t>(std::llround(t / dt));
    return tr.samples.at(k);
}

}  // namespace

TEST_CASE("electrical power")
{
    CHECK(electrical_power({1.0, 0.0}, {0.6, 0.3}) == Approx(0.6));
    CHECK(electrical_power({0.0, 0.0}, {1.2, 0.0}) == 0.0);
    CHECK(electrical_power({0.8, 0.6}, {0.5, 0.75}) == Approx(0.85));
}

TEST_CASE("swing step")
{
    SystemParams p;
    SUBCASE("balanced power leaves the state unchanged")
    {
        const SwingState s{30.0, 0.0};
        const SwingState n = swing_step(s, p.p0, p, 1e-4);
        CHECK(n.delta_deg == 30.0);
        CHECK(n.omega_dev == 0.0);
    }
    SUBCASE("undamped constant imbalance accelerates linearly")
    {
        p.swing_damping = 0.0;
        SwingState s{0.0, 0.0};
        const double dt = 1e-3;
        for (int n = 0; n < 100; ++n) s = swing_step(s, p.p0 - 0.2, p, dt);
        CHECK(s.omega_dev == Approx(100 * dt * 0.2 / p.swing_inertia).epsilon(1e-12));
    }
    SUBCASE("agrees with RK4 over one second")
    {
        p.swing_inertia = 0.2;
        p.swing_damping = 0.1;
        const double start = equilibrium_angle(p);
        p.p0 += 0.5;
        SwingState euler{start, 0.0};
        const double dt = 1e-4;
        for (int n = 0; n < 10000; ++n) euler = swing_step(euler, unsaturated_power(euler.delta_deg, p), p, dt);
        const SwingState ref = rk4({start, 0.0}, p, dt, 10000);
        CHECK(std::abs(euler.delta_deg - ref.delta_deg) < 0.1);
    }
}

TEST_CASE("events")
{
    const ScenarioConfig f = case_preset(CaseId::F);
    const SystemParams& base = f.scenario.params;
    CHECK(apply_events(f.scenario, 3.9999, base).phase_jump_deg == 0.0);
    CHECK(apply_events(f.scenario, 4.0, base).phase_jump_deg == Approx(-78.49));

    const ScenarioConfig g = case_preset(CaseId::G1);
    CHECK(apply_events(g.scenario, 3.0, g.scenario.params).params.p0 == Approx(0.6));
    CHECK(apply_events(g.scenario, 5.0, g.scenario.params).params.p0 == Approx(1.1));

    const ScenarioConfig b = case_preset(CaseId::B);
    const NetworkView during = apply_events(b.scenario, 4.05, b.scenario.params);
    REQUIRE(during.fault);
    CHECK(during.fault->resistance == 0.0);
    CHECK_FALSE(apply_events(b.scenario, 4.2, b.scenario.params).fault);

    CHECK(disturbance_end(b.scenario.events) == Approx(4.15));
    CHECK(disturbance_end({}) == 0.0);
}

TEST_CASE("equilibrium angle")
{
    const SystemParams p;
    const double d = equilibrium_angle(p);
    CHECK(d == Approx(26.847).epsilon(1e-3 / 26.847));
    CHECK(unsaturated_power(d, p) == Approx(p.p0).epsilon(1e-9));
    SystemParams q;
    q.p0 = 5.0;
    CHECK_THROWS_AS(equilibrium_angle(q), std::domain_error);
}

TEST_CASE("bolted fault sample has zero voltage and power")
{
    const Trace tr = simulate(case_preset(CaseId::B).scenario);
    const TraceSample& s = sample_at(tr, 4.05);
    CHECK(s.fault_active);
    CHECK(s.v_dq.d == 0.0);
    CHECK(s.v_dq.q == 0.0);
    CHECK(s.p_e == 0.0);
    CHECK(s.saturated);
}

TEST_CASE("unsaturated trajectory lies on the perpendicular bisector")
{
    const ScenarioConfig a = case_preset(CaseId::A);
    const Trace tr = simulate(a.scenario);
    const SystemParams& p = a.scenario.params;
    const Complex foc_a = -p.z_tr.value;
    const Complex foc_d = p.z_l.value + p.z_g.value;
    double worst = 0.0;
    for (const TraceSample& s : tr.samples) {
        if (s.fault_active || !s.z_app) continue;
        CHECK_FALSE(s.saturated);
        worst = std::max(worst, std::abs(std::abs(s.z_app->value - foc_a) - std::abs(s.z_app->value - foc_d)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("saturated trajectory stays on the circle")
{
    const ScenarioConfig b = case_preset(CaseId::B);
    const Trace tr = simulate(b.scenario);
    const SystemParams& p = b.scenario.params;
    const Complex centre = p.z_l.value + p.z_g.value;
    const double r = p.v_g / p.i_max;
    std::size_t n = 0;
    for (const TraceSample& s : tr.samples) {
        if (s.t <= 4.15 || !s.saturated || !s.z_app) continue;
        ++n;
        CHECK(std::abs(std::abs(s.z_app->value - centre) - r) < 0.02 * r);
    }
    CHECK(n > 0);
}

TEST_CASE("transitions")
{
    SUBCASE("no saturation, no transitions")
    {
        Scenario s;
        s.csa = CsaKind::d_priority();
        s.t_end = 1.0;
        CHECK(extract_transitions(simulate(s)).empty());
    }
    SUBCASE("circular CSA enters and exits near the analytic angles")
    {
        const Trace tr = simulate(case_preset(CaseId::B).scenario);
        const auto tr_list = extract_transitions(tr);
        const Transition* enter = nullptr;
        const Transition* exit = nullptr;
        for (const Transition& t : tr_list) {
            if (t.t <= 4.15) continue;
            if (!enter && t.kind == TransitionKind::Enter) enter = &t;
            if (!exit && t.kind == TransitionKind::Exit) exit = &t;
        }
        REQUIRE(enter);
        REQUIRE(exit);
        const SystemParams p;
        CHECK(std::abs(enter->delta_deg - *delta_enter(p)) < 1.5);
        CHECK(std::abs(exit->delta_deg - (360.0 - delta_exit_circular(p))) < 5.0);
    }
}

TEST_CASE("steady saturated equilibrium after a large phase jump")
{
    const Trace tr = simulate(case_preset(CaseId::H).scenario);
    const TraceSample& last = tr.samples.back();
    CHECK(last.saturated);
    CHECK(last.i_mag == Approx(1.2).epsilon(1e-3));
    CHECK(last.p_e == Approx(0.6).epsilon(0.02));
    // the angle has stopped moving over the last second
    const TraceSample& earlier = sample_at(tr, tr.scenario.t_end - 1.0);
    CHECK(std::abs(last.delta_deg - earlier.delta_deg) < 0.01);
}

TEST_CASE("determinism and time-step convergence")
{
    Scenario s = case_preset(CaseId::F).scenario;
    s.t_end = 6.0;
    const Trace a = simulate(s);
    const Trace b = simulate(s);
    REQUIRE(a.samples.size() == b.samples.size());
    bool same = true;
    for (std::size_t k = 0; k < a.samples.size(); ++k)
        same = same && a.samples[k].delta_deg == b.samples[k].delta_deg && a.samples[k].i_dq == b.samples[k].i_dq;
    CHECK(same);

    Scenario half = s;
    half.dt = s.dt / 2.0;
    const Trace h = simulate(half);
    double worst = 0.0;
    for (std::size_t k = 0; k < a.samples.size(); ++k)
        worst = std::max(worst, std::abs(a.samples[k].delta_deg - h.samples[2 * k].delta_deg));
    CHECK(worst < 0.05);
}

TEST_CASE("scenario validation")
{
    Scenario s;
    s.dt = 0.0;
    CHECK_THROWS_AS(simulate(s), ScenarioValidationError);
    s = Scenario{};
    s.t_end = 3.0;
    s.events = {{4.0, PowerStep{0.1}}};
    CHECK_THROWS_AS(validate(s), ScenarioValidationError);
    s.events = {{1.0, ThreePhaseFault{0.5, 0.0}}, {1.2, ThreePhaseFault{0.1, 0.0}}};
    CHECK_THROWS_AS(validate(s), ScenarioValidationError);
    s.events = {{1.0, ThreePhaseFault{0.0, 0.0}}};
    CHECK_THROWS_AS(validate(s), ScenarioValidationError);
    s.events = {};
    s.csa = CsaKind{CsaType::ConstantAngle, -180.0};
    CHECK_THROWS_AS(validate(s), ScenarioValidationError);
}

TEST_CASE("divergence aborts")
{
    Scenario s;
    s.params.swing_inertia = 0.0005;
    s.params.swing_damping = 0.0;
    s.events = {{0.1, PowerStep{50.0}}};
    s.t_end = 2.0;
    CHECK_THROWS_AS(simulate(s), SimulationAbort);
}

TEST_CASE("no events keeps the equilibrium")
{
    Scenario s;
    s.csa = CsaKind::d_priority();
    const Trace tr = simulate(s);
    const TraceSample& first = tr.samples.front();
    double worst = 0.0;
    for (const TraceSample& x : tr.samples) {
        worst = std::max({worst, std::abs(x.delta_deg - first.delta_deg), std::abs(x.i_dq.d - first.i_dq.d),
                          std::abs(x.i_dq.q - first.i_dq.q), std::abs(x.p_e - first.p_e)});
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("current stays under the limit once the entry transient settles")
{
    for (CaseId id : {CaseId::B, CaseId::C, CaseId::D}) {
        CAPTURE(case_name(id));
        const Trace tr = simulate(case_preset(id).scenario);
        double worst = 0.0;
        for (const TraceSample& x : tr.samples) worst = std::max(worst, x.i_mag);
        CHECK(worst <= tr.scenario.params.i_max + 1e-6);
    }
}

TEST_CASE("halving the step moves extracted angles by at most one step of travel")
{
    // transitions are reported at the first sample past the boundary, so the
    // angle can shift by the distance delta covers in one step
    for (CaseId id : {CaseId::B, CaseId::C, CaseId::D}) {
        CAPTURE(case_name(id));
        Scenario s = case_preset(id).scenario;
        s.t_end = 6.0;
        Scenario half = s;
        half.dt /= 2.0;
        const Trace ta = simulate(s);
        const ComparisonReport a = compare_angles(ta);
        const ComparisonReport b = compare_angles(simulate(half));
        double travel = 0.0;
        for (std::size_t k = 1; k < ta.samples.size(); ++k)
            if (ta.samples[k].t > 4.15)
                travel = std::max(travel, std::abs(ta.samples[k].delta_deg - ta.samples[k - 1].delta_deg));
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t k = 0; k < a.rows.size(); ++k) {
            CAPTURE(a.rows[k].quantity);
            CHECK(std::abs(a.rows[k].simulated - b.rows[k].simulated) <= travel);
        }
    }
}
