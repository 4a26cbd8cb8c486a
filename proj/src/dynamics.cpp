#include "gfmswing/dynamics.hpp"

#include "gfmswing/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gfmswing {

namespace {

constexpr double kOmegaAbortLimit = 10.0;

bool reached(double t, double event_time, double dt)
{
    return t >= event_time - 0.5 * dt;
}

}  // namespace

double disturbance_end(const std::vector<Event>& events)
{
    double end = 0.0;
    for (const Event& e : events) {
        double stop = e.time;
        if (const auto* f = std::get_if<ThreePhaseFault>(&e.kind)) stop += f->duration;
        end = std::max(end, stop);
    }
    return end;
}

void validate(const Scenario& s)
{
    auto fail = [](const std::string& msg) { throw ScenarioValidationError(msg); };
    try {
        validate(s.params);
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (!(s.dt > 0.0) || !std::isfinite(s.dt)) fail("dt must be positive");
    if (!(s.t_end > 0.0) || !std::isfinite(s.t_end)) fail("t_end must be positive");
    if (s.tau_sat < 0.0 || !std::isfinite(s.tau_sat)) fail("tau_sat must be non-negative");
    if (s.csa.type == CsaType::ConstantAngle && (s.csa.beta_deg <= -180.0 || s.csa.beta_deg > 180.0))
        fail("constant CSA angle must lie in (-180, 180]");

    std::vector<std::pair<double, double>> faults;
    for (const Event& e : s.events) {
        if (!(e.time >= 0.0)) fail("event time must be non-negative");
        if (!(e.time < s.t_end)) fail("t_end must exceed every event time");
        if (const auto* f = std::get_if<ThreePhaseFault>(&e.kind)) {
            if (!(f->duration > 0.0)) fail("fault duration must be positive");
            if (!(f->fault_resistance >= 0.0)) fail("fault resistance must be non-negative");
            faults.emplace_back(e.time, e.time + f->duration);
        }
    }
    std::sort(faults.begin(), faults.end());
    for (std::size_t k = 1; k < faults.size(); ++k) {
        if (faults[k].first < faults[k - 1].second) fail("overlapping faults are not supported");
    }
}

double electrical_power(DqPair v, DqPair i)
{
    return v.d * i.d + v.q * i.q;
}

SwingState swing_step(const SwingState& s, double p_e, const SystemParams& p, double dt)
{
    const double omega_base = 2.0 * std::numbers::pi * p.f_n;
    SwingState next;
    next.omega_dev =
        s.omega_dev + dt / p.swing_inertia * (p.p0 - p_e - p.swing_damping * s.omega_dev);
    next.delta_deg = s.delta_deg + rad2deg(dt * omega_base * next.omega_dev);
    return next;
}

NetworkView apply_events(const Scenario& scenario, double t, const SystemParams& base)
{
    NetworkView view{base, std::nullopt, 0.0};
    for (const Event& e : scenario.events) {
        if (!reached(t, e.time, scenario.dt)) continue;
        if (const auto* f = std::get_if<ThreePhaseFault>(&e.kind)) {
            if (!reached(t, e.time + f->duration, scenario.dt))
                view.fault = FaultCondition{f->fault_resistance};
        } else if (const auto* j = std::get_if<PhaseJump>(&e.kind)) {
            view.phase_jump_deg += j->jump_deg;
        } else if (const auto* ps = std::get_if<PowerStep>(&e.kind)) {
            view.params.p0 += ps->delta_p;
        }
    }
    return view;
}

double unsaturated_power(double delta_deg, const SystemParams& p)
{
    return electrical_power({p.v_d_ref, p.v_q_ref}, unsaturated_current(delta_deg, p));
}

double equilibrium_angle(const SystemParams& p)
{
    const auto enter = delta_enter(p);
    const double upper = enter ? *enter : 180.0;
    auto mismatch = [&](double d) { return unsaturated_power(d, p) - p.p0; };

    double lo = -90.0;
    if (mismatch(lo) >= 0.0) throw std::domain_error("no stable operating angle above -90 deg");
    double hi = lo;
    bool bracketed = false;
    for (double d = lo + 0.25; d <= upper + 1e-12; d += 0.25) {
        if (mismatch(d) >= 0.0) {
            hi = d;
            bracketed = true;
            break;
        }
        lo = d;
    }
    if (!bracketed && mismatch(upper) >= 0.0) {
        hi = upper;
        bracketed = true;
    }
    if (!bracketed)
        throw std::domain_error("active power set point is not reachable without saturating");
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (mismatch(mid) < 0.0 ? lo : hi) = mid;
    }
    return std::abs(mismatch(lo)) <= std::abs(mismatch(hi)) ? lo : hi;
}

Trace simulate(const Scenario& scenario)
{
    validate(scenario);
    const SystemParams& base = scenario.params;

    Trace trace;
    trace.scenario = scenario;
    const auto steps = static_cast<long>(std::llround(scenario.t_end / scenario.dt));
    trace.samples.reserve(static_cast<std::size_t>(steps) + 1);

    SwingState swing{equilibrium_angle(base), 0.0};
    LimiterState limiter;
    double applied_jump = 0.0;

    for (long n = 0; n <= steps; ++n) {
        const double t = static_cast<double>(n) * scenario.dt;
        const NetworkView view = apply_events(scenario, t, base);
        if (view.phase_jump_deg != applied_jump) {
            swing.delta_deg -= view.phase_jump_deg - applied_jump;
            applied_jump = view.phase_jump_deg;
        }

        ModeStepOptions opt;
        opt.fault = view.fault;
        opt.tau_sat = scenario.tau_sat;
        opt.dt = scenario.dt;
        const ModeStepResult step = mode_step(limiter, scenario.csa, swing.delta_deg, view.params, opt);
        limiter = step.state;

        TraceSample s;
        s.t = t;
        s.delta_deg = swing.delta_deg;
        s.saturated = limiter.saturated;
        s.forced_q = limiter.forced_q;
        s.theta_i_deg = limiter.saturated ? limiter.theta_i_deg : step.current.angle_deg();
        s.fault_active = view.fault.has_value();
        if (step.unbounded) {
            // No limiter against a bolted fault: the PCC collapses and only
            // the grid-side infeed is finite.
            s.v_dq = {0.0, 0.0};
            s.i_dq = line_current(s.v_dq, swing.delta_deg, view.params);
            s.p_e = 0.0;
        } else {
            s.i_dq = step.current;
            s.v_dq = pcc_voltage(s.i_dq, swing.delta_deg, view.params, view.fault);
            s.p_e = electrical_power(s.v_dq, s.i_dq);
        }
        s.i_mag = s.i_dq.magnitude();
        s.z_app = apparent_impedance(s.v_dq, line_current(s.v_dq, swing.delta_deg, view.params),
                                     view.params);
        trace.samples.push_back(s);

        if (n == steps) break;
        swing = swing_step(swing, s.p_e, view.params, scenario.dt);
        if (!std::isfinite(swing.omega_dev) || std::abs(swing.omega_dev) > kOmegaAbortLimit) {
            std::ostringstream msg;
            msg << "simulation diverged at t = " << t << " s (frequency deviation "
                << swing.omega_dev << " p.u.)";
            throw SimulationAbort(msg.str());
        }
    }
    return trace;
}

std::vector<Transition> extract_transitions(const std::vector<TraceSample>& samples)
{
    std::vector<Transition> out;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const TraceSample& prev = samples[k - 1];
        const TraceSample& cur = samples[k];
        if (prev.saturated == cur.saturated) continue;
        if (cur.saturated)
            out.push_back({cur.t, normalize_deg(cur.delta_deg), TransitionKind::Enter, cur.theta_i_deg});
        else
            out.push_back({cur.t, normalize_deg(cur.delta_deg), TransitionKind::Exit, prev.theta_i_deg});
    }
    return out;
}

std::vector<Transition> extract_transitions(const Trace& trace)
{
    return extract_transitions(trace.samples);
}

}  // namespace gfmswing
