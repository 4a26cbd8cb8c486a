#pragma once

#include "gfmswing/csa.hpp"
#include "gfmswing/phasor.hpp"

#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace gfmswing {

/// Power angle (unwrapped, degrees) and per-unit frequency deviation of the
/// virtual machine.
struct SwingState {
    double delta_deg = 0.0;
    double omega_dev = 0.0;
};

struct ThreePhaseFault {
    double duration = 0.15;
    double fault_resistance = 0.0;
    friend bool operator==(const ThreePhaseFault&, const ThreePhaseFault&) = default;
};

/// Step of the grid angle theta_g; the power angle moves by -jump.
struct PhaseJump {
    double jump_deg = 0.0;
    friend bool operator==(const PhaseJump&, const PhaseJump&) = default;
};

struct PowerStep {
    double delta_p = 0.0;
    friend bool operator==(const PowerStep&, const PowerStep&) = default;
};

struct Event {
    double time = 0.0;
    std::variant<ThreePhaseFault, PhaseJump, PowerStep> kind;
    friend bool operator==(const Event&, const Event&) = default;
};

/// Time after which the scenario's disturbances have all occurred (fault
/// clearing included).
double disturbance_end(const std::vector<Event>& events);

struct Scenario {
    SystemParams params;
    CsaKind csa;
    // Lag on the current angle while it settles after entering saturation;
    // 0 settles in one step.
    double tau_sat = 0.010;
    std::vector<Event> events;
    double t_end = 10.0;
    double dt = 1e-4;
    friend bool operator==(const Scenario&, const Scenario&) = default;
};

class ScenarioValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SimulationAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws ScenarioValidationError on non-positive dt, events at or past
/// t_end, negative times, non-positive fault durations or overlapping faults.
void validate(const Scenario& scenario);

struct TraceSample {
    double t = 0.0;
    double delta_deg = 0.0;  // unwrapped
    DqPair i_dq;
    DqPair v_dq;
    double i_mag = 0.0;
    std::optional<Impedance> z_app;
    bool saturated = false;
    bool forced_q = false;
    double theta_i_deg = 0.0;
    double p_e = 0.0;
    bool fault_active = false;
};

struct Trace {
    std::vector<TraceSample> samples;
    Scenario scenario;
};

double electrical_power(DqPair v, DqPair i);

/// Semi-implicit Euler step of M dw/dt = P0 - Pe - D w, d(delta)/dt = w_base w.
SwingState swing_step(const SwingState& state, double p_e, const SystemParams& params, double dt);

/// Network seen at time t once the scenario's events are applied.
struct NetworkView {
    SystemParams params;
    std::optional<FaultCondition> fault;
    // Sum of phase jumps that have occurred by t.
    double phase_jump_deg = 0.0;
};

NetworkView apply_events(const Scenario& scenario, double t, const SystemParams& base_params);

/// Unsaturated electrical power for v = v_ref at angle delta.
double unsaturated_power(double delta_deg, const SystemParams& params);

/// Stable operating angle with v = v_ref and Pe = P0. Throws
/// std::domain_error when P0 is not reachable below the saturation threshold.
double equilibrium_angle(const SystemParams& params);

Trace simulate(const Scenario& scenario);

enum class TransitionKind { Enter, Exit };

struct Transition {
    double t;
    double delta_deg;  // normalized into [0, 360)
    TransitionKind kind;
    // Current angle of the last saturated sample on an exit, of the first
    // saturated sample on an entry.
    double theta_i_deg;
};

std::vector<Transition> extract_transitions(const Trace& trace);
std::vector<Transition> extract_transitions(const std::vector<TraceSample>& samples);

}  // namespace gfmswing
