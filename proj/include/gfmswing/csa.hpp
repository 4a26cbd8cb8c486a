#pragma once

#include "gfmswing/phasor.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace gfmswing {

enum class CsaType { None, Circular, DPriority, QPriority, ConstantAngle };

/// Current saturation algorithm selection. `beta_deg` is only meaningful for
/// ConstantAngle and lies in (-180, 180].
struct CsaKind {
    CsaType type = CsaType::None;
    double beta_deg = 0.0;

    static CsaKind none() { return {CsaType::None, 0.0}; }
    static CsaKind circular() { return {CsaType::Circular, 0.0}; }
    static CsaKind d_priority() { return {CsaType::DPriority, 0.0}; }
    static CsaKind q_priority() { return {CsaType::QPriority, 0.0}; }
    static CsaKind constant_angle(double beta_deg);

    friend bool operator==(const CsaKind&, const CsaKind&) = default;
};

/// Config-file spelling: none, circular, d_priority, q_priority, constant.
std::string_view csa_name(CsaType type);
std::optional<CsaType> parse_csa_name(std::string_view name);

struct LimiterState {
    bool saturated = false;
    // Angle of the injected current; lags theta_target during the entry
    // transient when a time constant is configured.
    double theta_i_deg = 0.0;
    double theta_target_deg = 0.0;
    int sign_ud = +1;
    int sign_uq = +1;
    bool forced_q = false;

    friend bool operator==(const LimiterState&, const LimiterState&) = default;
};

DqPair limit_circular(DqPair ref, double i_max);
DqPair limit_d_priority(DqPair ref, double i_max);
DqPair limit_q_priority(DqPair ref, double i_max);
DqPair limit_constant(DqPair ref, double i_max, double beta_deg, bool saturating);

/// Dispatch on kind. None passes through; ConstantAngle saturates when the
/// entering condition holds.
DqPair apply_limiter(const CsaKind& kind, DqPair ref, double i_max);

/// Pre-limiter reference with both voltage PIs clamped:
/// (sgn(u_d) u_max + i_d, sgn(u_q) u_max + i_q).
DqPair saturated_reference(const LimiterState& state, DqPair i_prev, double u_max);

/// Strict i_d^2 + i_q^2 > i_max^2.
bool entering_condition(DqPair ref, double i_max);

struct ExitDecision {
    bool exit = false;
    // +1 / -1 while the q-axis forced-saturation window pins i_q; 0 otherwise.
    int forced_q_sign = 0;
};

/// Exit test for a saturated limiter at angle delta (any real value, reduced
/// mod 360). An impossible exit angle yields an empty exit set.
ExitDecision exit_condition(const CsaKind& kind, double delta_deg, const SystemParams& params,
                            const LimiterState& state);

/// Current the clamped loops settle to for the given clamp signs.
DqPair settled_current(const CsaKind& kind, int sign_ud, int sign_uq, double i_max);

/// Settled saturated current whose clamp signs agree with the voltage errors
/// they produce at delta; nullopt when no sign pair is self-consistent.
std::optional<DqPair> consistent_settled_current(const CsaKind& kind, double delta_deg,
                                                 const SystemParams& params);

struct ModeStepOptions {
    std::optional<FaultCondition> fault;
    // First-order lag on the current angle after entering saturation, until
    // it is within half a degree of the settled value; 0 settles in one step.
    double tau_sat = 0.0;
    double dt = 0.0;
};

struct ModeStepResult {
    LimiterState state;
    DqPair current;
    // Set when the inverter current is unbounded (no limiter during a bolted
    // fault); `current` is then meaningless.
    bool unbounded = false;
};

/// One quasi-static limiter step at angle delta.
ModeStepResult mode_step(const LimiterState& state, const CsaKind& kind, double delta_deg,
                         const SystemParams& params, const ModeStepOptions& options = {});

}  // namespace gfmswing
