#include "gfmswing/csa.hpp"

#include "gfmswing/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gfmswing {

CsaKind CsaKind::constant_angle(double beta_deg)
{
    if (!std::isfinite(beta_deg) || beta_deg <= -180.0 || beta_deg > 180.0)
        throw std::invalid_argument("constant CSA angle must lie in (-180, 180]");
    return {CsaType::ConstantAngle, beta_deg};
}

std::string_view csa_name(CsaType type)
{
    switch (type) {
    case CsaType::None: return "none";
    case CsaType::Circular: return "circular";
    case CsaType::DPriority: return "d_priority";
    case CsaType::QPriority: return "q_priority";
    case CsaType::ConstantAngle: return "constant";
    }
    return "none";
}

std::optional<CsaType> parse_csa_name(std::string_view name)
{
    for (CsaType t : {CsaType::None, CsaType::Circular, CsaType::DPriority, CsaType::QPriority,
                      CsaType::ConstantAngle}) {
        if (csa_name(t) == name) return t;
    }
    return std::nullopt;
}

DqPair limit_circular(DqPair ref, double i_max)
{
    const double mag = ref.magnitude();
    if (mag <= i_max) return ref;
    const double k = i_max / mag;
    return {ref.d * k, ref.q * k};
}

DqPair limit_d_priority(DqPair ref, double i_max)
{
    const double d = std::clamp(ref.d, -i_max, i_max);
    const double headroom = std::sqrt(std::max(0.0, i_max * i_max - d * d));
    return {d, std::clamp(ref.q, -headroom, headroom)};
}

DqPair limit_q_priority(DqPair ref, double i_max)
{
    const DqPair swapped = limit_d_priority({ref.q, ref.d}, i_max);
    return {swapped.q, swapped.d};
}

DqPair limit_constant(DqPair ref, double i_max, double beta_deg, bool saturating)
{
    if (!saturating) return ref;
    const double b = deg2rad(beta_deg);
    return {i_max * std::cos(b), i_max * std::sin(b)};
}

DqPair apply_limiter(const CsaKind& kind, DqPair ref, double i_max)
{
    switch (kind.type) {
    case CsaType::None: return ref;
    case CsaType::Circular: return limit_circular(ref, i_max);
    case CsaType::DPriority: return limit_d_priority(ref, i_max);
    case CsaType::QPriority: return limit_q_priority(ref, i_max);
    case CsaType::ConstantAngle:
        return limit_constant(ref, i_max, kind.beta_deg, entering_condition(ref, i_max));
    }
    return ref;
}

DqPair saturated_reference(const LimiterState& state, DqPair i_prev, double u_max)
{
    return {state.sign_ud * u_max + i_prev.d, state.sign_uq * u_max + i_prev.q};
}

bool entering_condition(DqPair ref, double i_max)
{
    return ref.d * ref.d + ref.q * ref.q > i_max * i_max;
}

ExitDecision exit_condition(const CsaKind& kind, double delta_deg, const SystemParams& p,
                            const LimiterState&)
{
    const double delta = normalize_deg(delta_deg);
    switch (kind.type) {
    case CsaType::None:
        return {true, 0};
    case CsaType::ConstantAngle:
        return {unsaturated_current(delta, p).magnitude() < p.i_max, 0};
    case CsaType::QPriority: {
        double e = 0.0;
        try {
            e = delta_exit_q(p);
        } catch (const NoExitSolutionError&) {
            return {false, 0};
        }
        if (delta >= 180.0 - e && delta <= 180.0) return {false, +1};
        if (delta > 180.0 && delta <= 180.0 + e) return {false, -1};
        return {exit_angle_set(kind, p).contains(delta), 0};
    }
    case CsaType::Circular:
    case CsaType::DPriority:
        try {
            return {exit_angle_set(kind, p).contains(delta), 0};
        } catch (const NoExitSolutionError&) {
            return {false, 0};
        }
    }
    return {false, 0};
}

DqPair settled_current(const CsaKind& kind, int sign_ud, int sign_uq, double i_max)
{
    switch (kind.type) {
    case CsaType::Circular: {
        const double c = i_max * std::sqrt(0.5);
        return {sign_ud * c, sign_uq * c};
    }
    case CsaType::DPriority: return {sign_ud * i_max, 0.0};
    case CsaType::QPriority: return {0.0, sign_uq * i_max};
    case CsaType::ConstantAngle: return limit_constant({}, i_max, kind.beta_deg, true);
    case CsaType::None: break;
    }
    throw std::invalid_argument("no settled current without a limiter");
}

namespace {

int sign_or(double x, int fallback)
{
    if (x > 0.0) return +1;
    if (x < 0.0) return -1;
    return fallback;
}

struct Signs {
    int d;
    int q;
    friend bool operator==(const Signs&, const Signs&) = default;
};

class SignModel {
public:
    SignModel(const CsaKind& kind, double delta_deg, const SystemParams& p,
              const std::optional<FaultCondition>& fault)
        : kind_(kind), delta_(delta_deg), p_(p), fault_(fault)
    {
    }

    // sgn(v_ref - v) for the current the loops settle to under `s`; zero
    // errors keep the supplied sign.
    Signs demanded(Signs s) const
    {
        const DqPair v = pcc_voltage(settled_current(kind_, s.d, s.q, p_.i_max), delta_, p_, fault_);
        return {sign_or(p_.v_d_ref - v.d, s.d), sign_or(p_.v_q_ref - v.q, s.q)};
    }

    bool consistent(Signs s) const { return demanded(s) == s; }

    // Clamp signs flip only into a self-consistent state; with none
    // available the integrators stay where they are.
    Signs update(Signs current) const
    {
        const Signs want = demanded(current);
        if (want == current) return current;
        std::array<Signs, 3> candidates{want, Signs{want.d, current.q}, Signs{current.d, want.q}};
        for (const Signs& c : candidates) {
            if (c == current) continue;
            if (consistent(c)) return c;
        }
        return current;
    }

private:
    const CsaKind& kind_;
    double delta_;
    const SystemParams& p_;
    const std::optional<FaultCondition>& fault_;
};

// Residual angle error at which the entry transient counts as finished.
constexpr double kSettledGapDeg = 0.5;

double lag_fraction(const ModeStepOptions& opt)
{
    if (opt.tau_sat <= 0.0 || opt.dt <= 0.0) return 1.0;
    return 1.0 - std::exp(-opt.dt / opt.tau_sat);
}

// Moves the injected current angle toward the settled target.
DqPair lagged_current(LimiterState& st, double from_deg, DqPair target, double alpha, double i_max)
{
    st.theta_target_deg = target.angle_deg();
    const double gap = wrap_deg_180(st.theta_target_deg - from_deg);
    if (alpha >= 1.0 || std::abs(gap) * (1.0 - alpha) < kSettledGapDeg) {
        st.theta_i_deg = st.theta_target_deg;
        return target;
    }
    st.theta_i_deg = wrap_deg_180(from_deg + alpha * gap);
    const Complex c = polar_deg(i_max, st.theta_i_deg);
    return {c.real(), c.imag()};
}

}  // namespace

std::optional<DqPair> consistent_settled_current(const CsaKind& kind, double delta_deg,
                                                 const SystemParams& p)
{
    if (kind.type == CsaType::None) return std::nullopt;
    const std::optional<FaultCondition> no_fault;
    const SignModel model(kind, delta_deg, p, no_fault);
    for (const Signs s : {Signs{+1, +1}, Signs{+1, -1}, Signs{-1, +1}, Signs{-1, -1}}) {
        if (model.consistent(s)) return settled_current(kind, s.d, s.q, p.i_max);
    }
    return std::nullopt;
}

ModeStepResult mode_step(const LimiterState& state, const CsaKind& kind, double delta_deg,
                         const SystemParams& p, const ModeStepOptions& opt)
{
    const SourceCurrent src = source_current(delta_deg, p, opt.fault);
    if (kind.type == CsaType::None) return {LimiterState{}, src.value, src.unbounded};

    const double i_max = p.i_max;
    const double alpha = lag_fraction(opt);
    const SignModel signs(kind, delta_deg, p, opt.fault);
    LimiterState next = state;

    if (!state.saturated) {
        if (!src.unbounded && !entering_condition(src.value, i_max))
            return {LimiterState{}, src.value, false};

        // An unbounded demand only has a direction; any over-limit magnitude
        // gives the same limiter output.
        const DqPair ref = src.unbounded ? (2.0 * i_max) * src.value : src.value;
        const DqPair start = kind.type == CsaType::ConstantAngle
                                 ? limit_constant(ref, i_max, kind.beta_deg, true)
                                 : apply_limiter(kind, ref, i_max);
        const DqPair v0 = pcc_voltage(start, delta_deg, p, opt.fault);
        Signs s{sign_or(p.v_d_ref - v0.d, sign_or(start.d, +1)),
                sign_or(p.v_q_ref - v0.q, sign_or(start.q, +1))};
        next = LimiterState{};
        next.saturated = true;
        if (kind.type == CsaType::QPriority && !opt.fault) {
            const ExitDecision window = exit_condition(kind, delta_deg, p, next);
            if (window.forced_q_sign != 0) {
                s.q = window.forced_q_sign;
                next.forced_q = true;
            }
        }
        next.sign_ud = s.d;
        next.sign_uq = s.q;
        const DqPair target = settled_current(kind, s.d, s.q, i_max);
        const DqPair current = lagged_current(next, start.angle_deg(), target, alpha, i_max);
        return {next, current, false};
    }

    bool leave = false;
    int forced = 0;
    if (opt.fault) {
        leave = !src.unbounded && src.value.magnitude() < i_max;
    } else {
        const ExitDecision decision = exit_condition(kind, delta_deg, p, state);
        leave = decision.exit;
        forced = decision.forced_q_sign;
    }
    if (leave) return {LimiterState{}, src.value, false};

    Signs s{state.sign_ud, state.sign_uq};
    if (forced != 0) {
        s.q = forced;
        next.forced_q = true;
    } else {
        next.forced_q = false;
        s = signs.update(s);
    }
    next.sign_ud = s.d;
    next.sign_uq = s.q;
    // Only the entry transient is lagged; once settled, clamp flips land
    // in one step.
    const bool settling = state.theta_i_deg != state.theta_target_deg;
    const DqPair target = settled_current(kind, s.d, s.q, i_max);
    const DqPair current =
        lagged_current(next, state.theta_i_deg, target, settling ? alpha : 1.0, i_max);
    return {next, current, false};
}

}  // namespace gfmswing
