#include "gfmswing/analytic.hpp"

#include <algorithm>
#include <cmath>

namespace gfmswing {

AngleSet::AngleSet(std::vector<Interval> intervals)
{
    for (const auto& iv : intervals) {
        if (!(iv.lo <= iv.hi) || iv.lo < 0.0 || iv.hi > 360.0)
            throw std::invalid_argument("angle interval must satisfy 0 <= lo <= hi <= 360");
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (const auto& iv : intervals) {
        if (!intervals_.empty() && iv.lo <= intervals_.back().hi)
            intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
        else
            intervals_.push_back(iv);
    }
}

bool AngleSet::contains(double delta_deg) const
{
    const double d = normalize_deg(delta_deg);
    for (const auto& iv : intervals_) {
        if (d >= iv.lo && d <= iv.hi) return true;
        // 0 and 360 are the same angle
        if (d == 0.0 && iv.hi == 360.0) return true;
    }
    return false;
}

AngleSet AngleSet::intersect(const AngleSet& other) const
{
    std::vector<Interval> out;
    for (const auto& a : intervals_) {
        for (const auto& b : other.intervals_) {
            const double lo = std::max(a.lo, b.lo);
            const double hi = std::min(a.hi, b.hi);
            if (lo <= hi) out.push_back({lo, hi});
        }
    }
    return AngleSet(std::move(out));
}

namespace {

double impedance_angle_rad(const SystemParams& p)
{
    return std::arg(total_impedance(p).value);
}

double checked_asin_deg(double arg, const char* what)
{
    if (!(arg >= -1.0 && arg <= 1.0)) throw NoExitSolutionError(what);
    return rad2deg(std::asin(arg));
}

double checked_acos_deg(double arg, const char* what)
{
    if (!(arg >= -1.0 && arg <= 1.0)) throw NoExitSolutionError(what);
    return rad2deg(std::acos(arg));
}

AngleSet symmetric_exit_set(double exit_deg)
{
    const double e = std::clamp(exit_deg, 0.0, 180.0);
    return AngleSet({{0.0, e}, {360.0 - e, 360.0}});
}

}  // namespace

std::optional<double> delta_enter(const SystemParams& p)
{
    const double zi = total_impedance(p).magnitude() * p.i_max;
    const double arg =
        (p.v_d_ref * p.v_d_ref + p.v_g * p.v_g - zi * zi) / (2.0 * p.v_d_ref * p.v_g);
    // Below -1 the current stays under the limit even at delta = 180.
    if (arg < -1.0) return std::nullopt;
    // Above 1 the limit is exceeded at every angle.
    if (arg > 1.0) return 0.0;
    return rad2deg(std::acos(arg));
}

double delta_exit_circular(const SystemParams& p)
{
    const double phi = impedance_angle_rad(p);
    const double arg = std::sqrt(2.0) * p.i_max * total_impedance(p).magnitude() *
                       (std::cos(phi) + std::sin(phi)) / (2.0 * p.v_g);
    return checked_asin_deg(arg, "circular exit angle: arcsin argument outside [-1, 1]");
}

double delta_exit_d(const SystemParams& p)
{
    const double phi = impedance_angle_rad(p);
    const double arg =
        (p.v_d_ref - total_impedance(p).magnitude() * p.i_max * std::cos(phi)) / p.v_g;
    return checked_acos_deg(arg, "d-axis exit angle: arccos argument outside [-1, 1]");
}

double delta_exit_q(const SystemParams& p)
{
    const double phi = impedance_angle_rad(p);
    const double arg = total_impedance(p).magnitude() * p.i_max * std::cos(phi) / p.v_g;
    return checked_asin_deg(arg, "q-axis exit angle: arcsin argument outside [-1, 1]");
}

AngleSet entry_angle_set(const SystemParams& p)
{
    const auto enter = delta_enter(p);
    if (!enter) return {};
    return AngleSet({{*enter, 360.0 - *enter}});
}

AngleSet exit_angle_set(const CsaKind& kind, const SystemParams& p)
{
    switch (kind.type) {
    case CsaType::None:
        return {};
    case CsaType::Circular:
        return symmetric_exit_set(delta_exit_circular(p));
    case CsaType::DPriority:
        return symmetric_exit_set(delta_exit_d(p));
    case CsaType::QPriority:
        return symmetric_exit_set(delta_exit_q(p));
    case CsaType::ConstantAngle: {
        const auto enter = delta_enter(p);
        if (!enter) return AngleSet({{0.0, 360.0}});
        return symmetric_exit_set(*enter);
    }
    }
    return {};
}

double beta_opt(const SystemParams& p)
{
    const auto enter = delta_enter(p);
    if (!enter) throw NoExitSolutionError("inverter never saturates; no optimal angle");
    return 90.0 - line_grid_impedance(p).angle_deg() - *enter / 2.0;
}

double beta_continuous(const SystemParams& p)
{
    const auto enter = delta_enter(p);
    if (!enter) throw NoExitSolutionError("inverter never saturates; no optimal angle");
    return 90.0 - total_impedance(p).angle_deg() - *enter / 2.0;
}

Impedance z_app_unsaturated(double delta_deg, const SystemParams& p)
{
    const double half = deg2rad(normalize_deg(delta_deg)) / 2.0;
    if (half == 0.0) throw std::domain_error("apparent impedance is unbounded at delta = 0");
    const Complex z_t = total_impedance(p).value;
    const Complex j{0.0, 1.0};
    const double cot = std::cos(half) / std::sin(half);
    return Impedance{line_grid_impedance(p).value - 0.5 * z_t - j * 0.5 * z_t * cot};
}

Impedance z_app_saturated(double delta_deg, double theta_i_deg, const SystemParams& p)
{
    return Impedance{line_grid_impedance(p).value +
                     polar_deg(p.v_g / p.i_max, -delta_deg - theta_i_deg)};
}

Circle saturation_circle(const SystemParams& p)
{
    return {line_grid_impedance(p).value, p.v_g / p.i_max};
}

TrajectoryGeometry trajectory_geometry(const SystemParams& p)
{
    const Complex z_t = total_impedance(p).value;
    TrajectoryGeometry g{};
    g.line.midpoint = line_grid_impedance(p).value - 0.5 * z_t;
    g.line.direction = Complex{0.0, -1.0} * z_t / std::abs(z_t);
    g.circle = saturation_circle(p);
    return g;
}

}  // namespace gfmswing
