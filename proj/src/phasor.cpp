#include "gfmswing/phasor.hpp"

#include <cmath>

namespace gfmswing {

double normalize_deg(double deg)
{
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    // fmod of a tiny negative value can round up to exactly 360
    if (r >= 360.0) r -= 360.0;
    return r;
}

double wrap_deg_180(double deg)
{
    double r = normalize_deg(deg);
    return r > 180.0 ? r - 360.0 : r;
}

void validate(const SystemParams& p)
{
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(what);
    };
    require(std::isfinite(p.i_max) && p.i_max > 0.0, "i_max must be positive");
    require(std::isfinite(p.v_g) && p.v_g > 0.0, "v_g must be positive");
    require(std::isfinite(p.u_max) && p.u_max >= 0.0, "u_max must be non-negative");
    require(std::isfinite(p.v_d_ref) && std::isfinite(p.v_q_ref), "voltage set points must be finite");
    require(std::isfinite(p.f_n) && p.f_n > 0.0, "f_n must be positive");
    require(std::isfinite(p.swing_inertia) && p.swing_inertia > 0.0, "swing_inertia must be positive");
    require(std::isfinite(p.swing_damping) && p.swing_damping >= 0.0, "swing_damping must be non-negative");
    for (const Impedance* z : {&p.z_tr, &p.z_l, &p.z_g})
        require(std::isfinite(z->r()) && std::isfinite(z->x()), "impedances must be finite");
}

Impedance total_impedance(const SystemParams& p)
{
    return p.z_tr + p.z_l + p.z_g;
}

Impedance line_grid_impedance(const SystemParams& p)
{
    return p.z_l + p.z_g;
}

Complex grid_phasor(double delta_deg, const SystemParams& p)
{
    return std::polar(p.v_g, -deg2rad(delta_deg));
}

DqPair unsaturated_current(double delta_deg, const SystemParams& p)
{
    const Complex z_t = total_impedance(p).value;
    if (std::abs(z_t) == 0.0)
        throw DegenerateNetworkError("total impedance is zero; network current undefined");
    const Complex v_ref{p.v_d_ref, p.v_q_ref};
    return DqPair::from((v_ref - grid_phasor(delta_deg, p)) / z_t);
}

DqPair pcc_voltage(DqPair i_sat, double delta_deg, const SystemParams& p)
{
    return DqPair::from(grid_phasor(delta_deg, p) + total_impedance(p).value * i_sat.phasor());
}

SourceCurrent source_current(double delta_deg, const SystemParams& p,
                             const std::optional<FaultCondition>& fault)
{
    const DqPair through_line = unsaturated_current(delta_deg, p);
    if (!fault) return {through_line, false};
    const Complex v_ref{p.v_d_ref, p.v_q_ref};
    if (fault->resistance <= 0.0) {
        const double m = std::abs(v_ref);
        return {m > 0.0 ? DqPair::from(v_ref / m) : DqPair{1.0, 0.0}, true};
    }
    return {through_line + DqPair::from(v_ref / fault->resistance), false};
}

DqPair pcc_voltage(DqPair i_sat, double delta_deg, const SystemParams& p,
                   const std::optional<FaultCondition>& fault)
{
    if (!fault) return pcc_voltage(i_sat, delta_deg, p);
    if (fault->resistance <= 0.0) return {0.0, 0.0};
    // Node equation at the PCC: i = v / R_f + (v - V_g e^{-j delta}) / Z_T.
    const Complex z_t = total_impedance(p).value;
    const Complex num = i_sat.phasor() + grid_phasor(delta_deg, p) / z_t;
    const Complex den = 1.0 / fault->resistance + 1.0 / z_t;
    return DqPair::from(num / den);
}

DqPair line_current(DqPair v_pcc, double delta_deg, const SystemParams& p)
{
    const Complex z_t = total_impedance(p).value;
    if (std::abs(z_t) == 0.0)
        throw DegenerateNetworkError("total impedance is zero; network current undefined");
    return DqPair::from((v_pcc.phasor() - grid_phasor(delta_deg, p)) / z_t);
}

std::optional<Impedance> apparent_impedance(DqPair v, DqPair i, const SystemParams& p)
{
    if (i.magnitude() <= kCurrentEpsilon) return std::nullopt;
    return Impedance{v.phasor() / i.phasor()} - p.z_tr;
}

DqPair inverter_side_current(DqPair i_s, DqPair v, const SystemParams& p)
{
    const double wc = p.omega_n * p.c_f;
    return {i_s.d + v.q * wc, i_s.q - v.d * wc};
}

}  // namespace gfmswing
