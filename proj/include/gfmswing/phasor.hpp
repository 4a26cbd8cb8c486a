#pragma once

#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace gfmswing {

using Complex = std::complex<double>;

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

inline double deg2rad(double deg) { return deg * kDegToRad; }
inline double rad2deg(double rad) { return rad * kRadToDeg; }

/// Wraps an angle in degrees into [0, 360).
double normalize_deg(double deg);

/// Wraps an angle in degrees into (-180, 180].
double wrap_deg_180(double deg);

/// Phasor from magnitude and angle in degrees.
inline Complex polar_deg(double magnitude, double angle_deg)
{
    return std::polar(magnitude, deg2rad(angle_deg));
}

inline double arg_deg(Complex z) { return rad2deg(std::arg(z)); }

/// Per-unit impedance on the system base.
struct Impedance {
    Complex value{};

    static Impedance polar(double magnitude, double angle_deg)
    {
        return Impedance{polar_deg(magnitude, angle_deg)};
    }

    double magnitude() const { return std::abs(value); }
    double angle_deg() const { return arg_deg(value); }
    double r() const { return value.real(); }
    double x() const { return value.imag(); }

    friend Impedance operator+(Impedance a, Impedance b) { return Impedance{a.value + b.value}; }
    friend Impedance operator-(Impedance a, Impedance b) { return Impedance{a.value - b.value}; }
    friend bool operator==(const Impedance&, const Impedance&) = default;
};

/// Synchronous-frame pair (current or voltage), d axis aligned with the
/// inverter's own voltage reference.
struct DqPair {
    double d = 0.0;
    double q = 0.0;

    Complex phasor() const { return {d, q}; }
    static DqPair from(Complex c) { return {c.real(), c.imag()}; }
    double magnitude() const { return std::hypot(d, q); }
    double angle_deg() const { return rad2deg(std::atan2(q, d)); }

    friend DqPair operator+(DqPair a, DqPair b) { return {a.d + b.d, a.q + b.q}; }
    friend DqPair operator-(DqPair a, DqPair b) { return {a.d - b.d, a.q - b.q}; }
    friend DqPair operator-(DqPair a) { return {-a.d, -a.q}; }
    friend DqPair operator*(double k, DqPair a) { return {k * a.d, k * a.q}; }
    friend bool operator==(const DqPair&, const DqPair&) = default;
};

struct SystemParams {
    Impedance z_tr = Impedance::polar(0.16, 88.57);
    Impedance z_l = Impedance::polar(0.3, 87.14);
    Impedance z_g = Impedance::polar(0.3, 87.14);
    double v_g = 1.0;
    double v_d_ref = 1.0;
    double v_q_ref = 0.0;
    double i_max = 1.2;
    double u_max = 0.063;
    double c_f = 0.05;
    double omega_n = 1.0;
    double f_n = 60.0;
    double p0 = 0.6;
    // Virtual machine constants: M dw/dt = P0 - Pe - D w.
    double swing_inertia = 1.0;
    double swing_damping = 8.0;

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Throws std::invalid_argument when a field violates its range.
void validate(const SystemParams& params);

class DegenerateNetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Z_tr + Z_l + Z_g.
Impedance total_impedance(const SystemParams& params);

/// Z_l + Z_g, the grid-side impedance seen from the relay bus.
Impedance line_grid_impedance(const SystemParams& params);

/// Grid Thevenin voltage expressed in the inverter frame, V_g e^{-j delta}.
Complex grid_phasor(double delta_deg, const SystemParams& params);

/// Inverter current when the voltage loop holds v = v_ref. Throws
/// DegenerateNetworkError when |Z_T| = 0.
DqPair unsaturated_current(double delta_deg, const SystemParams& params);

/// PCC voltage with the inverter acting as a current source.
DqPair pcc_voltage(DqPair i_sat, double delta_deg, const SystemParams& params);

/// Shunt fault at the PCC bus; zero resistance is a bolted fault.
struct FaultCondition {
    double resistance = 0.0;
};

/// Current the inverter would have to supply to hold v = v_ref. A bolted
/// fault makes it unbounded; `value` then carries only the direction.
struct SourceCurrent {
    DqPair value;
    bool unbounded = false;
};

SourceCurrent source_current(double delta_deg, const SystemParams& params,
                             const std::optional<FaultCondition>& fault);

/// PCC voltage for an injected current, with an optional shunt fault.
DqPair pcc_voltage(DqPair i_sat, double delta_deg, const SystemParams& params,
                   const std::optional<FaultCondition>& fault);

/// Current leaving bus B toward the grid for a given PCC voltage.
DqPair line_current(DqPair v_pcc, double delta_deg, const SystemParams& params);

inline constexpr double kCurrentEpsilon = 1e-6;

/// Relay measurement at bus B: (v / i) - Z_tr. Empty when |i| is at or
/// below kCurrentEpsilon ("open" sample).
std::optional<Impedance> apparent_impedance(DqPair v, DqPair i, const SystemParams& params);

/// Filter-side current from the grid-side current, i_d = i_sd + v_q w C_f,
/// i_q = i_sq - v_d w C_f.
DqPair inverter_side_current(DqPair i_s, DqPair v, const SystemParams& params);

}  // namespace gfmswing
