#pragma once

#include "gfmswing/csa.hpp"
#include "gfmswing/phasor.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace gfmswing {

class NoExitSolutionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Union of closed, sorted, non-overlapping degree intervals within [0, 360].
class AngleSet {
public:
    struct Interval {
        double lo;
        double hi;
        friend bool operator==(const Interval&, const Interval&) = default;
    };

    AngleSet() = default;
    explicit AngleSet(std::vector<Interval> intervals);

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }
    /// Membership of delta reduced into [0, 360).
    bool contains(double delta_deg) const;
    AngleSet intersect(const AngleSet& other) const;

private:
    std::vector<Interval> intervals_;
};

struct Circle {
    Complex center;
    double radius;
};

struct TrajectoryGeometry {
    struct Line {
        Complex midpoint;
        Complex direction;  // unit length
    } line;
    Circle circle;
};

/// Critical power angle for entering saturation. Empty when the inverter
/// never saturates; 180 when the arccos argument is below -1.
std::optional<double> delta_enter(const SystemParams& params);

double delta_exit_circular(const SystemParams& params);
double delta_exit_d(const SystemParams& params);
double delta_exit_q(const SystemParams& params);

AngleSet entry_angle_set(const SystemParams& params);
AngleSet exit_angle_set(const CsaKind& kind, const SystemParams& params);

/// 90 - angle(Z_l + Z_g) - delta_enter / 2. Throws NoExitSolutionError when
/// the inverter never saturates.
double beta_opt(const SystemParams& params);

/// Current angle that makes the saturated locus pass exactly through the
/// critical point: 90 - angle(Z_T) - delta_enter / 2.
double beta_continuous(const SystemParams& params);

/// Relay trajectory for |v| = V_g with no limiting; throws std::domain_error
/// at delta = 0 mod 360.
Impedance z_app_unsaturated(double delta_deg, const SystemParams& params);

/// Relay trajectory with |i| = I_max at angle theta_i.
Impedance z_app_saturated(double delta_deg, double theta_i_deg, const SystemParams& params);

Circle saturation_circle(const SystemParams& params);
TrajectoryGeometry trajectory_geometry(const SystemParams& params);

}  // namespace gfmswing
