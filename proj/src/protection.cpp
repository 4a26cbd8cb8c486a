#include "gfmswing/protection.hpp"

#include <cmath>

namespace gfmswing {

void validate(const MhoZoneConfig& cfg)
{
    for (std::size_t k = 0; k < 3; ++k) {
        if (!(cfg.reach[k].magnitude() > 0.0)) throw RelayConfigError("mho reach must be non-zero");
        if (!(cfg.delay[k] >= 0.0)) throw RelayConfigError("zone delay must be non-negative");
        if (k > 0 && !(cfg.reach[k - 1].magnitude() < cfg.reach[k].magnitude()))
            throw RelayConfigError("mho reaches must satisfy |Z1| < |Z2| < |Z3|");
        if (k > 0 && cfg.delay[k] < cfg.delay[k - 1])
            throw RelayConfigError("zone delays must be non-decreasing");
    }
}

void validate(const BlinderConfig& c)
{
    if (!(0.0 < c.r_inn && c.r_inn < c.r_mid && c.r_mid < c.r_out))
        throw RelayConfigError("blinder offsets must satisfy 0 < inner < middle < outer");
    if (!(c.x_rev_out < 0.0 && c.x_rev_mid < 0.0 && c.x_rev_inn < 0.0))
        throw RelayConfigError("reverse reaches must be negative");
    if (!(c.x_fwd_out > 0.0 && c.x_fwd_mid > 0.0 && c.x_fwd_inn > 0.0))
        throw RelayConfigError("forward reaches must be positive");
    if (!(c.x_fwd_inn <= c.x_fwd_mid && c.x_fwd_mid <= c.x_fwd_out &&
          c.x_rev_inn >= c.x_rev_mid && c.x_rev_mid >= c.x_rev_out))
        throw RelayConfigError("blinder tiers must be nested");
    const double s = std::sin(deg2rad(c.blinder_angle_deg));
    if (!std::isfinite(s) || std::abs(s) < 1e-9)
        throw RelayConfigError("blinder angle must not be parallel to the resistive axis");
    if (!(c.t_psb > 0.0)) throw RelayConfigError("t_psb must be positive");
}

std::optional<int> mho_zone(const Impedance& z, const MhoZoneConfig& cfg)
{
    for (int k = 0; k < 3; ++k) {
        // On or inside the circle with diameter 0..Z_k: the chord angle at z
        // is at least 90 deg.
        const Complex w = z.value * std::conj(z.value - cfg.reach[k].value);
        if (w.real() <= 0.0) return k + 1;
    }
    return std::nullopt;
}

std::string_view tier_name(Tier tier)
{
    switch (tier) {
    case Tier::Outside: return "outside";
    case Tier::OuterBand: return "outer";
    case Tier::Middle: return "middle";
    case Tier::Inner: return "inner";
    }
    return "outside";
}

Tier blinder_region(const Impedance& z, const BlinderConfig& c)
{
    const double a = deg2rad(c.blinder_angle_deg);
    const double offset = std::abs(z.r() - z.x() * std::cos(a) / std::sin(a));
    auto within = [&](double r, double fwd, double rev) {
        return offset <= r && z.x() >= rev && z.x() <= fwd;
    };
    if (within(c.r_inn, c.x_fwd_inn, c.x_rev_inn)) return Tier::Inner;
    if (within(c.r_mid, c.x_fwd_mid, c.x_rev_mid)) return Tier::Middle;
    if (within(c.r_out, c.x_fwd_out, c.x_rev_out)) return Tier::OuterBand;
    return Tier::Outside;
}

SwingClass classify(double dt_cross, double t_psb)
{
    return dt_cross < t_psb ? SwingClass::Fault : SwingClass::Swing;
}

std::string_view relay_event_name(RelayEventKind kind)
{
    switch (kind) {
    case RelayEventKind::ZonePickup: return "zone_pickup";
    case RelayEventKind::ZoneTrip: return "zone_trip";
    case RelayEventKind::SwingDetected: return "swing_detected";
    case RelayEventKind::FaultDeclared: return "fault_declared";
    case RelayEventKind::OstTrip: return "ost_trip";
    }
    return "unknown";
}

DetectorState detector_step(DetectorState st, const std::optional<Impedance>& z, double t,
                            const RelaySettings& cfg)
{
    const Tier tier = z ? blinder_region(*z, cfg.blinders) : Tier::Outside;
    const Tier prev = st.region;

    auto settle = [&](double crossing) {
        if (classify(crossing, cfg.blinders.t_psb) == SwingClass::Swing) {
            st.events.push_back({t, RelayEventKind::SwingDetected, 0, crossing});
            st.swing_declared = true;
            st.blocking = true;
        } else {
            st.events.push_back({t, RelayEventKind::FaultDeclared, 0, crossing});
        }
    };

    if (st.timer_start) {
        if (tier >= Tier::Middle) {
            settle(t - *st.timer_start);
            st.timer_start.reset();
        } else if (tier == Tier::Outside) {
            st.timer_start.reset();
        }
    } else if (prev == Tier::Outside && tier != Tier::Outside) {
        if (tier >= Tier::Middle)
            settle(0.0);
        else
            st.timer_start = t;
    }

    if (st.swing_declared && tier == Tier::Inner && prev != Tier::Inner)
        st.events.push_back({t, RelayEventKind::OstTrip, 0, 0.0});

    if (tier == Tier::Outside) {
        st.swing_declared = false;
        st.blocking = false;
    }

    const std::optional<int> zone = z ? mho_zone(*z, cfg.mho) : std::nullopt;
    for (int k = 0; k < 3; ++k) {
        if (zone && *zone <= k + 1) {
            if (!st.zone_pickup[k]) {
                st.zone_pickup[k] = t;
                st.events.push_back({t, RelayEventKind::ZonePickup, k + 1, 0.0});
            }
            if (!st.zone_tripped[k] && !st.blocking &&
                t - *st.zone_pickup[k] >= cfg.mho.delay[k] - 1e-12) {
                st.zone_tripped[k] = true;
                st.events.push_back({t, RelayEventKind::ZoneTrip, k + 1, 0.0});
            }
        } else {
            st.zone_pickup[k].reset();
            st.zone_tripped[k] = false;
        }
    }

    st.region = tier;
    return st;
}

DetectorState replay(std::span<const ImpedanceSample> samples, const RelaySettings& cfg)
{
    DetectorState st;
    for (const ImpedanceSample& s : samples) st = detector_step(std::move(st), s.z, s.t, cfg);
    return st;
}

std::vector<RelayEvent> swing_events(const std::vector<RelayEvent>& events)
{
    std::vector<RelayEvent> out;
    for (const RelayEvent& e : events) {
        if (e.kind == RelayEventKind::SwingDetected || e.kind == RelayEventKind::FaultDeclared ||
            e.kind == RelayEventKind::OstTrip)
            out.push_back(e);
    }
    return out;
}

}  // namespace gfmswing
