#pragma once

#include "gfmswing/phasor.hpp"

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace gfmswing {

class RelayConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Three mho circles through the origin, each with diameter equal to its reach.
struct MhoZoneConfig {
    std::array<Impedance, 3> reach{Impedance::polar(0.24, 87.44), Impedance::polar(0.36, 87.44),
                                   Impedance::polar(0.6, 87.44)};
    std::array<double, 3> delay{0.0, 0.5, 1.0};
    friend bool operator==(const MhoZoneConfig&, const MhoZoneConfig&) = default;
};

/// Three nested rectangles bounded by tilted resistive blinders (symmetric
/// about the blinder line through the origin) and horizontal reactance reaches.
struct BlinderConfig {
    double r_out = 0.42;
    double r_mid = 0.31;
    double r_inn = 0.13;
    double x_fwd_out = 0.94;
    double x_fwd_mid = 0.80;
    double x_fwd_inn = 0.68;
    double x_rev_out = -0.28;
    double x_rev_mid = -0.24;
    double x_rev_inn = -0.20;
    double blinder_angle_deg = 87.14;
    double t_psb = 0.033;
    friend bool operator==(const BlinderConfig&, const BlinderConfig&) = default;
};

struct RelaySettings {
    MhoZoneConfig mho;
    BlinderConfig blinders;
    friend bool operator==(const RelaySettings&, const RelaySettings&) = default;
};

void validate(const MhoZoneConfig& cfg);
void validate(const BlinderConfig& cfg);

/// Smallest zone (1..3) whose circle contains z, boundary included.
std::optional<int> mho_zone(const Impedance& z, const MhoZoneConfig& cfg);

/// Innermost blinder tier containing a point. OuterBand is inside the outer
/// rectangle but outside the middle one.
enum class Tier { Outside = 0, OuterBand = 1, Middle = 2, Inner = 3 };

std::string_view tier_name(Tier tier);

Tier blinder_region(const Impedance& z, const BlinderConfig& cfg);

enum class SwingClass { Fault, Swing };

/// Fault when dT < t_psb; a tie counts as a swing.
SwingClass classify(double dt_cross, double t_psb);

enum class RelayEventKind { ZonePickup, ZoneTrip, SwingDetected, FaultDeclared, OstTrip };

std::string_view relay_event_name(RelayEventKind kind);

struct RelayEvent {
    double t = 0.0;
    RelayEventKind kind = RelayEventKind::ZonePickup;
    int zone = 0;          // ZonePickup / ZoneTrip
    double crossing = 0.0;  // SwingDetected / FaultDeclared: outer-to-middle time
    friend bool operator==(const RelayEvent&, const RelayEvent&) = default;
};

struct DetectorState {
    Tier region = Tier::Outside;
    std::optional<double> timer_start;
    bool swing_declared = false;
    // Power-swing blocking holds zone trips until the trajectory leaves the
    // outer tier.
    bool blocking = false;
    std::array<std::optional<double>, 3> zone_pickup{};
    std::array<bool, 3> zone_tripped{};
    std::vector<RelayEvent> events;
};

/// Advances the detector with one impedance sample. An open sample (no
/// defined impedance) is treated as lying outside every characteristic.
DetectorState detector_step(DetectorState state, const std::optional<Impedance>& z, double t,
                            const RelaySettings& cfg);

struct ImpedanceSample {
    double t;
    std::optional<Impedance> z;
};

DetectorState replay(std::span<const ImpedanceSample> samples, const RelaySettings& cfg);

/// Swing-detection events (SwingDetected, FaultDeclared, OstTrip) only.
std::vector<RelayEvent> swing_events(const std::vector<RelayEvent>& events);

}  // namespace gfmswing
