#pragma once

#include "gfmswing/dynamics.hpp"
#include "gfmswing/protection.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gfmswing {

struct ScenarioConfig {
    Scenario scenario;
    RelaySettings relay;
    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Load failure; the message carries the offending line number when there
/// is one.
class ScenarioError : public std::invalid_argument {
public:
    ScenarioError(int line, const std::string& msg);
    int line() const { return line_; }

private:
    int line_;
};

/// Parses the sectioned `key = value` format. [system] and [csa] are
/// required; every other field falls back to its default. Impedances are
/// written `polar <mag> <deg>` or `rect <r> <x>`.
ScenarioConfig load_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

/// Writes every field (impedances in rectangular form, full precision), so
/// load_scenario(save_scenario(c)) == c. `comment` lines are emitted as a
/// leading `#` block.
std::string save_scenario(const ScenarioConfig& config, std::string_view comment = {});

enum class CaseId { A, B, C, D, E, F, G1, G2, H };

std::string_view case_name(CaseId id);
std::optional<CaseId> parse_case_id(std::string_view name);
const std::vector<CaseId>& all_cases();

ScenarioConfig case_preset(CaseId id);
/// Notes on how the preset's free settings were chosen.
std::string case_preset_note(CaseId id);

struct ComparisonRow {
    std::string quantity;
    double theoretical = 0.0;
    double simulated = 0.0;
    double abs_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    std::string note;

    bool all_pass() const;
};

ComparisonRow make_row(std::string quantity, double theoretical, double simulated, double tolerance);

/// Rows for delta_enter, delta_exit and (delta_exit + theta_i) built from the
/// first entry and first exit strictly after `after_t`.
ComparisonReport compare_angles(const std::vector<TraceSample>& samples, const SystemParams& params,
                                const CsaKind& kind, double after_t = 0.0);
ComparisonReport compare_angles(const Trace& trace);

std::string format_report(const ComparisonReport& report);

/// First outer-to-middle classification strictly after `after_t`.
std::optional<RelayEvent> first_classification(const std::vector<RelayEvent>& events,
                                               double after_t);

struct CaseResult {
    ScenarioConfig config;
    Trace trace;
    std::vector<RelayEvent> events;
    ComparisonReport report;
};

/// Simulates, replays the relay over the trace and builds the case report.
CaseResult run_scenario(const ScenarioConfig& config, std::optional<CaseId> id = std::nullopt);
CaseResult run_case(CaseId id);

std::vector<ImpedanceSample> impedance_samples(const std::vector<TraceSample>& samples);

std::string trace_csv(const std::vector<TraceSample>& samples, const RelaySettings& relay);
std::vector<TraceSample> parse_trace_csv(std::string_view text);
std::string relay_log(const std::vector<RelayEvent>& events);

/// Writes <stem>_trace.csv, <stem>_relay.log and <stem>_report.txt into dir.
void export_case(const CaseResult& result, const std::filesystem::path& dir, std::string_view stem);

struct BetaSweepRow {
    double beta_deg;
    double jump;  // p.u. impedance
};

struct BetaSweep {
    double beta_star = 0.0;
    std::vector<BetaSweepRow> table;
};

class NoSaturationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Impedance step between the last unsaturated and first saturated sample
/// of the first entry after the scenario's disturbances.
double saturation_entry_jump(const Scenario& scenario);

/// Runs the scenario with ConstantAngle(beta) and no entry lag for each beta.
BetaSweep sweep_beta(const Scenario& scenario, const std::vector<double>& grid);

std::vector<double> angle_grid(double from_deg, double to_deg, double step_deg);

}  // namespace gfmswing
