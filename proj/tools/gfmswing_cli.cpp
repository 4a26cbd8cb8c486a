#include "gfmswing/analytic.hpp"
#include "gfmswing/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

using namespace gfmswing;

namespace {

constexpr int kValidationExit = 2;
constexpr int kAbortExit = 3;

void print_case(const CaseResult& res, std::string_view name, const std::filesystem::path& out)
{
    std::cout << "case " << name << ": " << res.trace.samples.size() << " samples, " << res.events.size()
              << " relay events -> " << out.string() << '\n'
              << format_report(res.report);
}

int cmd_run(const std::string& scenario, const std::string& out)
{
    const ScenarioConfig cfg = load_scenario_file(scenario);
    const CaseResult res = run_scenario(cfg);
    export_case(res, out, "run");
    print_case(res, "run", out);
    return 0;
}

int cmd_case(std::vector<std::string> names, const std::string& out, bool parallel)
{
    if (names.size() == 1 && names[0] == "all") {
        names.clear();
        for (CaseId id : all_cases()) names.emplace_back(case_name(id));
    }
    std::vector<CaseId> ids;
    for (const std::string& n : names) {
        const auto id = parse_case_id(n);
        if (!id) throw ScenarioError(0, "unknown case '" + n + "' (expected A, B, C, D, E, F, G1, G2, H or all)");
        ids.push_back(*id);
    }

    auto one = [&out](CaseId id) {
        const std::string stem = "case_" + std::string(case_name(id));
        CaseResult res = run_case(id);
        export_case(res, out, stem);
        std::ofstream(std::filesystem::path(out) / (stem + "_scenario.ini"))
            << save_scenario(res.config, case_preset_note(id));
        return res;
    };

    std::vector<CaseResult> results;
    if (parallel) {
        std::vector<std::future<CaseResult>> jobs;
        for (CaseId id : ids) jobs.push_back(std::async(std::launch::async, one, id));
        for (auto& j : jobs) results.push_back(j.get());
    } else {
        for (CaseId id : ids) results.push_back(one(id));
    }
    bool ok = true;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        print_case(results[k], case_name(ids[k]), out);
        ok = ok && results[k].report.all_pass();
    }
    std::cout << (ok ? "all case checks passed\n" : "some case checks failed\n");
    return 0;
}

int cmd_analytic(const std::string& scenario)
{
    const SystemParams p = load_scenario_file(scenario).scenario.params;
    auto show = [](const char* label, auto&& f) {
        try {
            std::printf("%-22s %10.4f deg\n", label, f());
        } catch (const NoExitSolutionError&) {
            std::printf("%-22s %10s\n", label, "never");
        }
    };
    const auto enter = delta_enter(p);
    if (enter)
        std::printf("%-22s %10.4f deg\n", "delta_enter", *enter);
    else
        std::printf("%-22s %10s\n", "delta_enter", "never");
    show("delta_exit circular", [&] { return delta_exit_circular(p); });
    show("delta_exit d_priority", [&] { return delta_exit_d(p); });
    show("delta_exit q_priority", [&] { return delta_exit_q(p); });
    if (enter) {
        std::printf("%-22s %10.4f deg\n", "beta_opt", beta_opt(p));
        std::printf("%-22s %10.4f deg\n", "beta_continuous", beta_continuous(p));
    }
    const TrajectoryGeometry g = trajectory_geometry(p);
    std::printf("circle center          %.6f %+.6fj\n", g.circle.center.real(), g.circle.center.imag());
    std::printf("circle radius          %.6f\n", g.circle.radius);
    std::printf("line midpoint          %.6f %+.6fj\n", g.line.midpoint.real(), g.line.midpoint.imag());
    std::printf("line direction         %.6f %+.6fj\n", g.line.direction.real(), g.line.direction.imag());
    return 0;
}

int cmd_sweep(const std::string& scenario, double from, double to, double step)
{
    const Scenario s = load_scenario_file(scenario).scenario;
    const BetaSweep sweep = sweep_beta(s, angle_grid(from, to, step));
    std::printf("beta_deg,jump_pu\n");
    for (const BetaSweepRow& r : sweep.table) std::printf("%.6g,%.9g\n", r.beta_deg, r.jump);
    std::printf("# beta_star = %.4f deg\n", sweep.beta_star);
    if (delta_enter(s.params)) std::printf("# beta_opt  = %.4f deg\n", beta_opt(s.params));
    return 0;
}

int cmd_compare(const std::string& trace_path, const std::string& scenario, const std::string& csa,
                std::optional<double> after)
{
    std::ifstream in(trace_path);
    if (!in) throw std::runtime_error("cannot open " + trace_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::vector<TraceSample> samples = parse_trace_csv(buf.str());

    Scenario s;
    if (!scenario.empty()) s = load_scenario_file(scenario).scenario;
    if (!csa.empty()) {
        const auto type = parse_csa_name(csa);
        if (!type || *type == CsaType::ConstantAngle)
            throw ScenarioError(0, "--csa expects none, circular, d_priority or q_priority");
        s.csa = CsaKind{*type, 0.0};
    }
    const double t0 = after ? *after : disturbance_end(s.events);
    std::cout << format_report(compare_angles(samples, s.params, s.csa, t0));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Grid-forming inverter power swing and relay simulator"};
    app.require_subcommand(1);

    std::string scenario, out = "out", trace, csa;
    std::vector<std::string> cases;
    bool parallel = false;
    double from = -60.0, to = 0.0, step = 0.5;
    std::optional<double> after;

    auto* run = app.add_subcommand("run", "simulate a scenario file and export trace, relay log and report");
    run->add_option("--scenario", scenario, "scenario file")->required();
    run->add_option("--out", out, "output directory");

    auto* cs = app.add_subcommand("case", "run preset cases");
    cs->add_option("ids", cases, "A B C D E F G1 G2 H, or all")->required();
    cs->add_option("--out", out, "output directory");
    cs->add_flag("--parallel", parallel, "run cases concurrently");

    auto* an = app.add_subcommand("analytic", "critical angles, optimal beta and trajectory geometry");
    an->add_option("--scenario", scenario, "scenario file")->required();

    auto* sw = app.add_subcommand("sweep-beta", "impedance jump at saturation entry versus constant CSA angle");
    sw->add_option("--scenario", scenario, "scenario file")->required();
    sw->add_option("--from", from, "first angle (deg)");
    sw->add_option("--to", to, "last angle (deg)");
    sw->add_option("--step", step, "angle step (deg)");

    auto* cmp = app.add_subcommand("compare", "analytic versus simulated saturation angles from a trace CSV");
    cmp->add_option("--trace", trace, "trace CSV")->required();
    cmp->add_option("--scenario", scenario, "scenario file for parameters and disturbance timing");
    cmp->add_option("--csa", csa, "CSA used for the trace (overrides the scenario)");
    cmp->add_option("--after", after, "ignore transitions up to this time (s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidationExit;
    }

    try {
        if (*run) return cmd_run(scenario, out);
        if (*cs) return cmd_case(cases, out, parallel);
        if (*an) return cmd_analytic(scenario);
        if (*sw) return cmd_sweep(scenario, from, to, step);
        if (*cmp) return cmd_compare(trace, scenario, csa, after);
    } catch (const SimulationAbort& e) {
        std::cerr << "simulation aborted: " << e.what() << '\n';
        return kAbortExit;
    } catch (const NoSaturationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidationExit;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidationExit;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidationExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
