#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mrta/engine.hpp"
#include "mrta/errors.hpp"
#include "mrta/metrics.hpp"
#include "mrta/render.hpp"
#include "mrta/scenario.hpp"
#include "mrta/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitIo = 3;

// Maps library exceptions onto the documented exit codes.
template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const mrta::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const mrta::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

int cmd_run(const std::string& scenario_path, const std::string& tasks_path, const std::string& out_path,
            std::optional<std::uint64_t> seed, std::optional<double> duration, bool timing) {
    std::optional<std::string> tasks;
    if (!tasks_path.empty()) tasks = tasks_path;
    const mrta::Scenario s = mrta::load_scenario(scenario_path, tasks);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw mrta::IoError("cannot open trace for writing: " + out_path);
    mrta::RunOptions opts;
    opts.seed = seed;
    opts.duration = duration;
    opts.timing = timing;
    const mrta::RunSummary summary = mrta::run(s, out, opts);
    out.close();
    if (!out) throw mrta::IoError("failed to write trace: " + out_path);

    mrta::MetricsReport m = mrta::compute_metrics(mrta::read_trace_file(out_path));
    if (std::isnan(m.real_time_factor) && summary.wall_seconds > 0) m.real_time_factor = summary.real_time_factor();
    std::cout << "scenario " << s.name << " (" << s.digest << "), " << s.robots.size() << " robots, "
              << mrta::format_number(summary.sim_seconds) << " s simulated\n";
    std::cout << mrta::format_report_text(m);
    return kExitOk;
}

int cmd_render(const std::string& trace_path, const std::string& map_path, const std::string& out_dir, double every,
               const std::string& style_path) {
    const mrta::TraceData trace = mrta::read_trace_file(trace_path);
    const mrta::OccupancyGrid grid = mrta::load_map_file(map_path);
    mrta::RenderStyle style;
    if (!style_path.empty()) style = mrta::parse_render_style(mrta::read_text_file(style_path));
    const auto frames = mrta::render_frames(trace, grid, style, every);
    const std::size_t n = mrta::write_frames(frames, out_dir);
    std::cout << "wrote " << n << " frames to " << out_dir << '\n';
    return kExitOk;
}

int cmd_collect(const std::string& scenario_path, const std::string& out_path, int reps, const std::string& agg) {
    const mrta::Scenario s = mrta::load_scenario(scenario_path);
    const auto graph = mrta::collect_travel_times(s, reps, agg == "mean" ? mrta::Aggregation::mean : mrta::Aggregation::max);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw mrta::IoError("cannot open output for writing: " + out_path);
    out << mrta::format_travel_time_graph(graph);
    if (!out) throw mrta::IoError("failed to write " + out_path);
    std::cout << "wrote " << graph.size() << "x" << graph.size() << " travel-time graph to " << out_path << '\n';
    return kExitOk;
}

int cmd_report(const std::string& trace_path, const std::string& format) {
    const mrta::MetricsReport m = mrta::compute_metrics(mrta::read_trace_file(trace_path));
    std::cout << (format == "csv" ? mrta::format_report_csv(m) : mrta::format_report_text(m));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Headless multi-robot task-allocation simulator"};
    app.require_subcommand(1);

    std::string scenario, tasks, out, trace, map, out_dir, style, agg = "max", format = "text";
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    bool timing = false;
    double every = 1.0;
    int reps = 1;

    auto* run = app.add_subcommand("run", "Run a scenario and write its trace");
    run->add_option("--scenario", scenario, "Scenario file")->required();
    run->add_option("--tasks", tasks, "Task-stream file (overrides the scenario's)");
    run->add_option("--out", out, "Trace output file")->required();
    run->add_option("--seed", seed, "Seed");
    run->add_option("--duration", duration, "Simulated seconds");
    run->add_flag("--timing", timing, "Record wall-clock solve durations (makes the trace non-reproducible)");

    auto* render = app.add_subcommand("render", "Render SVG frames from a trace");
    render->add_option("--trace", trace, "Trace file")->required();
    render->add_option("--map", map, "Map file")->required();
    render->add_option("--out-dir", out_dir, "Output directory")->required();
    render->add_option("--every", every, "Sample period in seconds")->check(CLI::PositiveNumber);
    render->add_option("--style", style, "Render style JSON");

    auto* collect = app.add_subcommand("collect-travel-times", "Measure travel times between all location pairs");
    collect->add_option("--scenario", scenario, "Scenario file")->required();
    collect->add_option("--out", out, "Travel-time graph output file")->required();
    collect->add_option("--reps", reps, "Repetitions per pair")->check(CLI::PositiveNumber);
    collect->add_option("--agg", agg, "Aggregation")->check(CLI::IsMember({"max", "mean"}));

    auto* report = app.add_subcommand("report", "Print the metrics report of a trace");
    report->add_option("--trace", trace, "Trace file")->required();
    report->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    if (*run) return guarded([&] { return cmd_run(scenario, tasks, out, seed, duration, timing); });
    if (*render) return guarded([&] { return cmd_render(trace, map, out_dir, every, style); });
    if (*collect) return guarded([&] { return cmd_collect(scenario, out, reps, agg); });
    if (*report) return guarded([&] { return cmd_report(trace, format); });
    return kExitInput;
}
