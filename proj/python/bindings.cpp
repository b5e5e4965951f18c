#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mrta/dynamics.hpp"
#include "mrta/engine.hpp"
#include "mrta/errors.hpp"
#include "mrta/metrics.hpp"
#include "mrta/planner.hpp"
#include "mrta/render.hpp"
#include "mrta/scenario.hpp"
#include "mrta/tasking.hpp"

namespace py = pybind11;
using namespace mrta;

namespace {

py::dict summary_dict(const RunSummary& s) {
    py::dict d;
    d["sim_seconds"] = s.sim_seconds;
    d["wall_seconds"] = s.wall_seconds;
    d["control_ticks"] = s.control_ticks;
    d["robot_ticks"] = s.robot_ticks;
    d["fallback_robot_ticks"] = s.fallback_robot_ticks;
    d["room_violation_ticks"] = s.room_violation_ticks;
    d["faults"] = s.faults;
    d["tasks_arrived"] = s.tasks_arrived;
    d["tasks_completed"] = s.tasks_completed;
    d["tasks_missed"] = s.tasks_missed;
    d["tasks_unassigned"] = s.tasks_unassigned;
    d["real_time_factor"] = s.real_time_factor();
    return d;
}

std::vector<Task> to_tasks(const std::vector<std::tuple<int, int, double>>& tasks) {
    std::vector<Task> out;
    for (const auto& [s, e, d] : tasks) out.push_back({s, e, d});
    return out;
}

py::dict allocation_dict(const Allocation& a) {
    py::dict d;
    d["feasible"] = a.feasible;
    d["makespan"] = a.makespan;
    d["unassigned"] = a.unassigned;
    py::dict seq;
    for (const auto& [robot, actions] : a.sequences) {
        py::list l;
        for (const auto& act : actions)
            l.append(py::make_tuple(act.task, act.kind == ActionKind::pickup ? "pickup" : "dropoff", act.location));
        seq[py::int_(robot)] = l;
    }
    d["sequences"] = seq;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Deterministic multi-robot task-allocation simulator";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ScenarioError>(m, "ScenarioError", base.ptr());
    py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
    py::register_exception<Unreachable>(m, "Unreachable", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    m.def(
        "run",
        [](const std::string& scenario, std::optional<std::string> tasks, std::optional<std::uint64_t> seed,
           std::optional<double> duration, bool timing) {
            const auto s = load_scenario(scenario, tasks);
            RunOptions o;
            o.seed = seed;
            o.duration = duration;
            o.timing = timing;
            RunSummary sum;
            std::string trace;
            {
                py::gil_scoped_release release;
                trace = run_to_string(s, o, &sum);
            }
            return py::make_tuple(trace, summary_dict(sum));
        },
        py::arg("scenario"), py::arg("tasks") = py::none(), py::arg("seed") = py::none(),
        py::arg("duration") = py::none(), py::arg("timing") = false,
        "Runs a scenario file; returns (trace_text, summary).");

    m.def(
        "report",
        [](const std::string& trace_text) {
            py::dict d;
            for (const auto& [name, value] : metric_rows(compute_metrics(parse_trace(trace_text)))) d[name.c_str()] = value;
            return d;
        },
        py::arg("trace_text"), "Metrics of a trace as a name -> value dict (NaN when not available).");

    m.def(
        "render",
        [](const std::string& trace_text, const std::string& map_path, double every, std::optional<std::string> style) {
            const auto frames = render_frames(parse_trace(trace_text), load_map_file(map_path),
                                              style ? parse_render_style(*style) : RenderStyle{}, every);
            std::vector<std::pair<double, std::string>> out;
            for (const auto& f : frames) out.emplace_back(f.t, f.svg);
            return out;
        },
        py::arg("trace_text"), py::arg("map_path"), py::arg("every") = 1.0, py::arg("style") = py::none(),
        "SVG frames as (t, svg) pairs.");

    m.def(
        "collect_travel_times",
        [](const std::string& scenario, int reps, const std::string& agg) {
            if (agg != "max" && agg != "mean") throw InvalidInput("agg must be 'max' or 'mean'");
            const auto s = load_scenario(scenario);
            py::gil_scoped_release release;
            return collect_travel_times(s, reps, agg == "max" ? Aggregation::max : Aggregation::mean).weights();
        },
        py::arg("scenario"), py::arg("reps") = 1, py::arg("agg") = "max");

    m.def(
        "plan",
        [](const std::string& map_text, std::pair<double, double> start, std::pair<double, double> goal,
           double cost_weight, double inflation_radius, double cost_scale, double r_robot) {
            const auto cm = inflate(load_map(map_text), inflation_radius, cost_scale, r_robot);
            const auto p = plan(cm, {start.first, start.second}, {goal.first, goal.second}, {cost_weight});
            std::vector<std::pair<double, double>> pts;
            for (const auto& q : p.points) pts.emplace_back(q.x(), q.y());
            return py::make_tuple(pts, p.total_cost);
        },
        py::arg("map_text"), py::arg("start"), py::arg("goal"), py::arg("cost_weight") = 3.0,
        py::arg("inflation_radius") = 0.6, py::arg("cost_scale") = 3.0, py::arg("r_robot") = 0.3,
        "A* path on an inflated map; returns (points, cost in cell units).");

    m.def(
        "allocate",
        [](const std::vector<std::vector<double>>& weights, const std::map<int, int>& robots,
           const std::vector<std::tuple<int, int, double>>& tasks, double now, bool exact) {
            const TravelTimeGraph g(weights);
            const auto t = to_tasks(tasks);
            return allocation_dict(exact ? solve_exact(robots, t, g, now) : solve_greedy(robots, t, g, now));
        },
        py::arg("weights"), py::arg("robots"), py::arg("tasks"), py::arg("now") = 0.0, py::arg("exact") = true,
        "Allocates (start, end, deadline) tasks to robots given as {id: location}.");

    m.def(
        "step_robot",
        [](std::tuple<double, double, double, double> s, double a, double omega, double dt, double v_max) {
            const auto [x, y, th, v] = s;
            const auto n = step_robot({x, y, th, v}, {a, omega}, dt, v_max);
            return std::make_tuple(n.x, n.y, n.theta, n.v);
        },
        py::arg("state"), py::arg("a"), py::arg("omega"), py::arg("dt"), py::arg("v_max") = 1.0,
        "Integrates the unicycle (x, y, theta, v) for dt seconds.");
}
