#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mrta/engine.hpp"
#include "mrta/errors.hpp"
#include "mrta/metrics.hpp"
#include "mrta/scenario.hpp"
#include "oracles.hpp"

using namespace mrta;

namespace {

const std::string kData = MRTA_DATA_DIR;

std::string open_map(int w, int h, double res) {
    std::string m = "map " + std::to_string(w) + " " + std::to_string(h) + " " + std::to_string(res) + " 0 0\n";
    for (int y = 0; y < h; ++y) m += std::string(static_cast<std::size_t>(w), '.') + "\n";
    return m;
}

std::vector<nlohmann::json> events_of(const TraceData& t, const std::string& type) {
    std::vector<nlohmann::json> out;
    for (const auto& e : t.events)
        if (e["type"] == type) out.push_back(e);
    return out;
}

}  // namespace

TEST_CASE("scenario loading") {
    SUBCASE("two agents with the documented start positions") {
        const auto s = load_scenario(kData + "/scenarios/fig6.yaml");
        REQUIRE(s.robots.size() == 2);
        CHECK(s.robots[0].name == "robot1");
        CHECK(s.robots[0].start == Vec2(0, 2.2));
        CHECK(s.robots[1].start == Vec2(4.25, -27.2));
        CHECK(s.task_stream.empty());
    }
    SUBCASE("task referencing a missing location") {
        const std::string cfg = "agents:\n  r: {start: [1, 1]}\nlocations: [[1, 1], [3, 3]]\n";
        try {
            parse_scenario(cfg, open_map(10, 10, 0.5), R"([{"arrival": 0, "tasks": [{"start": 0, "end": 5, "deadline": 9}]}])");
            FAIL("expected a scenario error");
        } catch (const ScenarioError& e) {
            CHECK(std::string(e.what()).find("task 0") != std::string::npos);
            CHECK(std::string(e.what()).find("5") != std::string::npos);
        }
    }
    SUBCASE("start on an occupied cell") {
        std::string map = open_map(4, 4, 1.0);
        map[map.find('\n') + 1] = '#';  // top-left cell
        CHECK_THROWS_AS(parse_scenario("agents:\n  r: {start: [0.5, 3.5]}\nlocations: [[2, 2]]\n", map, {}),
                        ScenarioError);
    }
    SUBCASE("control period must be a multiple of tick_dt") {
        CHECK_THROWS_AS(parse_scenario("agents:\n  r: {start: [1, 1]}\nlocations: [[1, 1]]\nsim: {tick_dt: 0.03}\n",
                                       open_map(4, 4, 1.0), {}),
                        ScenarioError);
    }
    SUBCASE("unknown controller key") {
        CHECK_THROWS_AS(parse_scenario("controller: {k_q: 1}\nagents:\n  r: {start: [1, 1]}\nlocations: [[1, 1]]\n",
                                       open_map(4, 4, 1.0), {}),
                        ScenarioError);
    }
    SUBCASE("missing files") {
        CHECK_THROWS_AS(load_scenario(kData + "/scenarios/nope.yaml"), IoError);
    }
    SUBCASE("per-agent overrides") {
        const auto s = parse_scenario(
            "controller: {v_max: 0.8}\nagents:\n  a: {start: [1, 1]}\n  b: {start: [3, 3], params: {v_max: 0.5}}\n"
            "locations: [[1, 1]]\n",
            open_map(4, 4, 1.0), {});
        CHECK(s.robots[0].params.v_max == 0.8);
        CHECK(s.robots[1].params.v_max == 0.5);
    }
}

TEST_CASE("idle robot stays put") {
    const auto s = parse_scenario("agents:\n  r: {start: [2, 2]}\nlocations: [[2, 2]]\nsim: {duration: 10}\n",
                                  open_map(10, 10, 0.5), std::string("[]"));
    const auto trace = parse_trace(run_to_string(s));
    const auto states = events_of(trace, "state");
    CHECK(states.size() == 201);
    for (const auto& e : states) {
        CHECK(e["x"].get<double>() == 2.0);
        CHECK(e["y"].get<double>() == 2.0);
    }
}

TEST_CASE("zero duration writes only the header") {
    auto s = load_scenario(kData + "/scenarios/open20_single.yaml");
    RunOptions o;
    o.duration = 0.0;
    const std::string text = run_to_string(s, o);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    CHECK(parse_trace(text).events.empty());
}

TEST_CASE("single robot, single task") {
    const auto s = load_scenario(kData + "/scenarios/open20_single.yaml");
    RunSummary sum;
    const auto trace = parse_trace(run_to_string(s, {}, &sum));
    double pickup = -1, dropoff = -1;
    bool hit = false;
    for (const auto& e : events_of(trace, "task")) {
        if (e["event"] == "pickup") pickup = e["t"];
        if (e["event"] == "dropoff") dropoff = e["t"];
        hit |= e["event"] == "deadline_hit";
    }
    CHECK(hit);
    // Regression fixtures from the first verified run.
    CHECK(pickup == 9.5);
    CHECK(dropoff == 19.0);
    CHECK(sum.tasks_completed == 1);
    CHECK(sum.faults == 0);
}

TEST_CASE("trace invariants on a busy scenario") {
    const auto s = load_scenario(kData + "/scenarios/ward_rush.yaml");
    const std::string a = run_to_string(s);
    CHECK(a == run_to_string(s));

    const auto trace = parse_trace(a);
    double last_t = 0.0;
    std::map<int, std::string> state;
    bool ordered = true, conserved = true;
    for (const auto& e : trace.events) {
        const double t = e["t"];
        ordered &= t >= last_t;
        last_t = t;
        if (e["type"] != "task") continue;
        state[e["task"].get<int>()] = e["event"].get<std::string>();
        std::size_t terminal = 0;
        for (const auto& [id, st] : state)
            terminal += st == "dropoff" || st == "deadline_hit" || st == "missed" || st == "unassigned";
        conserved &= terminal <= state.size();
    }
    CHECK(ordered);
    CHECK(conserved);

    const auto m = compute_metrics(trace);
    CHECK(m.tasks_arrived == m.tasks_completed + m.tasks_missed + m.tasks_unassigned);
    CHECK(m.min_robot_distance == doctest::Approx(oracle::scan_min_separation(trace)).epsilon(1e-12));
    CHECK(m.min_robot_distance >= s.controller.r_safe - 0.05);
}

TEST_CASE("room exclusion in the room scenarios") {
    for (const char* name : {"fig7_ward", "ward_rush", "ward_contention"}) {
        CAPTURE(name);
        const auto s = load_scenario(kData + "/scenarios/" + name + ".yaml");
        RunSummary sum;
        const auto trace = parse_trace(run_to_string(s, {}, &sum));
        CHECK(sum.room_violation_ticks == 0);
        std::map<double, std::map<int, int>> inside;  // t -> room -> count
        for (const auto& e : events_of(trace, "state"))
            for (const auto& room : s.rooms)
                if (point_in_polygon(room.polygon, {e["x"].get<double>(), e["y"].get<double>()}))
                    ++inside[e["t"].get<double>()][room.location];
        int worst = 0;
        for (const auto& [t, rooms] : inside)
            for (const auto& [room, n] : rooms) worst = std::max(worst, n);
        CHECK(worst <= 1);
        CHECK(sum.faults == 0);
    }
}

TEST_CASE("metrics") {
    SUBCASE("header-only trace") {
        auto s = load_scenario(kData + "/scenarios/fig6.yaml");
        RunOptions o;
        o.duration = 0.0;
        const auto m = compute_metrics(parse_trace(run_to_string(s, o)));
        CHECK(m.tasks_arrived == 0);
        CHECK(std::isnan(m.mean_task_latency));
        CHECK(std::isnan(m.min_robot_distance));
        CHECK(format_metric(m.mean_task_latency) == "NA");
    }
    SUBCASE("solve durations aggregate from events") {
        auto s = load_scenario(kData + "/scenarios/plaza6.yaml");
        RunOptions o;
        o.timing = true;
        o.duration = 20.0;
        const auto trace = parse_trace(run_to_string(s, o));
        std::map<std::size_t, std::pair<double, std::size_t>> acc;
        for (const auto& e : events_of(trace, "cluster"))
            if (e.contains("solve_time")) {
                auto& [sum, n] = acc[e["members"].size()];
                sum += e["solve_time"].get<double>();
                ++n;
            }
        const auto m = compute_metrics(trace);
        REQUIRE_FALSE(acc.empty());
        for (const auto& [size, sn] : acc) {
            CAPTURE(size);
            CHECK(m.qp_time_by_size.at(size).timed == sn.second);
            CHECK(m.qp_time_by_size.at(size).mean == doctest::Approx(sn.first / static_cast<double>(sn.second)));
        }
        CHECK(m.real_time_factor > 0.0);
    }
    SUBCASE("csv and text carry the same rows") {
        const auto s = load_scenario(kData + "/scenarios/open20_single.yaml");
        const auto m = compute_metrics(parse_trace(run_to_string(s)));
        const std::string csv = format_report_csv(m);
        CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == metric_rows(m).size() + 1);
        for (const auto& [name, value] : metric_rows(m)) {
            CHECK(csv.find(name + "," + format_metric(value) + "\n") != std::string::npos);
            CHECK(format_report_text(m).find(format_metric(value)) != std::string::npos);
        }
    }
}

TEST_CASE("travel-time collection") {
    const std::string cfg = "agents:\n  r: {start: [2, 5]}\nlocations: [[2, 5], [7, 5]]\n";
    const auto s = parse_scenario(cfg, open_map(20, 20, 0.5), {});
    const auto g = collect_travel_times(s, 2, Aggregation::max);
    REQUIRE(g.size() == 2);
    CHECK(g(0, 0) == 0.0);
    CHECK(g(0, 1) == g(1, 0));
    CHECK(g(0, 1) >= 5.0);
    CHECK(g(0, 1) <= 12.0);
    const auto mean = collect_travel_times(s, 2, Aggregation::mean);
    CHECK(mean(0, 1) <= g(0, 1));

    std::string walled = open_map(20, 20, 0.5);
    for (int y = 0; y < 20; ++y) walled[walled.find('\n') + 1 + static_cast<std::size_t>(y) * 21 + 10] = '#';
    CHECK_THROWS_WITH_AS(parse_scenario(cfg, walled, {}), doctest::Contains("0 and 1"), ScenarioError);
    Scenario cut = s;
    cut.grid = load_map(walled);
    cut.costmap = inflate(cut.grid, cut.inflation_radius, cut.cost_scale, cut.controller.r_robot);
    CHECK_THROWS_WITH_AS(collect_travel_times(cut, 1), doctest::Contains("0 and 1"), ScenarioError);
}
