#include <doctest.h>

#include <random>
#include <set>

#include "mrta/errors.hpp"
#include "mrta/tasking.hpp"
#include "oracles.hpp"

using namespace mrta;

namespace {

std::vector<std::vector<double>> uniform_weights(std::size_t n, double w) {
    std::vector<std::vector<double>> m(n, std::vector<double>(n, w));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 0.0;
    return m;
}

std::vector<std::vector<double>> random_weights(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> w(1, 20);
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m[i][j] = m[j][i] = w(rng);
    return m;
}

}  // namespace

TEST_CASE("travel-time graph") {
    CHECK_THROWS_AS(TravelTimeGraph({{0, 1}, {2, 0}}), InvalidInput);
    CHECK_THROWS_AS(TravelTimeGraph({{1, 1}, {1, 0}}), InvalidInput);
    CHECK_THROWS_AS(TravelTimeGraph({{0, 0}, {0, 0}}), InvalidInput);
    const TravelTimeGraph g({{0, 2.5}, {2.5, 0}});
    CHECK(parse_travel_time_graph(format_travel_time_graph(g)).weights() == g.weights());
    CHECK_THROWS_AS(parse_travel_time_graph("locations 0 1\n0 1\n"), ParseError);
}

TEST_CASE("task stream parsing") {
    const auto s = parse_task_stream(R"([{"arrival": 40, "tasks": [{"start": 3, "end": 0, "deadline": 150},
                                                                 {"start": 2, "end": 1, "deadline": 300}]}])");
    REQUIRE(s.size() == 1);
    CHECK(s[0].arrival == 40);
    REQUIRE(s[0].tasks.size() == 2);
    CHECK(s[0].tasks[0].start == 3);
    CHECK(s[0].tasks[1].deadline == 300);
    CHECK(parse_task_stream(R"({"arrival": 1, "tasks": []})").size() == 1);
    CHECK(parse_task_stream("[]").empty());
    CHECK_THROWS_AS(parse_task_stream(R"([{"arrival": 5, "tasks": [{"start": 1}]}])"), ParseError);
    CHECK_THROWS_AS(parse_task_stream("{"), ParseError);
}

TEST_CASE("solve_exact examples") {
    const TravelTimeGraph g(uniform_weights(4, 20.0));
    SUBCASE("the two-task request on a uniform graph") {
        const std::vector<Task> tasks{{3, 0, 150}, {2, 1, 300}};
        const auto a = solve_exact(std::map<int, int>{{0, 0}}, tasks, g, 40.0);
        const auto ref = oracle::enumerate_allocation({{0, 0}}, tasks, g.weights(), 40.0);
        REQUIRE(a.feasible);
        CHECK(ref.feasible);
        CHECK(a.makespan == ref.makespan);
        CHECK(a.makespan == 120.0);
        CHECK_FALSE(validate_allocation(a, tasks, {{0, 0, 40.0, {}}}).has_value());
    }
    SUBCASE("no tasks") {
        const auto a = solve_exact(std::map<int, int>{{0, 0}, {1, 2}}, {}, g, 0.0);
        CHECK(a.feasible);
        CHECK(a.sequences.at(0).empty());
    }
    SUBCASE("deadline out of reach") {
        const auto a = solve_exact(std::map<int, int>{{0, 0}}, {{1, 2, 39.0}}, g, 0.0);
        CHECK_FALSE(a.feasible);
    }
    SUBCASE("too many tasks") {
        std::vector<Task> many(kExactMaxTasks + 1, Task{0, 1, 1e9});
        CHECK_THROWS_AS(solve_exact(std::map<int, int>{{0, 0}}, many, g, 0.0), InvalidInput);
    }
}

TEST_CASE("solve_exact matches enumeration on random instances") {
    std::mt19937_64 rng(555);
    std::uniform_int_distribution<int> nr(1, 3), nt(0, 4), nl(2, 5), ddl(10, 90);
    int feasible = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto n_loc = static_cast<std::size_t>(nl(rng));
        const auto w = random_weights(rng, n_loc);
        std::uniform_int_distribution<int> loc(0, static_cast<int>(n_loc) - 1);
        std::map<int, int> robots;
        for (int r = nr(rng); r-- > 0;) robots[r] = loc(rng);
        std::vector<Task> tasks;
        for (int k = nt(rng); k-- > 0;) tasks.push_back({loc(rng), loc(rng), static_cast<double>(ddl(rng))});
        const TravelTimeGraph g(w);
        const auto got = solve_exact(robots, tasks, g, 0.0);
        const auto ref = oracle::enumerate_allocation(robots, tasks, w, 0.0);
        CHECK(got.feasible == ref.feasible);
        if (!got.feasible || !ref.feasible) continue;
        ++feasible;
        CHECK(got.makespan == ref.makespan);
        const auto replay = oracle::replay_allocation(got, robots, tasks, w, 0.0);
        REQUIRE(replay.has_value());
        CHECK(*replay == got.makespan);

        // Greedy never beats the optimum.
        const auto greedy = solve_greedy(robots, tasks, g, 0.0);
        if (greedy.unassigned.empty()) CHECK(greedy.makespan >= got.makespan);
    }
    CHECK(feasible > 10);
}

TEST_CASE("solve_greedy") {
    const TravelTimeGraph g(uniform_weights(3, 10.0));
    SUBCASE("single robot single task equals exact") {
        const std::vector<Task> t{{1, 2, 100}};
        const auto a = solve_greedy(std::map<int, int>{{0, 0}}, t, g, 0.0);
        const auto b = solve_exact(std::map<int, int>{{0, 0}}, t, g, 0.0);
        CHECK(a.sequences.at(0) == b.sequences.at(0));
        CHECK(a.makespan == b.makespan);
    }
    SUBCASE("two robots split identical tasks") {
        const std::vector<Task> t{{1, 2, 25}, {1, 2, 25}};
        const auto a = solve_greedy(std::map<int, int>{{0, 0}, {1, 0}}, t, g, 0.0);
        CHECK(a.sequences.at(0).size() == 2);
        CHECK(a.sequences.at(1).size() == 2);
        CHECK(a.unassigned.empty());
    }
    SUBCASE("infeasible task is listed") {
        const auto a = solve_greedy(std::map<int, int>{{0, 0}}, {{1, 2, 5}}, g, 0.0);
        CHECK(a.unassigned == std::vector<int>{0});
    }
}

TEST_CASE("validate_allocation flags bad sequences") {
    const std::vector<Task> t{{1, 2, 100}};
    Allocation a;
    a.sequences[0] = {{0, ActionKind::dropoff, 2}, {0, ActionKind::pickup, 1}};
    CHECK(validate_allocation(a, t, {{0, 0, 0.0, {}}}).has_value());
    a.sequences[0] = {{0, ActionKind::pickup, 1}, {0, ActionKind::dropoff, 2}};
    a.sequences[1] = {{0, ActionKind::pickup, 1}, {0, ActionKind::dropoff, 2}};
    CHECK(validate_allocation(a, t, {{0, 0, 0.0, {}}, {1, 0, 0.0, {}}}).has_value());
}

TEST_CASE("dispatcher") {
    Dispatcher d(TravelTimeGraph(uniform_weights(4, 20.0)));
    const std::vector<RobotSnapshot> robots{{0, 0, {}, 0.0}, {1, 1, {}, 0.0}};
    SUBCASE("empty request leaves the allocation unchanged") {
        d.dispatch({40.0, {{3, 0, 150}, {2, 1, 300}}}, robots, 40.0);
        const auto before = d.current().sequences;
        d.dispatch({50.0, {}}, robots, 50.0);
        CHECK(d.current().sequences == before);
        CHECK(d.tasks().size() == 2);
    }
    SUBCASE("a new batch re-solves including unfinished tasks") {
        d.dispatch({40.0, {{3, 0, 150}}}, robots, 40.0);
        d.dispatch({45.0, {{2, 1, 300}}}, robots, 45.0);
        std::set<int> seen;
        for (const auto& [id, seq] : d.current().sequences)
            for (const auto& act : seq) seen.insert(act.task);
        CHECK(seen == std::set<int>{0, 1});
    }
    SUBCASE("feedback is kept verbatim") {
        d.add_feedback({0, 2, 12.5});
        d.add_feedback({1, 3, 140.0});
        REQUIRE(d.feedback().size() == 2);
        CHECK(d.feedback()[1].time == 140.0);
    }
}
