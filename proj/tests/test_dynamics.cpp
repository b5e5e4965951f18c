#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mrta/dynamics.hpp"
#include "oracles.hpp"

using namespace mrta;

TEST_CASE("step_robot examples") {
    SUBCASE("straight line") {
        const auto s = step_robot({0, 0, 0, 1}, {0, 0}, 0.1, 2.0);
        CHECK(s.x == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(s.y == doctest::Approx(0.0));
        CHECK(s.theta == 0.0);
        CHECK(s.v == 1.0);
    }
    SUBCASE("constant twist arc") {
        const auto s = step_robot({0, 0, 0, 1}, {0, 1}, 1.0, 2.0);
        CHECK(std::abs(s.x - std::sin(1.0)) < 1e-6);
        CHECK(std::abs(s.y - (1.0 - std::cos(1.0))) < 1e-6);
        CHECK(std::abs(s.theta - 1.0) < 1e-12);
        CHECK(s.v == 1.0);
    }
    SUBCASE("constant acceleration") {
        const auto s = step_robot({0, 0, 0, 0}, {1, 0}, 0.5, 2.0);
        CHECK(std::abs(s.v - 0.5) < 1e-6);
        CHECK(std::abs(s.x - 0.125) < 1e-6);
    }
}

TEST_CASE("RK4 matches the closed form over 1 s at dt = 0.05") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> th(-3.1, 3.1), v0(-1.0, 1.0), acc(-2.0, 2.0), om(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const RobotState s0{0.3, -0.7, th(rng), v0(rng)};
        Control u{acc(rng), trial % 10 == 0 ? 0.0 : om(rng)};
        if (trial % 17 == 0) u.a = 0.0;
        RobotState s = s0;
        for (int k = 0; k < 20; ++k) s = step_robot(s, u, 0.05, 100.0);
        const auto ref = oracle::unicycle_closed_form(s0, u, 1.0);
        CHECK(std::hypot(s.x - ref.x, s.y - ref.y) < 1e-6);
        CHECK(std::abs(wrap_angle(s.theta - ref.theta)) < 1e-9);
        CHECK(std::abs(s.v - ref.v) < 1e-9);
    }
}

TEST_CASE("speed clamp and heading normalization") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> acc(-20.0, 20.0), om(-50.0, 50.0), dt(0.001, 0.2);
    RobotState s{0, 0, 0, 0};
    for (int k = 0; k < 2000; ++k) {
        s = step_robot(s, {acc(rng), om(rng)}, dt(rng), 1.5);
        CHECK(std::abs(s.v) <= 1.5);
        CHECK(s.theta > -std::numbers::pi);
        CHECK(s.theta <= std::numbers::pi);
    }
}

TEST_CASE("step_human") {
    HumanParams p;
    SUBCASE("one relaxation step from rest") {
        HumanState h;
        h.goal_waypoints = {{10.0, 0.0}};
        const auto next = step_human(h, {}, {}, {}, 0.1, p);
        CHECK(next.velocity.norm() == doctest::Approx(p.v_desired / p.tau * 0.1).epsilon(1e-9));
        CHECK(next.velocity.x() > 0.0);
    }
    SUBCASE("at the goal with a single waypoint") {
        HumanState h;
        h.goal_waypoints = {{0.0, 0.0}};
        const auto next = step_human(h, {}, {}, {}, 0.1, p);
        CHECK(next.current_goal_index == 0);
        CHECK(next.position.norm() < 1e-9);
    }
    SUBCASE("waypoint index cycles") {
        HumanState h;
        h.position = {1.0, 0.0};
        h.goal_waypoints = {{1.0, 0.0}, {5.0, 0.0}};
        const auto next = step_human(h, {}, {}, {}, 0.1, p);
        CHECK(next.current_goal_index == 1);
    }
    SUBCASE("coincident robot gives a finite push along +x") {
        HumanState h;
        h.goal_waypoints = {{0.0, 0.0}};
        const RobotState r{0.0, 0.0, 0.0, 0.0};
        const auto next = step_human(h, std::span(&r, 1), {}, {}, 0.1, p);
        CHECK(std::isfinite(next.velocity.x()));
        CHECK(next.velocity.x() > 0.0);
        CHECK(next.velocity.norm() <= 1.3 * p.v_desired + 1e-12);
    }
}
