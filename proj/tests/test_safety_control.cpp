#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mrta/errors.hpp"
#include "mrta/qp.hpp"
#include "mrta/safety_control.hpp"
#include "oracles.hpp"

using namespace mrta;

TEST_CASE("nominal_leader") {
    ControllerParams p;
    p.v_max = 2.0;
    SUBCASE("drive toward a waypoint ahead") {
        const auto u = nominal_leader({0, 0, 0, 0}, {1, 0}, p);
        CHECK(u.a == doctest::Approx(1.0));
        CHECK(u.omega == doctest::Approx(0.0));
    }
    SUBCASE("rotate in place beyond theta_bar") {
        const auto u = nominal_leader({0, 0, 0, 1}, {0, 1}, p);
        CHECK(u.a == 0.0);
        CHECK(u.omega == doctest::Approx(std::numbers::pi));
    }
    SUBCASE("arrival routes to the stop law") {
        const auto u = nominal_leader({0, 0, 0, 1}, {0.1, 0}, p);
        CHECK(u.a == doctest::Approx(-2.0));
        CHECK(u.omega == 0.0);
    }
    SUBCASE("v* scales with a common factor on k_v and v_max") {
        ControllerParams q = p;
        q.k_v = 0.2;
        q.v_max = 5.0;
        ControllerParams r = q;
        r.k_v *= 3.0;
        r.v_max *= 3.0;
        // From rest, a = k_v * v*, so the acceleration scales by the square of the factor.
        const auto a1 = nominal_leader({0, 0, 0, 0}, {4, 1}, q).a;
        const auto a3 = nominal_leader({0, 0, 0, 0}, {4, 1}, r).a;
        CHECK(a3 == doctest::Approx(9.0 * a1));
    }
}

TEST_CASE("nominal_stop") {
    ControllerParams p;
    p.v_max = 2.0;
    CHECK(nominal_stop({0, 0, 0, 1}, p).a == doctest::Approx(-2.0));
    CHECK(nominal_stop({0, 0, 0, 0}, p).a == 0.0);
    CHECK(nominal_stop({0, 0, 0, 3}, p).a == doctest::Approx(-2.0));
    CHECK(nominal_stop({0, 0, 0, 3}, p).omega == 0.0);
}

TEST_CASE("barrier coefficients match finite differences") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pos(-2, 2), ang(-3, 3), vel(-1, 1), ctl(-2, 2);
    const double eps = 1e-4;
    for (int trial = 0; trial < 100; ++trial) {
        const RobotState a{pos(rng), pos(rng), ang(rng), vel(rng)};
        const RobotState b{pos(rng), pos(rng), ang(rng), vel(rng)};
        // The closed form divides by omega^2, so keep turn rates away from zero.
        auto turn = [&] {
            double w = 0.0;
            while (std::abs(w) < 0.3) w = ctl(rng);
            return w;
        };
        const Control ua{ctl(rng), turn()}, ub{ctl(rng), turn()};
        auto h_at = [&](double t) {
            const auto sa = oracle::unicycle_closed_form(a, ua, t);
            const auto sb = oracle::unicycle_closed_form(b, ub, t);
            return std::pow(sa.x - sb.x, 2) + std::pow(sa.y - sb.y, 2) - 0.64;
        };
        const auto terms = robot_pair_barrier(a, b, 0.8);
        const double h0 = h_at(0), hp = h_at(eps), hm = h_at(-eps);
        CHECK(terms.h == doctest::Approx(h0).epsilon(1e-12));
        CHECK(std::abs(terms.hdot - (hp - hm) / (2 * eps)) < 1e-5);
        const double hdd = terms.drift + terms.coeff_i.dot(Eigen::Vector2d(ua.a, ua.omega)) +
                           terms.coeff_j.dot(Eigen::Vector2d(ub.a, ub.omega));
        CHECK(std::abs(hdd - (hp - 2 * h0 + hm) / (eps * eps)) < 1e-5 * std::max(1.0, std::abs(hdd)));

        // Same check against a point moving at constant velocity.
        const Vec2 q(pos(rng), pos(rng)), qv(vel(rng), vel(rng));
        auto g_at = [&](double t) {
            const auto sa = oracle::unicycle_closed_form(a, ua, t);
            return (Vec2(sa.x, sa.y) - (q + t * qv)).squaredNorm() - 0.16;
        };
        const auto pt = robot_point_barrier(a, q, qv, 0.4);
        const double g0 = g_at(0), gp = g_at(eps), gm = g_at(-eps);
        CHECK(std::abs(pt.hdot - (gp - gm) / (2 * eps)) < 1e-5);
        const double gdd = pt.drift + pt.coeff_i.dot(Eigen::Vector2d(ua.a, ua.omega));
        CHECK(std::abs(gdd - (gp - 2 * g0 + gm) / (eps * eps)) < 1e-5 * std::max(1.0, std::abs(gdd)));
    }
}

TEST_CASE("dense QP solver") {
    SUBCASE("unconstrained minimum") {
        Eigen::MatrixXd H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
        Eigen::VectorXd g(2);
        g << -2, -4;
        const auto r = qp::solve(H, g, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
        REQUIRE(r.status == qp::Status::optimal);
        CHECK(r.x(0) == doctest::Approx(1.0));
        CHECK(r.x(1) == doctest::Approx(2.0));
    }
    SUBCASE("one active half-plane") {
        // min (x-1)^2 + (y-2)^2  s.t.  -x - y >= -1  -> projection onto x + y = 1.
        Eigen::MatrixXd H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
        Eigen::VectorXd g(2), b(1);
        g << -2, -4;
        b << -1;
        Eigen::MatrixXd A(1, 2);
        A << -1, -1;
        const auto r = qp::solve(H, g, A, b);
        REQUIRE(r.status == qp::Status::optimal);
        CHECK(r.x(0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(r.x(1) == doctest::Approx(1.0));
    }
    SUBCASE("contradictory constraints") {
        Eigen::MatrixXd H = Eigen::MatrixXd::Identity(1, 1);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(1), b(2);
        Eigen::MatrixXd A(2, 1);
        A << 1, -1;
        b << 1, 0;  // x >= 1 and x <= 0
        CHECK(qp::solve(H, g, A, b).status == qp::Status::infeasible);
    }
}

TEST_CASE("solve_cluster_qp examples") {
    ControllerParams p;
    SUBCASE("single member without constraints returns the nominal") {
        const auto d = solve_single_qp({0, 0, 0, 0.5}, {0.7, -0.3}, {}, {}, p);
        CHECK(d.controls.at(0).a == 0.7);
        CHECK(d.controls.at(0).omega == -0.3);
        CHECK(d.qp_status == QpStatus::feasible);
    }
    SUBCASE("far apart pair keeps nominals") {
        const std::map<int, RobotState> st{{0, {0, 0, 0, 1}}, {1, {100, 0, std::numbers::pi, 1}}};
        const std::map<int, Control> nom{{0, {0.5, 0.1}}, {1, {0.2, -0.1}}};
        const auto d = solve_cluster_qp({0, 1}, st, nom, {}, {}, p);
        CHECK(std::abs(d.controls.at(0).a - 0.5) < 1e-6);
        CHECK(std::abs(d.controls.at(1).omega + 0.1) < 1e-6);
    }
    SUBCASE("obstacle behind a robot driving away") {
        ObstaclePointSet pts;
        pts.rays.push_back(Vec2(-0.6, 0.0));
        const auto d = solve_single_qp({0, 0, 0, 0.5}, {1.0, 0.0}, pts, {}, p);
        CHECK(std::abs(d.controls.at(0).a - 1.0) < 1e-6);
    }
    SUBCASE("obstacle dead ahead") {
        ObstaclePointSet pts;
        pts.rays.push_back(Vec2(p.r_safe + 0.1, 0.0));
        const auto d = solve_single_qp({0, 0, 0, 0.8}, {p.a_max, 0.0}, pts, {}, p);
        CHECK(d.controls.at(0).a < p.a_max);
        oracle::BarrierCheck chk;
        chk.robots = {{0, 0, 0, 0.8}};
        chk.static_points = {{0, Vec2(p.r_safe + 0.1, 0.0)}};
        chk.r_point = p.r_robot + p.obstacle_margin;
        CHECK(chk.min_residual({d.controls.at(0).a, d.controls.at(0).omega}) >= -1e-8);
    }
    SUBCASE("head-on pair at 1.2 r_safe closing at v_max") {
        const double gap = 1.2 * p.r_safe;
        const std::map<int, RobotState> st{{0, {0, 0, 0, p.v_max}}, {1, {gap, 0.05, std::numbers::pi, p.v_max}}};
        const std::map<int, Control> nom{{0, {0.5, 0.0}}, {1, {0.5, 0.0}}};
        const auto d = solve_cluster_qp({0, 1}, st, nom, {}, {}, p);
        for (double s : d.slack_used) CHECK(s < 1e-6);
        oracle::BarrierCheck chk;
        chk.robots = {st.at(0), st.at(1)};
        chk.r_pair = p.r_safe;
        const std::vector<double> u{d.controls.at(0).a, d.controls.at(0).omega, d.controls.at(1).a,
                                    d.controls.at(1).omega};
        CHECK(chk.min_residual(u) >= -1e-8);
        const auto grid = oracle::grid_search(chk, {0.5, 0.0, 0.5, 0.0}, p.a_max, p.omega_max);
        REQUIRE(grid.found);
        CHECK(std::abs(qp_objective({0, 1}, d, nom, p) - grid.objective) <= 1e-3);
    }
    SUBCASE("missing nominal") {
        CHECK_THROWS_AS(solve_cluster_qp({0, 1}, {{0, {}}, {1, {}}}, {{0, {}}}, {}, {}, p), InvalidInput);
    }
}

TEST_CASE("random constrained instances agree with grid search") {
    ControllerParams p;
    std::mt19937_64 rng(314);
    int done = 0;
    for (int attempt = 0; attempt < 400 && done < 12; ++attempt) {
        const int agents = 1 + attempt % 2;
        auto inst = oracle::random_qp_instance(rng, agents, p);
        if (!inst) continue;
        const auto grid = oracle::grid_search(inst->check, inst->nominal_vec, p.a_max, p.omega_max);
        if (!grid.found) continue;  // hard constraints cannot hold inside the box
        const auto d = solve_cluster_qp(inst->members, inst->states, inst->nominals, inst->points, {}, p);
        REQUIRE(d.qp_status == QpStatus::feasible);
        std::vector<double> u;
        for (int id : inst->members) {
            u.push_back(d.controls.at(id).a);
            u.push_back(d.controls.at(id).omega);
        }
        CHECK(inst->check.min_residual(u) >= -1e-8);
        CHECK(std::abs(qp_objective(inst->members, d, inst->nominals, p) - grid.objective) <= 1e-3);
        ++done;
    }
    CHECK(done == 12);
}

TEST_CASE("head-on pair stays separated for 30 s") {
    ControllerParams p;
    std::map<int, RobotState> st{{0, {-2.0, 0.0, 0.0, 0.0}}, {1, {2.0, 0.02, std::numbers::pi, 0.0}}};
    const std::map<int, Vec2> goals{{0, {3.0, 0.0}}, {1, {-3.0, 0.0}}};
    double min_sep = 1e9;
    for (int k = 0; k < 600; ++k) {
        std::map<int, Control> nom;
        for (const auto& [id, s] : st) nom[id] = nominal_leader(s, goals.at(id), p);
        const auto d = solve_cluster_qp({0, 1}, st, nom, {}, {}, p);
        for (auto& [id, s] : st) s = step_robot(s, d.controls.at(id), 0.05, p.v_max);
        min_sep = std::min(min_sep, (st.at(0).position() - st.at(1).position()).norm());
    }
    CHECK(min_sep >= p.r_safe - 0.05);
}
