#include "mrta/safety_control.hpp"

#include <algorithm>
#include <cmath>

#include "mrta/errors.hpp"
#include "mrta/qp.hpp"

namespace mrta {

void ControllerParams::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw InvalidInput(std::string("controller params: ") + what);
    };
    need(k_v > 0 && k_theta > 0, "k_v and k_theta must be positive");
    need(k_slow < 0, "k_slow must be negative");
    need(theta_bar > 0 && theta_bar < std::numbers::pi, "theta_bar must lie in (0, pi)");
    need(v_max > 0 && a_max > 0 && omega_max > 0, "v_max, a_max, omega_max must be positive");
    need(delta >= 0 && d_arrive > 0, "delta must be >= 0 and d_arrive > 0");
    need(r_robot > 0 && r_safe >= 2 * r_robot, "r_safe must be at least 2 * r_robot");
    need(alpha1 > 0 && alpha2 > 0 && slack_penalty > 0, "alpha1, alpha2, slack_penalty must be positive");
    need(n_rays >= 1 && sensor_range > 0, "n_rays and sensor_range must be positive");
}

const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::feasible: return "feasible";
        case QpStatus::feasible_with_slack: return "feasible-with-slack";
        case QpStatus::infeasible_fallback: return "infeasible-fallback";
    }
    return "?";
}

Control nominal_stop(const RobotState& state, const ControllerParams& p) {
    return {std::clamp(p.k_slow * state.v, -p.v_max, p.v_max), 0.0};
}

Control nominal_leader(const RobotState& state, const Vec2& waypoint, const ControllerParams& p) {
    const Vec2 diff = waypoint - state.position();
    const double d = diff.norm();
    if (d < p.d_arrive) return nominal_stop(state, p);
    const double heading_error = wrap_angle(std::atan2(diff.y(), diff.x()) - state.theta);
    const double v_star = std::max(0.0, std::min(p.k_v * d * std::cos(heading_error), p.v_max));
    if (std::abs(heading_error) > p.theta_bar) return {0.0, p.k_theta * heading_error};
    return {p.k_v * (v_star - state.v), p.k_theta * heading_error};
}

BarrierTerms robot_pair_barrier(const RobotState& i, const RobotState& j, double radius) {
    const Vec2 dp = i.position() - j.position();
    const Vec2 dv = i.velocity() - j.velocity();
    const Vec2 ei = heading_vector(i.theta);
    const Vec2 ej = heading_vector(j.theta);
    const Vec2 ni{-ei.y(), ei.x()};
    const Vec2 nj{-ej.y(), ej.x()};
    BarrierTerms t;
    t.h = dp.squaredNorm() - radius * radius;
    t.hdot = 2.0 * dp.dot(dv);
    t.drift = 2.0 * dv.squaredNorm();
    t.coeff_i = {2.0 * dp.dot(ei), 2.0 * i.v * dp.dot(ni)};
    t.coeff_j = {-2.0 * dp.dot(ej), -2.0 * j.v * dp.dot(nj)};
    return t;
}

BarrierTerms robot_point_barrier(const RobotState& s, const Vec2& point, const Vec2& point_velocity, double radius) {
    const Vec2 dp = s.position() - point;
    const Vec2 dv = s.velocity() - point_velocity;
    const Vec2 e = heading_vector(s.theta);
    const Vec2 n{-e.y(), e.x()};
    BarrierTerms t;
    t.h = dp.squaredNorm() - radius * radius;
    t.hdot = 2.0 * dp.dot(dv);
    t.drift = 2.0 * dv.squaredNorm();
    t.coeff_i = {2.0 * dp.dot(e), 2.0 * s.v * dp.dot(n)};
    return t;
}

namespace {

// hddot + (a1 + a2) hdot + a1 a2 h >= -s, moved into  coeff . u + s >= rhs.
double barrier_rhs(const BarrierTerms& t, const ControllerParams& p) {
    return -t.drift - (p.alpha1 + p.alpha2) * t.hdot - p.alpha1 * p.alpha2 * t.h;
}

bool finite_state(const RobotState& s) {
    return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta) && std::isfinite(s.v);
}

Control clamp_box(Control c, const ControllerParams& p) {
    return {std::clamp(c.a, -p.a_max, p.a_max), std::clamp(c.omega, -p.omega_max, p.omega_max)};
}

}  // namespace

std::vector<CbfRow> cluster_constraints(const std::vector<int>& members, const std::map<int, RobotState>& states,
                                        const std::map<int, ObstaclePointSet>& obstacle_points,
                                        const std::vector<HumanState>& humans, const ControllerParams& p) {
    std::vector<CbfRow> rows;
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            const auto t = robot_pair_barrier(states.at(members[a]), states.at(members[b]), p.r_safe);
            rows.push_back({CbfRow::Kind::robot_robot, {{a, t.coeff_i}, {b, t.coeff_j}}, barrier_rhs(t, p)});
        }
    }
    const double r_obstacle = p.r_robot + p.obstacle_margin;
    for (std::size_t a = 0; a < members.size(); ++a) {
        auto it = obstacle_points.find(members[a]);
        if (it == obstacle_points.end()) continue;
        const RobotState& s = states.at(members[a]);
        for (const auto& pt : it->second.rays) {
            if (!pt) continue;
            const auto t = robot_point_barrier(s, *pt, Vec2::Zero(), r_obstacle);
            rows.push_back({CbfRow::Kind::robot_obstacle, {{a, t.coeff_i}}, barrier_rhs(t, p)});
        }
    }
    const double r_h = p.r_robot + p.r_human;
    for (std::size_t a = 0; a < members.size(); ++a) {
        const RobotState& s = states.at(members[a]);
        for (const auto& h : humans) {
            if ((h.position - s.position()).norm() > p.human_horizon) continue;
            const auto t = robot_point_barrier(s, h.position, h.velocity, r_h);
            rows.push_back({CbfRow::Kind::robot_human, {{a, t.coeff_i}}, barrier_rhs(t, p)});
        }
    }
    return rows;
}

double qp_objective(const std::vector<int>& members, const ControlDecision& d, const std::map<int, Control>& nominals,
                    const ControllerParams& p) {
    double obj = 0.0;
    for (int id : members) {
        const Control& u = d.controls.at(id);
        const Control& n = nominals.at(id);
        obj += (u.a - n.a) * (u.a - n.a) + (u.omega - n.omega) * (u.omega - n.omega);
    }
    for (double s : d.slack_used) obj += p.slack_penalty * s * s;
    return obj;
}

ControlDecision solve_cluster_qp(const std::vector<int>& members, const std::map<int, RobotState>& states,
                                 const std::map<int, Control>& nominals,
                                 const std::map<int, ObstaclePointSet>& obstacle_points,
                                 const std::vector<HumanState>& humans, const ControllerParams& p) {
    if (members.empty()) throw InvalidInput("solve_cluster_qp: empty cluster");
    for (int id : members) {
        auto it = states.find(id);
        if (it == states.end() || !nominals.contains(id))
            throw InvalidInput("solve_cluster_qp: missing state or nominal for robot " + std::to_string(id));
        if (!finite_state(it->second)) throw InvalidInput("solve_cluster_qp: non-finite state for robot " + std::to_string(id));
    }

    const auto rows = cluster_constraints(members, states, obstacle_points, humans, p);
    const std::size_t nu = 2 * members.size();
    const std::size_t nc = rows.size();

    ControlDecision out;
    out.slack_used.assign(nc, 0.0);

    // Nominal already satisfies every constraint and bound: nothing to solve.
    bool nominal_ok = true;
    for (int id : members) {
        const Control& n = nominals.at(id);
        if (std::abs(n.a) > p.a_max || std::abs(n.omega) > p.omega_max) nominal_ok = false;
    }
    for (const auto& row : rows) {
        if (!nominal_ok) break;
        double lhs = 0.0;
        for (const auto& [slot, c] : row.terms) {
            const Control& n = nominals.at(members[slot]);
            lhs += c.x() * n.a + c.y() * n.omega;
        }
        if (lhs < row.rhs) nominal_ok = false;
    }
    if (nominal_ok) {
        for (int id : members) out.controls[id] = nominals.at(id);
        return out;
    }

    // z = [a_0, w_0, a_1, w_1, ..., s_0, ..., s_{nc-1}]; without slack only the controls.
    auto solve = [&](bool with_slack) {
        const std::size_t ns = with_slack ? nc : 0;
        const auto nz = static_cast<Eigen::Index>(nu + ns);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nz, nz);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(nz);
        for (std::size_t k = 0; k < members.size(); ++k) {
            const Control& n = nominals.at(members[k]);
            const auto ia = static_cast<Eigen::Index>(2 * k);
            H(ia, ia) = 2.0;
            H(ia + 1, ia + 1) = 2.0;
            g(ia) = -2.0 * n.a;
            g(ia + 1) = -2.0 * n.omega;
        }
        for (std::size_t c = 0; c < ns; ++c) {
            const auto is = static_cast<Eigen::Index>(nu + c);
            H(is, is) = 2.0 * p.slack_penalty;
        }

        const auto m = static_cast<Eigen::Index>(nc + ns + 2 * nu);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, nz);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
        Eigen::Index r = 0;
        for (std::size_t c = 0; c < nc; ++c, ++r) {
            for (const auto& [slot, coeff] : rows[c].terms) {
                A(r, static_cast<Eigen::Index>(2 * slot)) += coeff.x();
                A(r, static_cast<Eigen::Index>(2 * slot + 1)) += coeff.y();
            }
            if (with_slack) A(r, static_cast<Eigen::Index>(nu + c)) = 1.0;
            b(r) = rows[c].rhs;
        }
        for (std::size_t c = 0; c < ns; ++c, ++r) A(r, static_cast<Eigen::Index>(nu + c)) = 1.0;
        for (std::size_t k = 0; k < members.size(); ++k) {
            const auto ia = static_cast<Eigen::Index>(2 * k);
            A(r, ia) = 1.0, b(r++) = -p.a_max;
            A(r, ia) = -1.0, b(r++) = -p.a_max;
            A(r, ia + 1) = 1.0, b(r++) = -p.omega_max;
            A(r, ia + 1) = -1.0, b(r++) = -p.omega_max;
        }
        return qp::solve(H, g, A, b, {p.qp_max_iterations, p.qp_tolerance});
    };

    // Slack enters only when the hard constraints cannot all hold inside the box.
    auto res = solve(false);
    bool slacked = false;
    if (res.status != qp::Status::optimal || !res.x.allFinite()) {
        res = solve(true);
        slacked = true;
    }
    if (res.status != qp::Status::optimal || !res.x.allFinite()) {
        out.qp_status = QpStatus::infeasible_fallback;
        for (int id : members) out.controls[id] = clamp_box(nominal_stop(states.at(id), p), p);
        return out;
    }

    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto ia = static_cast<Eigen::Index>(2 * k);
        out.controls[members[k]] = clamp_box({res.x(ia), res.x(ia + 1)}, p);
    }
    double max_slack = 0.0;
    if (slacked) {
        for (std::size_t c = 0; c < nc; ++c) {
            out.slack_used[c] = std::max(0.0, res.x(static_cast<Eigen::Index>(nu + c)));
            max_slack = std::max(max_slack, out.slack_used[c]);
        }
    }
    out.qp_status = max_slack > 1e-6 ? QpStatus::feasible_with_slack : QpStatus::feasible;
    return out;
}

ControlDecision solve_single_qp(const RobotState& state, const Control& nominal, const ObstaclePointSet& obstacle_points,
                                const std::vector<HumanState>& humans, const ControllerParams& p, int robot_id) {
    return solve_cluster_qp({robot_id}, {{robot_id, state}}, {{robot_id, nominal}}, {{robot_id, obstacle_points}}, humans,
                            p);
}

}  // namespace mrta
