#include "mrta/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "mrta/errors.hpp"

namespace mrta {

namespace {

struct Deriv {
    double dx, dy, dtheta, dv;
};

Deriv unicycle(double theta, double v, const Control& u) { return {v * std::cos(theta), v * std::sin(theta), u.omega, u.a}; }

bool finite(const RobotState& s) {
    return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta) && std::isfinite(s.v);
}

}  // namespace

RobotState step_robot(const RobotState& state, const Control& control, double dt, double v_max, double max_substep) {
    if (!finite(state) || !std::isfinite(control.a) || !std::isfinite(control.omega) || !std::isfinite(dt))
        throw InvalidInput("step_robot: non-finite input");
    if (!(dt > 0.0)) throw InvalidInput("step_robot: dt must be positive");

    const int substeps = std::max(1, static_cast<int>(std::ceil(dt / max_substep - 1e-9)));
    const double h = dt / substeps;
    RobotState s = state;
    for (int i = 0; i < substeps; ++i) {
        const Deriv k1 = unicycle(s.theta, s.v, control);
        const Deriv k2 = unicycle(s.theta + 0.5 * h * k1.dtheta, s.v + 0.5 * h * k1.dv, control);
        const Deriv k3 = unicycle(s.theta + 0.5 * h * k2.dtheta, s.v + 0.5 * h * k2.dv, control);
        const Deriv k4 = unicycle(s.theta + h * k3.dtheta, s.v + h * k3.dv, control);
        s.x += h / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
        s.y += h / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy);
        // theta is integrated unwrapped within the step, then wrapped.
        s.theta += h / 6.0 * (k1.dtheta + 2 * k2.dtheta + 2 * k3.dtheta + k4.dtheta);
        s.v += h / 6.0 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv);
        s.v = std::clamp(s.v, -v_max, v_max);
        s.theta = wrap_angle(s.theta);
    }
    return s;
}

namespace {

Vec2 repulsion(const Vec2& self, const Vec2& other, double r_sum, const HumanParams& p) {
    Vec2 diff = self - other;
    const double d = diff.norm();
    const Vec2 dir = d > 1e-9 ? Vec2(diff / d) : Vec2(1.0, 0.0);
    const double mag = std::min(p.repulsion_strength * std::exp((r_sum - d) / p.repulsion_range), p.force_cap);
    return mag * dir;
}

}  // namespace

HumanState step_human(const HumanState& h, std::span<const RobotState> robots, std::span<const HumanState> others,
                      const ObstaclePointSet& obstacles, double dt, const HumanParams& p) {
    if (!(dt > 0.0)) throw InvalidInput("step_human: dt must be positive");
    HumanState out = h;

    Vec2 desired{0.0, 0.0};
    if (!out.goal_waypoints.empty()) {
        out.current_goal_index %= out.goal_waypoints.size();
        if ((out.goal_waypoints[out.current_goal_index] - out.position).norm() < p.waypoint_tolerance)
            out.current_goal_index = (out.current_goal_index + 1) % out.goal_waypoints.size();
        const Vec2 to_goal = out.goal_waypoints[out.current_goal_index] - out.position;
        const double d = to_goal.norm();
        if (d > 1e-9) desired = p.v_desired * to_goal / d;
    }

    Vec2 force = (desired - out.velocity) / p.tau;
    for (const auto& r : robots) force += repulsion(out.position, r.position(), p.radius + p.robot_radius, p);
    for (const auto& o : others) force += repulsion(out.position, o.position, 2.0 * p.radius, p);
    for (const auto& pt : obstacles.rays)
        if (pt) force += repulsion(out.position, *pt, p.radius, p);

    out.velocity += force * dt;
    const double cap = 1.3 * p.v_desired;
    const double speed = out.velocity.norm();
    if (speed > cap) out.velocity *= cap / speed;
    out.position += out.velocity * dt;
    return out;
}

}  // namespace mrta
