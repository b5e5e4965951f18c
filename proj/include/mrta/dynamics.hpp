#pragma once

#include <span>
#include <vector>

#include "mrta/geometry.hpp"
#include "mrta/world.hpp"

namespace mrta {

// Dynamic unicycle state: position, heading in (-pi, pi], signed forward speed.
struct RobotState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    double v = 0.0;

    Vec2 position() const { return {x, y}; }
    Vec2 velocity() const { return v * heading_vector(theta); }
};

// Forward acceleration and turn rate.
struct Control {
    double a = 0.0;
    double omega = 0.0;
};

// RK4 on x' = v cos(theta), y' = v sin(theta), theta' = omega, v' = a.
// dt is split into substeps no longer than max_substep; after each substep
// the speed is clamped to [-v_max, v_max] and theta renormalized.
RobotState step_robot(const RobotState& state, const Control& control, double dt, double v_max,
                      double max_substep = 0.01);

struct HumanParams {
    double v_desired = 1.0;
    double tau = 0.5;
    double repulsion_strength = 2.0;  // A
    double repulsion_range = 0.35;    // B
    double force_cap = 10.0;
    double radius = 0.35;
    double waypoint_tolerance = 0.3;
    double robot_radius = 0.3;
};

struct HumanState {
    Vec2 position{0.0, 0.0};
    Vec2 velocity{0.0, 0.0};
    std::vector<Vec2> goal_waypoints;
    std::size_t current_goal_index = 0;
};

// Social-force step: relaxation toward v_desired along the current waypoint
// direction plus capped exponential repulsion from robots, other humans and
// obstacle points; semi-implicit Euler, speed capped at 1.3 * v_desired.
HumanState step_human(const HumanState& h, std::span<const RobotState> robots, std::span<const HumanState> others,
                      const ObstaclePointSet& obstacles, double dt, const HumanParams& p = {});

}  // namespace mrta
