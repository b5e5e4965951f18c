#pragma once

#include <Eigen/Core>
#include <map>
#include <numbers>
#include <vector>

#include "mrta/dynamics.hpp"
#include "mrta/geometry.hpp"
#include "mrta/world.hpp"

namespace mrta {

struct ControllerParams {
    double k_v = 1.0;
    double k_theta = 2.0;
    double k_slow = -2.0;
    double theta_bar = std::numbers::pi / 4.0;
    double v_max = 1.0;
    double a_max = 2.0;
    double omega_max = 2.0;
    double delta = 0.5;     // look-ahead distance along the planned path
    double d_arrive = 0.3;  // stop distance to the tracked waypoint
    double r_robot = 0.3;
    double r_safe = 0.8;  // minimum robot-robot center separation
    double alpha1 = 1.5;
    double alpha2 = 1.5;
    double slack_penalty = 1e4;

    // Sensing and constraint geometry.
    int n_rays = 16;
    double sensor_range = 2.5;
    double obstacle_margin = 0.1;  // obstacle barrier radius is r_robot + margin
    double r_human = 0.35;
    double human_horizon = 4.0;

    int qp_max_iterations = 200;
    double qp_tolerance = 1e-10;

    // Throws InvalidInput when a field is out of range.
    void validate() const;
};

enum class QpStatus { feasible, feasible_with_slack, infeasible_fallback };

const char* to_string(QpStatus s);

struct ControlDecision {
    std::map<int, Control> controls;
    std::vector<double> slack_used;
    QpStatus qp_status = QpStatus::feasible;
};

// Leader law: drive toward `waypoint`, rotating in place when the heading
// error exceeds theta_bar, and braking once within d_arrive.
Control nominal_leader(const RobotState& state, const Vec2& waypoint, const ControllerParams& p);

// Follower law: (clamp(k_slow * v, -v_max, v_max), 0).
Control nominal_stop(const RobotState& state, const ControllerParams& p);

// Second-order barrier data for h = |p_i - p_j|^2 - r^2. The second
// derivative is hddot = drift + coeff_i . (a_i, omega_i) + coeff_j . (a_j, omega_j).
struct BarrierTerms {
    double h = 0.0;
    double hdot = 0.0;
    double drift = 0.0;
    Eigen::Vector2d coeff_i = Eigen::Vector2d::Zero();
    Eigen::Vector2d coeff_j = Eigen::Vector2d::Zero();
};

BarrierTerms robot_pair_barrier(const RobotState& i, const RobotState& j, double radius);
// Robot against a point moving at constant velocity (a static obstacle point has zero velocity).
BarrierTerms robot_point_barrier(const RobotState& s, const Vec2& point, const Vec2& point_velocity, double radius);

// One linear constraint  row . z >= rhs  over the stacked controls, with its own slack.
struct CbfRow {
    enum class Kind { robot_robot, robot_obstacle, robot_human };
    Kind kind;
    std::vector<std::pair<std::size_t, Eigen::Vector2d>> terms;  // (member slot, coefficient on (a, omega))
    double rhs = 0.0;
};

// Builds every barrier row for the cluster in a fixed order: robot pairs
// (i < j), then each member's obstacle points, then humans in range.
std::vector<CbfRow> cluster_constraints(const std::vector<int>& members, const std::map<int, RobotState>& states,
                                        const std::map<int, ObstaclePointSet>& obstacle_points,
                                        const std::vector<HumanState>& humans, const ControllerParams& p);

// Objective value  sum |u - u*|^2 + slack_penalty * sum s^2.
double qp_objective(const std::vector<int>& members, const ControlDecision& d, const std::map<int, Control>& nominals,
                    const ControllerParams& p);

ControlDecision solve_cluster_qp(const std::vector<int>& members, const std::map<int, RobotState>& states,
                                 const std::map<int, Control>& nominals,
                                 const std::map<int, ObstaclePointSet>& obstacle_points,
                                 const std::vector<HumanState>& humans, const ControllerParams& p);

ControlDecision solve_single_qp(const RobotState& state, const Control& nominal, const ObstaclePointSet& obstacle_points,
                                const std::vector<HumanState>& humans, const ControllerParams& p, int robot_id = 0);

}  // namespace mrta
