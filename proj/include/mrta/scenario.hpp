#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrta/dynamics.hpp"
#include "mrta/navigation.hpp"
#include "mrta/planner.hpp"
#include "mrta/safety_control.hpp"
#include "mrta/tasking.hpp"
#include "mrta/world.hpp"

namespace mrta {

struct RobotSpec {
    int id = 0;
    std::string name;
    Vec2 start{0.0, 0.0};
    double heading = 0.0;
    ControllerParams params;
};

struct HumanSpec {
    Vec2 start{0.0, 0.0};
    std::vector<Vec2> waypoints;
};

struct RoomSpec {
    int location = -1;
    std::vector<Vec2> polygon;
    std::vector<Vec2> slots;
    Vec2 exit{0.0, 0.0};
};

struct SimParams {
    double tick_dt = 0.01;
    double control_period = 0.05;
    double replan_period = 1.0;
    double duration = 60.0;
    std::uint64_t seed = 0;
};

struct Scenario {
    std::string name;
    std::string map_path;
    OccupancyGrid grid;
    Costmap costmap;
    double inflation_radius = 0.6;
    double cost_scale = 3.0;

    std::vector<RobotSpec> robots;
    std::vector<HumanSpec> humans;
    std::vector<std::string> location_names;
    RoadwayNetwork roads;
    std::vector<RoomSpec> rooms;
    TravelTimeGraph travel_times;
    bool travel_times_estimated = false;
    std::vector<TaskRequest> task_stream;

    SimParams sim;
    ControllerParams controller;
    HumanParams human;
    PlannerParams planner;
    double d_neighbor = 3.0;
    double release_distance = 2.0;
    double request_factor = 1.5;  // request a slot within this multiple of the last-slot-to-room distance

    std::string digest;  // hex digest of the source documents

    const RoomSpec* room_at(int location) const;
};

// Loads a scenario document (YAML) and everything it references. Relative
// paths resolve against the scenario's directory; tasks_path overrides the
// document's `tasks` entry. Throws ScenarioError naming each failed
// reference, IoError for unreadable files.
Scenario load_scenario(const std::string& config_path, const std::optional<std::string>& tasks_path = {});

// Same, from in-memory documents (map_text replaces the `map` reference).
Scenario parse_scenario(const std::string& config_text, const std::string& map_text,
                        const std::optional<std::string>& tasks_text, const std::string& base_dir = ".");

// Planner-based estimate used when a scenario ships no travel-time file:
// path length at v_max along each route, scaled by 1.5 plus 2 s, max of both directions.
TravelTimeGraph estimate_travel_times(const Scenario& s);

std::string read_text_file(const std::string& path);

}  // namespace mrta
