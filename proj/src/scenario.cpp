#include "mrta/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mrta/errors.hpp"

namespace mrta {

namespace fs = std::filesystem;

const RoomSpec* Scenario::room_at(int location) const {
    for (const auto& r : rooms)
        if (r.location == location) return &r;
    return nullptr;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return p;
    return (fs::path(base_dir) / path).string();
}

Vec2 as_vec2(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence() || n.size() != 2) throw ScenarioError(what + ": expected [x, y]");
    try {
        return {n[0].as<double>(), n[1].as<double>()};
    } catch (const YAML::Exception&) {
        throw ScenarioError(what + ": expected numeric [x, y]");
    }
}

std::vector<Vec2> as_points(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence()) throw ScenarioError(what + ": expected a list of [x, y]");
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(as_vec2(n[i], what + "[" + std::to_string(i) + "]"));
    return out;
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& what) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ScenarioError(what + ": wrong value type");
    }
}

void apply_controller(const YAML::Node& n, ControllerParams& p, const std::string& what) {
    if (!n) return;
    if (!n.IsMap()) throw ScenarioError(what + ": expected a mapping");
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        const std::string w = what + "." + key;
        if (key == "k_v") p.k_v = scalar<double>(kv.second, w);
        else if (key == "k_theta") p.k_theta = scalar<double>(kv.second, w);
        else if (key == "k_slow") p.k_slow = scalar<double>(kv.second, w);
        else if (key == "theta_bar") p.theta_bar = scalar<double>(kv.second, w);
        else if (key == "v_max") p.v_max = scalar<double>(kv.second, w);
        else if (key == "a_max") p.a_max = scalar<double>(kv.second, w);
        else if (key == "omega_max") p.omega_max = scalar<double>(kv.second, w);
        else if (key == "delta") p.delta = scalar<double>(kv.second, w);
        else if (key == "d_arrive") p.d_arrive = scalar<double>(kv.second, w);
        else if (key == "r_robot") p.r_robot = scalar<double>(kv.second, w);
        else if (key == "r_safe") p.r_safe = scalar<double>(kv.second, w);
        else if (key == "alpha1") p.alpha1 = scalar<double>(kv.second, w);
        else if (key == "alpha2") p.alpha2 = scalar<double>(kv.second, w);
        else if (key == "slack_penalty") p.slack_penalty = scalar<double>(kv.second, w);
        else if (key == "n_rays") p.n_rays = scalar<int>(kv.second, w);
        else if (key == "sensor_range") p.sensor_range = scalar<double>(kv.second, w);
        else if (key == "obstacle_margin") p.obstacle_margin = scalar<double>(kv.second, w);
        else if (key == "r_human") p.r_human = scalar<double>(kv.second, w);
        else if (key == "human_horizon") p.human_horizon = scalar<double>(kv.second, w);
        else throw ScenarioError(w + ": unknown controller parameter");
    }
    try {
        p.validate();
    } catch (const InvalidInput& e) {
        throw ScenarioError(what + ": " + e.what());
    }
}

void require_free(const Scenario& s, const Vec2& p, const std::string& what) {
    auto c = s.grid.geometry().world_to_cell(p);
    if (!c) throw ScenarioError(what + " is outside the map");
    if (s.costmap.lethal(*c)) throw ScenarioError(what + " lies on an occupied cell");
}

}  // namespace

TravelTimeGraph estimate_travel_times(const Scenario& s) {
    const std::size_t n = s.roads.size();
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    const double res = s.grid.resolution();
    auto leg = [&](int i, int j) {
        const auto route = s.roads.route(i, j);
        double length = 0.0;
        Vec2 prev = s.roads.location(i);
        for (const auto& p : route) {
            if ((p - prev).norm() > 1e-9) length += plan(s.costmap, prev, p, s.planner).cells.size() * res;
            prev = p;
        }
        return 1.5 * length / s.controller.v_max + 2.0;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double t = 0.0;
            try {
                t = std::max(leg(static_cast<int>(i), static_cast<int>(j)), leg(static_cast<int>(j), static_cast<int>(i)));
            } catch (const Unreachable&) {
                throw ScenarioError("no traversable route between locations " + std::to_string(i) + " and " +
                                    std::to_string(j));
            }
            w[i][j] = w[j][i] = std::round(t * 1000.0) / 1000.0;
        }
    return TravelTimeGraph(std::move(w));
}

Scenario parse_scenario(const std::string& config_text, const std::string& map_text,
                        const std::optional<std::string>& tasks_text, const std::string& base_dir) {
    YAML::Node doc;
    try {
        doc = YAML::Load(config_text);
    } catch (const YAML::Exception& e) {
        throw ScenarioError(std::string("scenario is not valid YAML: ") + e.what());
    }
    if (!doc.IsMap()) throw ScenarioError("scenario must be a mapping");

    Scenario s;
    s.name = doc["name"] ? scalar<std::string>(doc["name"], "name") : "scenario";
    if (doc["map"]) s.map_path = scalar<std::string>(doc["map"], "map");
    try {
        s.grid = load_map(map_text);
    } catch (const ParseError& e) {
        throw ScenarioError("map " + s.map_path + ": " + e.what());
    }

    if (auto inf = doc["inflation"]) {
        if (inf["radius"]) s.inflation_radius = scalar<double>(inf["radius"], "inflation.radius");
        if (inf["cost_scale"]) s.cost_scale = scalar<double>(inf["cost_scale"], "inflation.cost_scale");
    }
    apply_controller(doc["controller"], s.controller, "controller");
    s.costmap = inflate(s.grid, s.inflation_radius, s.cost_scale, s.controller.r_robot);
    s.human.robot_radius = s.controller.r_robot;

    if (auto sim = doc["sim"]) {
        if (sim["tick_dt"]) s.sim.tick_dt = scalar<double>(sim["tick_dt"], "sim.tick_dt");
        if (sim["control_period"]) s.sim.control_period = scalar<double>(sim["control_period"], "sim.control_period");
        if (sim["replan_period"]) s.sim.replan_period = scalar<double>(sim["replan_period"], "sim.replan_period");
        if (sim["duration"]) s.sim.duration = scalar<double>(sim["duration"], "sim.duration");
        if (sim["seed"]) s.sim.seed = scalar<std::uint64_t>(sim["seed"], "sim.seed");
    }
    if (!(s.sim.tick_dt > 0) || !(s.sim.control_period > 0) || !(s.sim.replan_period > 0) || s.sim.duration < 0)
        throw ScenarioError("sim: tick_dt, control_period, replan_period must be positive and duration >= 0");
    {
        const double ratio = s.sim.control_period / s.sim.tick_dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1)
            throw ScenarioError("sim: control_period must be an integer multiple of tick_dt");
    }
    if (auto c = doc["coordination"]; c && c["d_neighbor"])
        s.d_neighbor = scalar<double>(c["d_neighbor"], "coordination.d_neighbor");
    if (auto q = doc["queue"]) {
        if (q["release_distance"]) s.release_distance = scalar<double>(q["release_distance"], "queue.release_distance");
        if (q["request_factor"]) s.request_factor = scalar<double>(q["request_factor"], "queue.request_factor");
    }
    if (auto p = doc["planner"]; p && p["cost_weight"])
        s.planner.cost_weight = scalar<double>(p["cost_weight"], "planner.cost_weight");
    if (auto h = doc["human_model"]) {
        if (h["v_desired"]) s.human.v_desired = scalar<double>(h["v_desired"], "human_model.v_desired");
        if (h["tau"]) s.human.tau = scalar<double>(h["tau"], "human_model.tau");
    }

    // Fig. 6 layout: agents: { <name>: { start: [x, y] } }
    const YAML::Node agents = doc["agents"];
    if (agents && !agents.IsMap()) throw ScenarioError("agents: expected a mapping of robot names");
    if (agents) {
        int next_id = 0;
        for (const auto& kv : agents) {
            RobotSpec r;
            r.id = next_id++;
            r.name = kv.first.as<std::string>();
            const std::string w = "agents." + r.name;
            if (!kv.second["start"]) throw ScenarioError(w + ": missing start");
            r.start = as_vec2(kv.second["start"], w + ".start");
            if (kv.second["heading"]) r.heading = wrap_angle(scalar<double>(kv.second["heading"], w + ".heading"));
            r.params = s.controller;
            apply_controller(kv.second["params"], r.params, w + ".params");
            s.robots.push_back(std::move(r));
        }
    }

    if (auto humans = doc["humans"]) {
        for (std::size_t i = 0; i < humans.size(); ++i) {
            const std::string w = "humans[" + std::to_string(i) + "]";
            HumanSpec h;
            h.start = as_vec2(humans[i]["start"], w + ".start");
            if (humans[i]["waypoints"]) h.waypoints = as_points(humans[i]["waypoints"], w + ".waypoints");
            s.humans.push_back(std::move(h));
        }
    }

    std::vector<Vec2> locations;
    if (auto locs = doc["locations"]) {
        for (std::size_t i = 0; i < locs.size(); ++i) {
            const std::string w = "locations[" + std::to_string(i) + "]";
            if (locs[i].IsMap()) {
                locations.push_back(as_vec2(locs[i]["position"], w + ".position"));
                s.location_names.push_back(locs[i]["name"] ? scalar<std::string>(locs[i]["name"], w + ".name")
                                                           : "L" + std::to_string(i));
            } else {
                locations.push_back(as_vec2(locs[i], w));
                s.location_names.push_back("L" + std::to_string(i));
            }
        }
    }
    s.roads = RoadwayNetwork(locations);
    if (auto roads = doc["roadways"]) {
        for (std::size_t i = 0; i < roads.size(); ++i) {
            const std::string w = "roadways[" + std::to_string(i) + "]";
            const int from = scalar<int>(roads[i]["from"], w + ".from");
            const int to = scalar<int>(roads[i]["to"], w + ".to");
            try {
                s.roads.add_route(from, to, as_points(roads[i]["waypoints"], w + ".waypoints"));
            } catch (const InvalidInput& e) {
                throw ScenarioError(w + ": " + e.what());
            }
        }
    }
    if (auto rooms = doc["rooms"]) {
        for (std::size_t i = 0; i < rooms.size(); ++i) {
            const std::string w = "rooms[" + std::to_string(i) + "]";
            RoomSpec r;
            r.location = scalar<int>(rooms[i]["location"], w + ".location");
            if (!s.roads.has_location(r.location))
                throw ScenarioError(w + ": room location " + std::to_string(r.location) + " does not exist");
            if (s.room_at(r.location)) throw ScenarioError(w + ": duplicate room for location " + std::to_string(r.location));
            r.polygon = as_points(rooms[i]["polygon"], w + ".polygon");
            if (r.polygon.size() < 3) throw ScenarioError(w + ".polygon: need at least 3 vertices");
            r.slots = as_points(rooms[i]["slots"], w + ".slots");
            if (r.slots.empty()) throw ScenarioError(w + ".slots: need at least one queue slot");
            r.exit = rooms[i]["exit"] ? as_vec2(rooms[i]["exit"], w + ".exit") : r.slots.back();
            for (std::size_t k = 0; k < r.slots.size(); ++k) {
                if (point_in_polygon(r.polygon, r.slots[k]))
                    throw ScenarioError(w + ".slots[" + std::to_string(k) + "] lies inside the room");
            }
            s.rooms.push_back(std::move(r));
        }
    }

    // Geometry validation against the map.
    for (const auto& r : s.robots) require_free(s, r.start, "agents." + r.name + ".start");
    for (std::size_t i = 0; i < locations.size(); ++i) require_free(s, locations[i], "locations[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < s.humans.size(); ++i)
        if (!s.grid.geometry().contains(s.humans[i].start))
            throw ScenarioError("humans[" + std::to_string(i) + "].start is outside the map");
    for (const auto& r : s.rooms) {
        for (std::size_t k = 0; k < r.slots.size(); ++k)
            require_free(s, r.slots[k], "room " + std::to_string(r.location) + " slot " + std::to_string(k));
        require_free(s, r.exit, "room " + std::to_string(r.location) + " exit");
        // The exit waypoint counts as reached within 0.5 m; the robot must still be past release_distance there.
        if ((r.exit - s.roads.location(r.location)).norm() <= s.release_distance + 0.5)
            throw ScenarioError("room " + std::to_string(r.location) +
                                " exit must lie more than queue.release_distance + 0.5 m from the room");
    }

    std::string tt_text;
    if (auto tt = doc["travel_times"]) {
        const std::string path = resolve(base_dir, scalar<std::string>(tt, "travel_times"));
        tt_text = read_text_file(path);
        try {
            s.travel_times = parse_travel_time_graph(tt_text);
        } catch (const ParseError& e) {
            throw ScenarioError("travel_times " + path + ": " + e.what());
        }
        if (s.travel_times.size() != locations.size())
            throw ScenarioError("travel_times: graph has " + std::to_string(s.travel_times.size()) +
                                " locations but the scenario defines " + std::to_string(locations.size()));
    } else if (!locations.empty()) {
        try {
            s.travel_times = estimate_travel_times(s);
        } catch (const Error& e) {
            throw ScenarioError(std::string("cannot estimate travel times: ") + e.what());
        }
        s.travel_times_estimated = true;
    }

    if (tasks_text) {
        try {
            s.task_stream = parse_task_stream(*tasks_text);
        } catch (const ParseError& e) {
            throw ScenarioError(std::string("task stream: ") + e.what());
        }
    }
    for (std::size_t r = 0; r < s.task_stream.size(); ++r) {
        for (std::size_t k = 0; k < s.task_stream[r].tasks.size(); ++k) {
            const Task& t = s.task_stream[r].tasks[k];
            const std::string w = "task stream request " + std::to_string(r) + " task " + std::to_string(k);
            if (!s.roads.has_location(t.start)) throw ScenarioError(w + ": start location " + std::to_string(t.start) + " does not exist");
            if (!s.roads.has_location(t.end)) throw ScenarioError(w + ": end location " + std::to_string(t.end) + " does not exist");
        }
    }

    std::uint64_t h = 1469598103934665603ull;
    h = fnv1a(h, config_text);
    h = fnv1a(h, map_text);
    h = fnv1a(h, tasks_text.value_or(""));
    h = fnv1a(h, tt_text);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    s.digest = buf;
    return s;
}

Scenario load_scenario(const std::string& config_path, const std::optional<std::string>& tasks_path) {
    const std::string config_text = read_text_file(config_path);
    const std::string base_dir = fs::path(config_path).parent_path().string();
    YAML::Node doc;
    try {
        doc = YAML::Load(config_text);
    } catch (const YAML::Exception& e) {
        throw ScenarioError(std::string("scenario is not valid YAML: ") + e.what());
    }
    if (!doc.IsMap() || !doc["map"]) throw ScenarioError("scenario has no 'map' entry");
    const std::string map_text = read_text_file(resolve(base_dir, doc["map"].as<std::string>()));
    std::optional<std::string> tasks_text;
    if (tasks_path) tasks_text = read_text_file(*tasks_path);
    else if (doc["tasks"]) tasks_text = read_text_file(resolve(base_dir, doc["tasks"].as<std::string>()));
    return parse_scenario(config_text, map_text, tasks_text, base_dir.empty() ? "." : base_dir);
}

}  // namespace mrta
