#include "mrta/navigation.hpp"

#include <algorithm>
#include <limits>

#include "mrta/errors.hpp"

namespace mrta {

const Vec2& RoadwayNetwork::location(int id) const {
    if (!has_location(id)) throw InvalidInput("unknown location id " + std::to_string(id));
    return locations_[static_cast<std::size_t>(id)];
}

void RoadwayNetwork::add_route(int from, int to, std::vector<Vec2> waypoints) {
    const std::string tag = "route " + std::to_string(from) + "->" + std::to_string(to);
    if (!has_location(from) || !has_location(to)) throw InvalidInput(tag + " references an unknown location");
    if (waypoints.empty()) throw InvalidInput(tag + " has no waypoints");
    if ((waypoints.front() - location(from)).norm() > 0.5)
        throw InvalidInput(tag + " does not start within 0.5 m of its from-location");
    if ((waypoints.back() - location(to)).norm() > 0.5)
        throw InvalidInput(tag + " does not end within 0.5 m of its to-location");
    routes_[{from, to}] = std::move(waypoints);
}

std::vector<Vec2> RoadwayNetwork::route(int from, int to) const {
    auto it = routes_.find({from, to});
    if (it != routes_.end()) return it->second;
    if (from == to) return {location(to)};
    return {location(from), location(to)};
}

int RoadwayNetwork::nearest_location(const Vec2& p) const {
    if (locations_.empty()) throw InvalidInput("roadway network has no locations");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < locations_.size(); ++i) {
        const double d = (locations_[i] - p).norm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

std::optional<std::size_t> RoomQueue::index_of(int robot) const {
    auto it = std::find(occupants.begin(), occupants.end(), robot);
    if (it == occupants.end()) return std::nullopt;
    return static_cast<std::size_t>(it - occupants.begin());
}

std::optional<std::size_t> request_slot(RoomQueue& q, int robot) {
    if (auto idx = q.index_of(robot)) return idx;
    if (q.full()) return std::nullopt;
    q.occupants.push_back(robot);
    const std::size_t idx = q.occupants.size() - 1;
    if (idx == 0 && !q.holder) q.holder = robot;
    return idx;
}

bool withdraw(RoomQueue& q, int robot) {
    auto idx = q.index_of(robot);
    if (!idx) return false;
    q.occupants.erase(q.occupants.begin() + static_cast<std::ptrdiff_t>(*idx));
    if (q.holder == robot) q.holder.reset();
    if (!q.holder && !q.occupants.empty()) q.holder = q.occupants.front();
    return true;
}

bool release(RoomQueue& q, int robot, const Vec2& robot_position, const Vec2& room_position, double release_distance,
             bool tasks_exhausted) {
    if (!q.index_of(robot)) return false;
    if (!tasks_exhausted && (robot_position - room_position).norm() <= release_distance) return false;
    return withdraw(q, robot);
}

WaypointPlan expand_actions(const std::vector<int>& actions, const RoadwayNetwork& net, const Vec2& current,
                            const std::map<int, RoomQueue>& queues, std::optional<int> from_location, int robot_id) {
    for (int loc : actions)
        if (!net.has_location(loc)) throw InvalidInput("unknown location id " + std::to_string(loc));
    if (from_location && !net.has_location(*from_location))
        throw InvalidInput("unknown location id " + std::to_string(*from_location));

    WaypointPlan plan;
    plan.robot_id = robot_id;
    auto append = [&](const Waypoint& w) {
        if (!plan.pending.empty() && plan.pending.back().location < 0 &&
            (plan.pending.back().position - w.position).norm() < 1e-9) {
            plan.pending.back() = w;
            return;
        }
        if (!plan.pending.empty() && w.location < 0 && (plan.pending.back().position - w.position).norm() < 1e-9)
            return;
        plan.pending.push_back(w);
    };

    int prev = from_location ? *from_location : net.nearest_location(current);
    for (int loc : actions) {
        auto q = queues.find(loc);
        const bool gated = q != queues.end() && q->second.holder != robot_id && !q->second.slots.empty();
        if (gated) {
            if (prev != loc) {
                auto r = net.route(prev, loc);
                r.pop_back();
                for (const auto& p : r) append({p});
            }
            append({q->second.slots.back(), -1, true, loc});
            break;
        }
        if (prev == loc) {
            plan.pending.push_back({net.location(loc), loc});
        } else {
            auto r = net.route(prev, loc);
            for (std::size_t i = 0; i + 1 < r.size(); ++i) append({r[i]});
            append({r.back(), loc});
        }
        prev = loc;
    }
    return plan;
}

WaypointPlan on_queue_position(WaypointPlan plan, const RoomQueue& q, std::size_t index, const Vec2& room_position) {
    auto it = std::find_if(plan.pending.rbegin(), plan.pending.rend(),
                           [&](const Waypoint& w) { return w.hold && w.queue_room == q.room_id; });
    if (it == plan.pending.rend() || index >= q.slots.size()) return plan;
    it->position = q.slots[index];
    if (index == 0 && q.holder == plan.robot_id) {
        it->hold = false;
        it->queue_room = -1;
        plan.pending.push_back({room_position, q.room_id});
    }
    return plan;
}

WaypointPlan record_arrival(WaypointPlan plan, const Waypoint& waypoint, double time) {
    if (!plan.arrivals.empty() && time <= plan.arrivals.back().time) return plan;
    plan.arrivals.push_back({waypoint.position, waypoint.location, time});
    return plan;
}

}  // namespace mrta
