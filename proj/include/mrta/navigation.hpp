#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrta/geometry.hpp"

namespace mrta {

class RoadwayNetwork {
public:
    RoadwayNetwork() = default;
    explicit RoadwayNetwork(std::vector<Vec2> locations) : locations_(std::move(locations)) {}

    // Authored directional route. The first waypoint must lie within 0.5 m
    // of `from` and the last within 0.5 m of `to`.
    void add_route(int from, int to, std::vector<Vec2> waypoints);

    std::size_t size() const { return locations_.size(); }
    bool has_location(int id) const { return id >= 0 && static_cast<std::size_t>(id) < locations_.size(); }
    const Vec2& location(int id) const;
    const std::vector<Vec2>& locations() const { return locations_; }

    // Authored route, or the direct segment [from, to] when none was authored.
    std::vector<Vec2> route(int from, int to) const;
    bool has_authored_route(int from, int to) const { return routes_.contains({from, to}); }
    int nearest_location(const Vec2& p) const;

private:
    std::vector<Vec2> locations_;
    std::map<std::pair<int, int>, std::vector<Vec2>> routes_;
};

struct RoomQueue {
    int room_id = -1;  // location id of the room
    std::vector<Vec2> slots;  // slot 0 is next to the door
    std::vector<int> occupants;  // front = head; the holder stays at the front while inside
    std::optional<int> holder;

    bool full() const { return occupants.size() >= slots.size(); }
    std::optional<std::size_t> index_of(int robot) const;
};

// Appends `robot` and returns its index; an idempotent repeat returns the
// existing index. Index 0 grants holder status when no holder is set.
// Returns nullopt when the queue is full (the caller retries next tick).
std::optional<std::size_t> request_slot(RoomQueue& q, int robot);

// Releases `robot` when it is more than release_distance from the room or has
// no tasks left. A released holder hands access to the new front occupant.
// Returns true when the robot was removed; non-members are a no-op.
bool release(RoomQueue& q, int robot, const Vec2& robot_position, const Vec2& room_position, double release_distance,
             bool tasks_exhausted = false);

// Unconditional removal, used when a waiting robot is reassigned elsewhere.
bool withdraw(RoomQueue& q, int robot);

struct Waypoint {
    Vec2 position{0.0, 0.0};
    int location = -1;     // system location reached at this waypoint, -1 for roadway points
    bool hold = false;     // queue slot: reaching it means wait, not advance
    int queue_room = -1;   // room whose queue this hold slot belongs to
};

struct ArrivalRecord {
    Vec2 waypoint{0.0, 0.0};
    int location = -1;
    double time = 0.0;
};

struct WaypointPlan {
    int robot_id = -1;
    std::vector<Waypoint> pending;
    std::vector<ArrivalRecord> arrivals;
};

// Converts an ordered location list into roadway waypoints, starting from
// `from_location` (or the location nearest `current` when absent). A
// destination with a room queue that the robot does not hold ends the plan
// at that queue's last slot, marked as a hold point.
WaypointPlan expand_actions(const std::vector<int>& actions, const RoadwayNetwork& net, const Vec2& current,
                            const std::map<int, RoomQueue>& queues = {}, std::optional<int> from_location = {},
                            int robot_id = -1);

// Retargets the plan's hold point for q to slot `index`; once the robot is
// the holder at index 0 the hold is lifted and the room itself is appended.
WaypointPlan on_queue_position(WaypointPlan plan, const RoomQueue& q, std::size_t index, const Vec2& room_position);

// Appends an arrival record; a repeat at a non-increasing time is ignored.
WaypointPlan record_arrival(WaypointPlan plan, const Waypoint& waypoint, double time);

}  // namespace mrta
