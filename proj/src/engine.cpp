#include "mrta/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mrta/errors.hpp"

namespace mrta {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kTimeEps = 1e-9;
constexpr double kClearanceSearch = 3.0;
constexpr int kHumanRays = 8;
constexpr double kHumanSensorRange = 2.0;
constexpr double kStallSpeed = 0.05;
constexpr double kStallTime = 5.0;
constexpr double kDemotionTime = 10.0;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    const double u = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + u * ab)).norm();
}

Control clamp_control(Control c, const ControllerParams& p) {
    c.a = std::clamp(c.a, -p.a_max, p.a_max);
    c.omega = std::clamp(c.omega, -p.omega_max, p.omega_max);
    return c;
}

bool same_point(const Vec2& a, const Vec2& b) { return (a - b).squaredNorm() < 1e-18; }

const char* kind_name(ActionKind k) { return k == ActionKind::pickup ? "pickup" : "dropoff"; }

}  // namespace

Simulation::Simulation(const Scenario& scenario, RunOptions options, std::ostream* trace)
    : s_(scenario), opts_(options), trace_(trace), dispatcher_(scenario.travel_times, options.solver) {
    duration_ = opts_.duration.value_or(s_.sim.duration);
    if (!(duration_ >= 0.0) || !std::isfinite(duration_)) throw ScenarioError("duration must be finite and >= 0");
    if (opts_.seed) s_.sim.seed = *opts_.seed;
    substeps_ = static_cast<int>(std::lround(s_.sim.control_period / s_.sim.tick_dt));
    if (substeps_ < 1) throw ScenarioError("control_period must be an integer multiple of tick_dt");
    const double ticks = duration_ / s_.sim.control_period;
    total_ticks_ = static_cast<std::size_t>(std::ceil(ticks - 1e-9));

    for (std::size_t i = 0; i < s_.robots.size(); ++i) {
        const auto& spec = s_.robots[i];
        RobotRuntime r;
        r.id = static_cast<int>(i);
        r.name = spec.name;
        r.params = spec.params;
        r.state = {spec.start.x(), spec.start.y(), wrap_angle(spec.heading), 0.0};
        r.plan.robot_id = r.id;
        if (s_.roads.size() > 0) r.last_location = s_.roads.nearest_location(spec.start);
        robots_.push_back(std::move(r));
    }
    for (const auto& h : s_.humans) humans_.push_back({h.start, Vec2::Zero(), h.waypoints, 0});
    for (const auto& room : s_.rooms) {
        RoomQueue q;
        q.room_id = room.location;
        q.slots = room.slots;
        queues_[room.location] = std::move(q);
    }
    // A robot that starts inside a room owns that room's queue.
    for (auto& r : robots_) {
        for (const auto& room : s_.rooms) {
            if (!point_in_polygon(room.polygon, r.state.position())) continue;
            if (request_slot(queues_[room.location], r.id)) r.visited_rooms.insert(room.location);
        }
    }
}

bool Simulation::waiting_at_hold(const RobotRuntime& r) const {
    if (r.plan.pending.empty()) return false;
    const Waypoint& w = r.plan.pending.front();
    return w.hold && (r.state.position() - w.position).norm() <= r.params.d_arrive;
}

bool Simulation::active(const RobotRuntime& r) const {
    return !r.faulted && r.has_path && !r.plan.pending.empty() && !r.queue_blocked && !waiting_at_hold(r);
}

bool Simulation::has_action_at(const RobotRuntime& r, int location) const {
    return std::any_of(r.actions.begin(), r.actions.end(), [&](const Action& a) { return a.location == location; });
}

void Simulation::fault(RobotRuntime& r, const std::string& module, const std::string& message, double t) {
    if (r.faulted) return;
    r.faulted = true;
    r.plan.pending.clear();
    r.has_path = false;
    r.queue_blocked = false;
    ++summary_.faults;
    trace_.write(Record(t, "fault").integer("robot", r.id).str("module", module).str("message", message));
}

void Simulation::trim_first_leg(RobotRuntime& r) {
    auto& p = r.plan.pending;
    if (p.size() < 2) return;
    std::size_t m = 0;
    while (m < p.size() && p[m].location < 0 && !p[m].hold) ++m;
    if (m == p.size()) m = p.size() - 1;
    if (m == 0) return;
    const Vec2 pos = r.state.position();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
        const double d = point_segment_distance(pos, p[k].position, p[k + 1].position);
        if (d < best_d - 1e-12) {
            best_d = d;
            best = k;
        }
    }
    p.erase(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(best + 1));
}

void Simulation::refresh_plan(RobotRuntime& r) {
    if (r.faulted) return;
    std::vector<int> locs;
    for (const auto& a : r.actions) locs.push_back(a.location);
    if (locs.empty()) {
        r.plan.pending.clear();
        r.queue_blocked = false;
        return;
    }
    std::optional<int> from;
    if (r.last_location >= 0) from = r.last_location;
    r.plan.pending = expand_actions(locs, s_.roads, r.state.position(), queues_, from, r.id).pending;
    trim_first_leg(r);
    for (const auto& [room, q] : queues_) {
        auto idx = q.index_of(r.id);
        if (idx) r.plan = on_queue_position(std::move(r.plan), q, *idx, s_.roads.location(room));
    }
    const bool gated = std::any_of(r.plan.pending.begin(), r.plan.pending.end(), [](const Waypoint& w) { return w.hold; });
    if (!gated) r.queue_blocked = false;
}

void Simulation::queue_event(const RoomQueue& q, const char* event, int robot, double t) {
    Record rec(t, "queue");
    rec.integer("room", q.room_id).str("event", event).integer("robot", robot).ints("occupants", q.occupants);
    if (q.holder) rec.integer("holder", *q.holder);
    else rec.null("holder");
    trace_.write(rec);
}

void Simulation::phase_dispatch(double t) {
    const auto& stream = s_.task_stream;
    while (next_request_ < stream.size() && stream[next_request_].arrival <= t + kTimeEps) {
        const TaskRequest& req = stream[next_request_++];
        const int first = static_cast<int>(dispatcher_.tasks().size());
        for (std::size_t k = 0; k < req.tasks.size(); ++k) {
            const Task& task = req.tasks[k];
            trace_.write(Record(t, "task")
                             .integer("task", first + static_cast<int>(k))
                             .str("event", "arrival")
                             .integer("start", task.start)
                             .integer("end", task.end)
                             .num("deadline", task.deadline));
        }
        summary_.tasks_arrived += req.tasks.size();

        std::vector<RobotSnapshot> snaps;
        for (const auto& r : robots_) {
            if (r.faulted || r.last_location < 0) continue;
            RobotSnapshot snap;
            snap.id = r.id;
            snap.location = r.last_location;
            snap.ready_time = t;
            if (!r.actions.empty()) {
                snap.in_progress = r.actions.front();
                const Vec2 target = s_.roads.location(r.actions.front().location);
                const Vec2 from = s_.roads.location(r.last_location);
                const double full = (target - from).norm();
                if (r.last_location != r.actions.front().location && full > 0.0) {
                    const double frac = std::min(1.0, (target - r.state.position()).norm() / full);
                    snap.ready_time = t + frac * s_.travel_times(r.last_location, r.actions.front().location);
                }
            }
            snaps.push_back(std::move(snap));
        }

        Allocation alloc;
        try {
            alloc = dispatcher_.dispatch(req, snaps, t);
        } catch (const std::exception& e) {
            trace_.write(Record(t, "fault").integer("robot", -1).str("module", "tasking").str("message", e.what()));
            ++summary_.faults;
            continue;
        }
        for (std::size_t k = 0; k < req.tasks.size(); ++k) {
            const int id = first + static_cast<int>(k);
            const auto& rec = dispatcher_.tasks()[static_cast<std::size_t>(id)];
            if (rec.state == TaskState::unassigned) {
                trace_.write(Record(t, "task").integer("task", id).str("event", "unassigned"));
                ++summary_.tasks_unassigned;
            } else {
                trace_.write(Record(t, "task").integer("task", id).str("event", "assigned").integer("robot", rec.robot));
            }
        }
        for (const auto& snap : snaps) {
            RobotRuntime& r = robot(snap.id);
            auto it = alloc.sequences.find(snap.id);
            std::vector<Action> seq = it == alloc.sequences.end() ? std::vector<Action>{} : it->second;
            if (seq == r.actions) continue;
            r.actions = std::move(seq);
            try {
                refresh_plan(r);
            } catch (const std::exception& e) {
                fault(r, "navigation", e.what(), t);
            }
        }
    }
}

void Simulation::phase_queues(double t) {
    std::set<int> changed;
    std::map<int, std::optional<int>> holders_before;
    for (const auto& [room, q] : queues_) holders_before[room] = q.holder;

    for (auto& r : robots_) {
        const Vec2 pos = r.state.position();
        for (auto& [room, q] : queues_) {
            if (!q.index_of(r.id)) continue;
            const RoomSpec* spec = s_.room_at(room);
            const Vec2 room_pos = s_.roads.location(room);
            const bool inside = point_in_polygon(spec->polygon, pos);
            const bool wanted = !r.faulted && has_action_at(r, room);
            if (q.holder == r.id) {
                if (inside) {
                    r.visited_rooms.insert(room);
                    continue;
                }
                // A holder that entered must clear the door area before the next robot is let in;
                // one that never entered and no longer needs the room lets go at once.
                const bool visited = r.visited_rooms.contains(room);
                if (!wanted || visited) {
                    if (release(q, r.id, pos, room_pos, s_.release_distance, !wanted && !visited)) {
                        r.visited_rooms.erase(room);
                        queue_event(q, "release", r.id, t);
                        changed.insert(room);
                    }
                }
            } else if (!wanted) {
                withdraw(q, r.id);
                queue_event(q, "withdraw", r.id, t);
                changed.insert(room);
            }
        }

        if (r.faulted) continue;
        // Only the next stop may be requested; passing a room's queue en route does not count.
        auto hold = std::find_if(r.plan.pending.begin(), r.plan.pending.end(),
                                 [](const Waypoint& w) { return w.hold || w.location >= 0; });
        if (hold == r.plan.pending.end() || !hold->hold) {
            r.queue_blocked = false;
            continue;
        }
        RoomQueue& q = queues_.at(hold->queue_room);
        if (q.index_of(r.id)) continue;
        const Vec2 room_pos = s_.roads.location(q.room_id);
        const double reach = s_.request_factor * (q.slots.back() - room_pos).norm();
        if ((pos - room_pos).norm() > reach) continue;
        if (auto idx = request_slot(q, r.id)) {
            queue_event(q, "request", r.id, t);
            changed.insert(q.room_id);
            r.queue_blocked = false;
        } else {
            if (!r.queue_blocked) queue_event(q, "full", r.id, t);
            r.queue_blocked = true;
        }
    }

    for (int room : changed) {
        const RoomQueue& q = queues_.at(room);
        if (q.holder && q.holder != holders_before[room]) queue_event(q, "grant", *q.holder, t);
        for (int id : std::vector<int>(q.occupants)) {
            try {
                refresh_plan(robot(id));
            } catch (const std::exception& e) {
                fault(robot(id), "navigation", e.what(), t);
            }
        }
    }
}

void Simulation::phase_plan(double t) {
    for (auto& r : robots_) {
        if (r.faulted || r.plan.pending.empty()) {
            r.has_path = false;
            continue;
        }
        const Waypoint& front = r.plan.pending.front();
        const Vec2 goal = front.position;
        std::optional<Vec2> next;
        if (front.location < 0 && !front.hold && r.plan.pending.size() > 1) next = r.plan.pending[1].position;

        const bool goal_changed = !r.has_path || !same_point(goal, r.path_goal) || next.has_value() != r.path_next.has_value() ||
                                  (next && !same_point(*next, *r.path_next));
        const bool stale = t - r.last_plan_time >= s_.sim.replan_period - kTimeEps;
        if (!goal_changed && !stale) continue;

        try {
            Path p = plan(s_.costmap, r.state.position(), goal, s_.planner);
            p.points.back() = goal;
            if (next) {
                try {
                    Path tail = plan(s_.costmap, goal, *next, s_.planner);
                    tail.points.back() = *next;
                    p.points.insert(p.points.end(), tail.points.begin() + 1, tail.points.end());
                    p.cells.insert(p.cells.end(), tail.cells.begin() + 1, tail.cells.end());
                    p.total_cost += tail.total_cost;
                } catch (const Error&) {
                    // the tail is only a smoothing aid
                }
            }
            r.path = std::move(p);
            r.has_path = true;
            r.path_goal = goal;
            r.path_next = next;
            r.last_plan_time = t;
            trace_.write(Record(t, "plan")
                             .integer("robot", r.id)
                             .point("goal", goal)
                             .num("cost", r.path.total_cost)
                             .points("points", r.path.points));
        } catch (const std::exception& e) {
            fault(r, "planner", e.what(), t);
        }
    }
}

void Simulation::phase_control(double t) {
    std::map<int, Vec2> positions;
    std::map<int, RobotState> states;
    std::set<int> active_ids;
    for (const auto& r : robots_) {
        positions[r.id] = r.state.position();
        states[r.id] = r.state;
        if (active(r)) active_ids.insert(r.id);
    }
    // A leader that cannot move while others wait in its cluster yields leadership for a while.
    for (auto& r : robots_) {
        bool led = false;
        for (const auto& c : partition_.clusters)
            if (c.leader == r.id && c.members.size() > 1) led = true;
        const bool stalled = led && active_ids.count(r.id) && std::abs(r.state.v) < kStallSpeed;
        if (!stalled) {
            r.stall_since = -1.0;
        } else if (r.stall_since < 0.0) {
            r.stall_since = t;
        } else if (t - r.stall_since >= kStallTime) {
            r.demoted_until = t + kDemotionTime;
            r.stall_since = -1.0;
        }
    }
    auto demoted = [&](int id) { return robots_[static_cast<std::size_t>(id)].demoted_until > t; };
    partition_ = elect_leaders(form_clusters(neighbor_sets(positions, s_.d_neighbor)), active_ids, [&](int a, int b) {
        return std::pair(demoted(a), a) < std::pair(demoted(b), b);
    });

    for (auto& r : robots_) {
        r.clearance = s_.grid.clearance(r.state.position(), kClearanceSearch);
        try {
            r.obstacles = raycast(s_.grid, {r.state.position(), r.state.theta}, r.params.n_rays, r.params.sensor_range);
        } catch (const std::exception& e) {
            r.obstacles = {};
            fault(r, "world", e.what(), t);
        }
    }

    std::vector<std::size_t> order(partition_.clusters.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto key = [&](std::size_t i) {
        const Cluster& c = partition_.clusters[i];
        return std::make_pair(c.leader < 0 ? 1 : 0, c.leader < 0 ? c.members.front() : c.leader);
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

    for (std::size_t ci : order) {
        const Cluster& c = partition_.clusters[ci];
        std::optional<double> solve_time;
        QpStatus status = QpStatus::feasible;
        const bool lead = c.leader >= 0 && active(robot(c.leader));

        if (c.members.size() == 1 && !lead) {
            RobotRuntime& r = robot(c.members.front());
            r.control = clamp_control(nominal_stop(r.state, r.params), r.params);
            r.qp_status = QpStatus::feasible;
        } else {
            const int param_owner = c.leader >= 0 ? c.leader : c.members.front();
            const ControllerParams& params = robot(param_owner).params;
            std::map<int, Control> nominals;
            std::map<int, ObstaclePointSet> obstacles;
            for (int id : c.members) {
                RobotRuntime& m = robot(id);
                if (lead && id == c.leader)
                    nominals[id] = nominal_leader(m.state, lookahead_point(m.path, m.state.position(), m.params.delta), m.params);
                else
                    nominals[id] = nominal_stop(m.state, m.params);
                obstacles[id] = m.obstacles;
            }
            const auto t0 = Clock::now();
            ControlDecision d = c.members.size() == 1
                                    ? solve_single_qp(states.at(c.leader), nominals.at(c.leader), obstacles.at(c.leader),
                                                      humans_, params, c.leader)
                                    : solve_cluster_qp(c.members, states, nominals, obstacles, humans_, params);
            solve_time = seconds_since(t0);
            status = d.qp_status;
            bool constrained = false;
            for (int id : c.members) {
                const Control& u = d.controls.at(id);
                const Control& n = nominals.at(id);
                if (u.a != n.a || u.omega != n.omega) constrained = true;
                RobotRuntime& m = robot(id);
                m.control = u;
                m.qp_status = d.qp_status;
            }
            summary_.solves.push_back({c.members.size(), *solve_time, constrained});
        }
        summary_.robot_ticks += c.members.size();
        if (status == QpStatus::infeasible_fallback) summary_.fallback_robot_ticks += c.members.size();

        Record rec(t, "cluster");
        rec.ints("members", c.members).integer("leader", c.leader).ints("active", c.active_members);
        rec.flag("all_stop", c.all_stop).flag("solved", solve_time.has_value()).str("qp", to_string(status));
        if (opts_.timing && solve_time) rec.num("solve_time", *solve_time);
        trace_.write(rec);
    }
    write_states(t, true);
}

void Simulation::write_states(double t, bool with_control) {
    if (!trace_.enabled()) return;
    std::map<int, int> cluster_of;
    for (std::size_t i = 0; i < partition_.clusters.size(); ++i)
        for (int id : partition_.clusters[i].members) cluster_of[id] = static_cast<int>(i);
    for (auto& r : robots_) {
        Record rec(t, "state");
        rec.integer("robot", r.id).num("x", r.state.x).num("y", r.state.y).num("theta", r.state.theta).num("v", r.state.v);
        if (with_control) rec.num("a", r.control.a).num("omega", r.control.omega);
        rec.str("qp", to_string(r.qp_status));
        rec.integer("cluster", cluster_of.contains(r.id) ? cluster_of[r.id] : -1);
        bool leader = false;
        for (const auto& c : partition_.clusters)
            if (c.leader == r.id) leader = true;
        rec.flag("leader", leader).flag("active", active(r)).flag("faulted", r.faulted);
        rec.num("clearance", r.clearance);
        rec.points("obstacles", r.obstacles.points());
        trace_.write(rec);
    }
    for (std::size_t i = 0; i < humans_.size(); ++i) {
        const auto& h = humans_[i];
        trace_.write(Record(t, "human")
                         .integer("human", static_cast<int>(i))
                         .num("x", h.position.x())
                         .num("y", h.position.y())
                         .num("vx", h.velocity.x())
                         .num("vy", h.velocity.y()));
    }
}

void Simulation::phase_integrate() {
    const double dt = s_.sim.tick_dt;
    for (int k = 0; k < substeps_; ++k) {
        for (auto& r : robots_) r.state = step_robot(r.state, r.control, dt, r.params.v_max);
        if (!humans_.empty()) {
            std::vector<RobotState> rs;
            for (const auto& r : robots_) rs.push_back(r.state);
            std::vector<HumanState> next = humans_;
            for (std::size_t i = 0; i < humans_.size(); ++i) {
                std::vector<HumanState> others;
                for (std::size_t j = 0; j < humans_.size(); ++j)
                    if (j != i) others.push_back(humans_[j]);
                ObstaclePointSet obs;
                if (s_.grid.geometry().contains(humans_[i].position))
                    obs = raycast(s_.grid, {humans_[i].position, 0.0}, kHumanRays, kHumanSensorRange);
                next[i] = step_human(humans_[i], rs, others, obs, dt, s_.human);
            }
            humans_ = std::move(next);
        }
        ++summary_.physics_ticks;
        for (const auto& room : s_.rooms) {
            int inside = 0;
            for (const auto& r : robots_)
                if (point_in_polygon(room.polygon, r.state.position())) ++inside;
            if (inside > 1) {
                ++summary_.room_violation_ticks;
                break;
            }
        }
    }
}

void Simulation::complete_actions(RobotRuntime& r, int location, double t) {
    bool any = false;
    while (!r.actions.empty() && r.actions.front().location == location) {
        const Action a = r.actions.front();
        r.actions.erase(r.actions.begin());
        any = true;
        auto& rec = dispatcher_.tasks()[static_cast<std::size_t>(a.task)];
        trace_.write(Record(t, "task")
                         .integer("task", a.task)
                         .str("event", kind_name(a.kind))
                         .integer("robot", r.id)
                         .integer("location", location));
        if (a.kind == ActionKind::pickup) {
            rec.state = TaskState::picked;
            rec.pickup_time = t;
        } else {
            rec.state = TaskState::completed;
            rec.completion_time = t;
            ++summary_.tasks_completed;
            const bool hit = t <= rec.task.deadline + kTimeEps;
            trace_.write(Record(t, "task")
                             .integer("task", a.task)
                             .str("event", hit ? "deadline_hit" : "deadline_miss")
                             .integer("robot", r.id)
                             .num("deadline", rec.task.deadline));
        }
    }
    if (any) {
        dispatcher_.add_feedback({r.id, location, t});
        refresh_plan(r);
    }
}

void Simulation::phase_bookkeeping(double t) {
    for (auto& r : robots_) {
        if (r.faulted) continue;
        try {
            auto& pending = r.plan.pending;
            while (!pending.empty()) {
                const Waypoint w = pending.front();
                const Vec2 pos = r.state.position();
                const double d = (pos - w.position).norm();
                if (w.hold) break;
                if (w.location >= 0) {
                    if (d > r.params.d_arrive) break;
                    r.plan = record_arrival(std::move(r.plan), w, t);
                    r.last_location = w.location;
                    pending.erase(pending.begin());
                    trace_.write(Record(t, "arrival")
                                     .integer("robot", r.id)
                                     .integer("location", w.location)
                                     .num("x", pos.x())
                                     .num("y", pos.y()));
                    auto q = queues_.find(w.location);
                    if (q != queues_.end() && q->second.holder == r.id) r.visited_rooms.insert(w.location);
                    complete_actions(r, w.location, t);
                    continue;
                }
                const double tol = std::max(r.params.d_arrive, r.params.delta);
                bool passed = false;
                if (pending.size() > 1) {
                    const Vec2 ahead = pending[1].position - w.position;
                    passed = (pos - w.position).dot(ahead) > 0.0 && d < 2.0 * tol;
                }
                if (d > tol && !passed) break;
                pending.erase(pending.begin());
            }
            // Idle robots leave rooms, and keep clearing the door until their hold is released.
            if (pending.empty() && r.actions.empty()) {
                for (const auto& room : s_.rooms) {
                    const bool inside = point_in_polygon(room.polygon, r.state.position());
                    const bool holding = queues_.at(room.location).holder == r.id;
                    if (inside || holding) {
                        pending.push_back({room.exit});
                        break;
                    }
                }
            }
        } catch (const std::exception& e) {
            fault(r, "navigation", e.what(), t);
        }
    }

    for (auto& rec : dispatcher_.tasks()) {
        const bool open = rec.state == TaskState::pending || rec.state == TaskState::assigned || rec.state == TaskState::picked;
        if (!open || t <= rec.task.deadline + kTimeEps) continue;
        rec.state = TaskState::missed;
        ++summary_.tasks_missed;
        trace_.write(Record(t, "task")
                         .integer("task", rec.id)
                         .str("event", "deadline_miss")
                         .integer("robot", rec.robot)
                         .num("deadline", rec.task.deadline));
        if (rec.robot >= 0) {
            RobotRuntime& r = robot(rec.robot);
            const auto before = r.actions.size();
            std::erase_if(r.actions, [&](const Action& a) { return a.task == rec.id; });
            if (r.actions.size() != before) {
                try {
                    refresh_plan(r);
                } catch (const std::exception& e) {
                    fault(r, "navigation", e.what(), t);
                }
            }
        }
    }
}

void Simulation::write_header() {
    Record h("header");
    h.str("format", kTraceFormat).integer("version", kTraceVersion).str("scenario", s_.name).str("digest", s_.digest);
    h.integer("seed", static_cast<long long>(s_.sim.seed));
    h.num("duration", duration_).num("control_period", s_.sim.control_period).num("tick_dt", s_.sim.tick_dt);
    h.str("map", s_.map_path);
    h.num("r_robot", s_.controller.r_robot).num("r_safe", s_.controller.r_safe);

    std::string robots = "[";
    for (std::size_t i = 0; i < robots_.size(); ++i) {
        if (i) robots += ',';
        robots += Record("robot")
                      .integer("id", robots_[i].id)
                      .str("name", robots_[i].name)
                      .num("r_robot", robots_[i].params.r_robot)
                      .num("r_safe", robots_[i].params.r_safe)
                      .line();
    }
    h.raw("robots", robots + "]");
    h.points("locations", s_.roads.locations());
    std::string rooms = "[";
    for (std::size_t i = 0; i < s_.rooms.size(); ++i) {
        if (i) rooms += ',';
        rooms += Record("room")
                     .integer("location", s_.rooms[i].location)
                     .points("polygon", s_.rooms[i].polygon)
                     .points("slots", s_.rooms[i].slots)
                     .point("exit", s_.rooms[i].exit)
                     .line();
    }
    h.raw("rooms", rooms + "]");
    h.integer("humans", static_cast<long long>(humans_.size()));
    h.flag("timing", opts_.timing);
    trace_.write(h);
}

void Simulation::finish() {
    finished_ = true;
    summary_.sim_seconds = duration_;
    if (duration_ > 0.0) {
        write_states(duration_, true);
        Record end(duration_, "end");
        end.integer("ticks", static_cast<long long>(summary_.control_ticks));
        if (opts_.timing) end.num("wall_time", seconds_since(wall_start_));
        trace_.write(end);
    }
    summary_.wall_seconds = seconds_since(wall_start_);
}

bool Simulation::step() {
    if (finished_) return false;
    if (!header_written_) {
        header_written_ = true;
        wall_start_ = Clock::now();
        write_header();
    }
    if (tick_ >= total_ticks_) {
        finish();
        return false;
    }
    const double t = now();
    phase_dispatch(t);
    phase_queues(t);
    phase_plan(t);
    phase_control(t);
    phase_integrate();
    ++tick_;
    ++summary_.control_ticks;
    phase_bookkeeping(now());
    return true;
}

void Simulation::run_to_end() {
    while (step()) {
    }
}

RunSummary run(const Scenario& scenario, std::ostream& trace, const RunOptions& options) {
    Simulation sim(scenario, options, &trace);
    sim.run_to_end();
    trace.flush();
    if (!trace) throw IoError("failed to write trace");
    return sim.summary();
}

std::string run_to_string(const Scenario& scenario, const RunOptions& options, RunSummary* summary) {
    std::ostringstream out;
    RunSummary s = run(scenario, out, options);
    if (summary) *summary = std::move(s);
    return out.str();
}

namespace {

// Seconds from pickup to dropoff for one synthetic i->j delivery.
double timed_leg(const Scenario& base, int from, int to, double heading, double timeout) {
    Scenario s = base;
    RobotSpec r = base.robots.empty() ? RobotSpec{} : base.robots.front();
    if (base.robots.empty()) r.params = base.controller;
    r.id = 0;
    r.name = "probe";
    r.start = base.roads.location(from);
    r.heading = wrap_angle(heading);
    s.robots = {r};
    s.humans.clear();
    s.task_stream = {TaskRequest{0.0, {Task{from, to, 1e9}}}};
    s.sim.duration = timeout;

    Simulation sim(s, {}, nullptr);
    while (sim.step()) {
        const auto& rec = sim.dispatcher().tasks();
        if (!rec.empty() && rec.front().state == TaskState::completed)
            return rec.front().completion_time - rec.front().pickup_time;
        if (sim.summary().faults > 0) break;
    }
    throw ScenarioError("no traversable route between locations " + std::to_string(from) + " and " + std::to_string(to));
}

}  // namespace

TravelTimeGraph collect_travel_times(const Scenario& scenario, int reps, Aggregation agg, double timeout) {
    if (reps < 1) throw InvalidInput("collect_travel_times: reps must be >= 1");
    const std::size_t n = scenario.roads.size();
    if (n < 2) throw ScenarioError("collect_travel_times: need at least two locations");
    // The probe's own travel-time graph only feeds its dispatcher; any valid graph works.
    Scenario base = scenario;
    std::vector<std::vector<double>> unit(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) unit[i][i] = 0.0;
    base.travel_times = TravelTimeGraph(unit);

    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            std::vector<double> samples;
            for (int k = 0; k < reps; ++k) {
                const double heading = 2.0 * std::numbers::pi * k / reps;
                samples.push_back(timed_leg(base, static_cast<int>(i), static_cast<int>(j), heading, timeout));
                samples.push_back(timed_leg(base, static_cast<int>(j), static_cast<int>(i), heading, timeout));
            }
            double v = 0.0;
            if (agg == Aggregation::max) {
                v = *std::max_element(samples.begin(), samples.end());
            } else {
                for (double x : samples) v += x;
                v /= static_cast<double>(samples.size());
            }
            v = std::max(v, 1e-3);
            w[i][j] = w[j][i] = v;
        }
    }
    return TravelTimeGraph(std::move(w));
}

}  // namespace mrta
