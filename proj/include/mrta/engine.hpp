#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mrta/coordination.hpp"
#include "mrta/scenario.hpp"
#include "mrta/trace.hpp"

namespace mrta {

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    // Adds wall-clock solve durations to the trace. Off by default so that
    // traces stay byte-identical across runs.
    bool timing = false;
    SolverKind solver = SolverKind::exact;
};

struct SolveSample {
    std::size_t cluster_size = 0;
    double seconds = 0.0;
    bool constrained = false;  // the nominal violated at least one constraint
};

struct RunSummary {
    double sim_seconds = 0.0;
    double wall_seconds = 0.0;
    std::size_t control_ticks = 0;
    std::size_t robot_ticks = 0;
    std::size_t fallback_robot_ticks = 0;
    std::size_t physics_ticks = 0;
    std::size_t room_violation_ticks = 0;  // physics ticks with two robots inside one room
    std::size_t faults = 0;
    std::size_t tasks_arrived = 0;
    std::size_t tasks_completed = 0;
    std::size_t tasks_missed = 0;
    std::size_t tasks_unassigned = 0;
    std::vector<SolveSample> solves;

    double real_time_factor() const { return wall_seconds > 0 ? sim_seconds / wall_seconds : 0.0; }
};

struct RobotRuntime {
    int id = 0;
    std::string name;
    ControllerParams params;
    RobotState state;
    Control control;
    QpStatus qp_status = QpStatus::feasible;

    std::vector<Action> actions;  // remaining allocated actions, global task ids
    WaypointPlan plan;
    int last_location = -1;

    Path path;
    bool has_path = false;
    Vec2 path_goal{0.0, 0.0};
    std::optional<Vec2> path_next;
    double last_plan_time = 0.0;

    bool faulted = false;
    bool queue_blocked = false;  // wants a slot but the queue is full
    std::set<int> visited_rooms;  // rooms entered while holding their queue
    double stall_since = -1.0;    // start of the current stalled spell as cluster leader
    double demoted_until = -1.0;  // leadership priority is dropped until then
    double clearance = 0.0;
    ObstaclePointSet obstacles;
};

// Deterministic tick loop. Every call to step() advances one control period
// through the fixed phase order: arrivals and dispatch, queues, planning,
// clustering, control, integration, bookkeeping.
class Simulation {
public:
    Simulation(const Scenario& scenario, RunOptions options = {}, std::ostream* trace = nullptr);

    void write_header();
    // Returns false once the run has reached its duration (the final
    // snapshot is written on that call).
    bool step();
    void run_to_end();

    double now() const { return static_cast<double>(tick_) * s_.sim.control_period; }
    double duration() const { return duration_; }
    const Scenario& scenario() const { return s_; }
    const std::vector<RobotRuntime>& robots() const { return robots_; }
    const std::vector<HumanState>& humans() const { return humans_; }
    const std::map<int, RoomQueue>& queues() const { return queues_; }
    const Dispatcher& dispatcher() const { return dispatcher_; }
    const ClusterPartition& clusters() const { return partition_; }
    const RunSummary& summary() const { return summary_; }

private:
    RobotRuntime& robot(int id) { return robots_[static_cast<std::size_t>(id)]; }
    bool active(const RobotRuntime& r) const;
    bool waiting_at_hold(const RobotRuntime& r) const;
    bool has_action_at(const RobotRuntime& r, int location) const;

    void fault(RobotRuntime& r, const std::string& module, const std::string& message, double t);
    void refresh_plan(RobotRuntime& r);
    void trim_first_leg(RobotRuntime& r);

    void phase_dispatch(double t);
    void phase_queues(double t);
    void phase_plan(double t);
    void phase_control(double t);
    void phase_integrate();
    void phase_bookkeeping(double t);
    void complete_actions(RobotRuntime& r, int location, double t);
    void queue_event(const RoomQueue& q, const char* event, int robot, double t);
    void write_states(double t, bool with_control);
    void finish();

    Scenario s_;
    RunOptions opts_;
    TraceWriter trace_;
    double duration_ = 0.0;
    std::size_t tick_ = 0;
    std::size_t total_ticks_ = 0;
    int substeps_ = 1;
    bool finished_ = false;
    bool header_written_ = false;
    std::chrono::steady_clock::time_point wall_start_{};

    std::vector<RobotRuntime> robots_;
    std::vector<HumanState> humans_;
    std::map<int, RoomQueue> queues_;
    Dispatcher dispatcher_;
    std::size_t next_request_ = 0;
    ClusterPartition partition_;
    RunSummary summary_;
};

// Runs a scenario to completion and writes the trace to `trace`.
RunSummary run(const Scenario& scenario, std::ostream& trace, const RunOptions& options = {});
// Same, returning the trace text.
std::string run_to_string(const Scenario& scenario, const RunOptions& options = {}, RunSummary* summary = nullptr);

enum class Aggregation { max, mean };

// Drives a single robot between every ordered pair of locations, `reps`
// times each with the initial heading rotated by 2*pi*k/reps, timing
// pickup-to-dropoff. Weights aggregate both directions and all repetitions.
// Throws ScenarioError naming the first pair that cannot be traversed.
TravelTimeGraph collect_travel_times(const Scenario& scenario, int reps = 1, Aggregation agg = Aggregation::max,
                                     double timeout = 600.0);

}  // namespace mrta
