#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mrta {

// Fully connected symmetric travel-time graph; location ids are 0..n-1.
class TravelTimeGraph {
public:
    TravelTimeGraph() = default;
    // Throws InvalidInput unless the matrix is square, symmetric, zero on the
    // diagonal and strictly positive elsewhere.
    explicit TravelTimeGraph(std::vector<std::vector<double>> weights);

    std::size_t size() const { return w_.size(); }
    double operator()(int i, int j) const { return w_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    bool has(int id) const { return id >= 0 && static_cast<std::size_t>(id) < w_.size(); }
    const std::vector<std::vector<double>>& weights() const { return w_; }

private:
    std::vector<std::vector<double>> w_;
};

// Text format: a header line `locations <id0> <id1> ...` followed by one row
// of seconds per location.
TravelTimeGraph parse_travel_time_graph(const std::string& text);
std::string format_travel_time_graph(const TravelTimeGraph& g);

struct Task {
    int start = 0;
    int end = 0;
    double deadline = 0.0;
};

struct TaskRequest {
    double arrival = 0.0;
    std::vector<Task> tasks;
};

// Parses a task stream: a JSON list of {"arrival": s, "tasks": [{"start", "end", "deadline"}]}.
// A single request object is also accepted.
std::vector<TaskRequest> parse_task_stream(const std::string& text);

enum class ActionKind { pickup, dropoff };

struct Action {
    int task = -1;  // index into the solver's task list
    ActionKind kind = ActionKind::pickup;
    int location = -1;
    friend bool operator==(const Action&, const Action&) = default;
};

struct RobotSlot {
    int id = 0;
    int location = 0;
    double ready_time = 0.0;       // when the robot is free at `location`; defaults to now
    std::vector<int> carrying;     // tasks already picked up, must be delivered by this robot
};

struct Allocation {
    bool feasible = true;
    std::map<int, std::vector<Action>> sequences;
    std::map<int, std::vector<double>> predicted_times;  // arrival time per action
    std::vector<int> unassigned;                          // task indices nobody can serve in time
    double makespan = 0.0;

    // Location-id view of a robot's sequence.
    std::vector<int> locations(int robot) const;
};

inline constexpr std::size_t kExactMaxTasks = 8;
inline constexpr std::size_t kExactMaxRobots = 6;

// Exact minimum-makespan allocation under hard deadlines. Among equal
// makespans the smaller sum of per-robot finish times wins. Returns
// feasible=false when no deadline-respecting schedule exists.
Allocation solve_exact(const std::vector<RobotSlot>& robots, const std::vector<Task>& tasks, const TravelTimeGraph& g,
                       double now);
Allocation solve_exact(const std::map<int, int>& robots, const std::vector<Task>& tasks, const TravelTimeGraph& g,
                       double now);

// Earliest-deadline-first insertion at the end of the robot sequence that
// finishes the task soonest; tasks that cannot meet their deadline are
// reported in `unassigned`.
Allocation solve_greedy(const std::vector<RobotSlot>& robots, const std::vector<Task>& tasks, const TravelTimeGraph& g,
                        double now);
Allocation solve_greedy(const std::map<int, int>& robots, const std::vector<Task>& tasks, const TravelTimeGraph& g,
                        double now);

// Checks start-before-end and single assignment; returns a description of
// the first violation, or nullopt.
std::optional<std::string> validate_allocation(const Allocation& a, const std::vector<Task>& tasks,
                                               const std::vector<RobotSlot>& robots);

enum class TaskState { pending, assigned, picked, completed, missed, unassigned };
const char* to_string(TaskState s);

struct TaskRecord {
    int id = 0;
    Task task;
    double arrival = 0.0;
    TaskState state = TaskState::pending;
    int robot = -1;
    double pickup_time = -1.0;
    double completion_time = -1.0;
};

struct FeedbackRecord {
    int robot = -1;
    int location = -1;
    double time = 0.0;
};

struct RobotSnapshot {
    int id = 0;
    int location = 0;  // committed or last visited location
    std::optional<Action> in_progress;  // leg currently being driven, kept first
    double ready_time = 0.0;
};

enum class SolverKind { exact, greedy };

// Owns the task table. Every incoming request triggers a re-solve over all
// incomplete tasks; a robot's in-progress leg is preserved as the first
// element of its new sequence.
class Dispatcher {
public:
    Dispatcher(TravelTimeGraph graph, SolverKind preferred = SolverKind::exact)
        : graph_(std::move(graph)), preferred_(preferred) {}

    // Returns the per-robot action lists, with Action::task holding global task ids.
    const Allocation& dispatch(const TaskRequest& incoming, const std::vector<RobotSnapshot>& robots, double now);

    void add_feedback(const FeedbackRecord& r) { feedback_.push_back(r); }
    const std::vector<FeedbackRecord>& feedback() const { return feedback_; }

    std::vector<TaskRecord>& tasks() { return tasks_; }
    const std::vector<TaskRecord>& tasks() const { return tasks_; }
    const Allocation& current() const { return current_; }
    const TravelTimeGraph& graph() const { return graph_; }

private:
    TravelTimeGraph graph_;
    SolverKind preferred_;
    std::vector<TaskRecord> tasks_;
    std::vector<FeedbackRecord> feedback_;
    Allocation current_;
};

}  // namespace mrta
