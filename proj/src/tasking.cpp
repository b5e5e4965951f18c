#include "mrta/tasking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mrta/errors.hpp"

namespace mrta {

TravelTimeGraph::TravelTimeGraph(std::vector<std::vector<double>> weights) : w_(std::move(weights)) {
    const std::size_t n = w_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (w_[i].size() != n) throw InvalidInput("travel-time matrix is not square");
        for (std::size_t j = 0; j < n; ++j) {
            const double v = w_[i][j];
            if (!std::isfinite(v)) throw InvalidInput("travel-time matrix has a non-finite entry");
            if (i == j && v != 0.0) throw InvalidInput("travel-time diagonal must be zero");
            if (i != j && !(v > 0.0)) throw InvalidInput("travel-time off-diagonal entries must be positive");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (w_[i][j] != w_[j][i])
                throw InvalidInput("travel-time matrix is not symmetric at (" + std::to_string(i) + ", " +
                                   std::to_string(j) + ")");
}

TravelTimeGraph parse_travel_time_graph(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<int> ids;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream ls(line);
        if (ids.empty()) {
            std::string tag;
            ls >> tag;
            if (tag != "locations") throw ParseError(line_no, "expected header 'locations <id> ...'");
            int id;
            while (ls >> id) ids.push_back(id);
            if (!ls.eof()) throw ParseError(line_no, "non-integer location id in header");
            if (ids.empty()) throw ParseError(line_no, "header lists no locations");
            for (std::size_t k = 0; k < ids.size(); ++k)
                if (ids[k] != static_cast<int>(k)) throw ParseError(line_no, "location ids must be 0..n-1 in order");
            continue;
        }
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof()) throw ParseError(line_no, "non-numeric travel time");
        if (row.size() != ids.size())
            throw ParseError(line_no, "row has " + std::to_string(row.size()) + " entries, expected " +
                                          std::to_string(ids.size()));
        rows.push_back(std::move(row));
    }
    if (ids.empty()) throw ParseError(0, "empty travel-time file");
    if (rows.size() != ids.size()) throw ParseError(line_no, "expected " + std::to_string(ids.size()) + " matrix rows");
    try {
        return TravelTimeGraph(std::move(rows));
    } catch (const InvalidInput& e) {
        throw ParseError(0, e.what());
    }
}

std::string format_travel_time_graph(const TravelTimeGraph& g) {
    std::ostringstream out;
    out.precision(9);
    out << "locations";
    for (std::size_t i = 0; i < g.size(); ++i) out << ' ' << i;
    out << '\n';
    for (const auto& row : g.weights()) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
        out << '\n';
    }
    return out.str();
}

std::vector<TaskRequest> parse_task_stream(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, std::string("task stream is not valid JSON: ") + e.what());
    }
    if (doc.is_object()) doc = nlohmann::json::array({doc});
    if (!doc.is_array()) throw ParseError(0, "task stream must be a list of requests");

    std::vector<TaskRequest> out;
    for (std::size_t r = 0; r < doc.size(); ++r) {
        const auto& rec = doc[r];
        const std::string where = "request " + std::to_string(r);
        if (!rec.is_object() || !rec.contains("arrival") || !rec.contains("tasks") || !rec["arrival"].is_number() ||
            !rec["tasks"].is_array())
            throw ParseError(0, where + ": expected {\"arrival\": <seconds>, \"tasks\": [...]}");
        TaskRequest req;
        req.arrival = rec["arrival"].get<double>();
        for (std::size_t k = 0; k < rec["tasks"].size(); ++k) {
            const auto& t = rec["tasks"][k];
            const std::string tw = where + " task " + std::to_string(k);
            if (!t.is_object() || !t.contains("start") || !t.contains("end") || !t.contains("deadline") ||
                !t["start"].is_number_integer() || !t["end"].is_number_integer() || !t["deadline"].is_number())
                throw ParseError(0, tw + ": expected {\"start\": <int>, \"end\": <int>, \"deadline\": <seconds>}");
            Task task{t["start"].get<int>(), t["end"].get<int>(), t["deadline"].get<double>()};
            if (task.start == task.end) throw ParseError(0, tw + ": start and end must differ");
            if (!(task.deadline > req.arrival)) throw ParseError(0, tw + ": deadline must be after arrival");
            req.tasks.push_back(task);
        }
        out.push_back(std::move(req));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.arrival < b.arrival; });
    return out;
}

std::vector<int> Allocation::locations(int robot) const {
    std::vector<int> out;
    auto it = sequences.find(robot);
    if (it == sequences.end()) return out;
    for (const auto& a : it->second) out.push_back(a.location);
    return out;
}

const char* to_string(TaskState s) {
    switch (s) {
        case TaskState::pending: return "pending";
        case TaskState::assigned: return "assigned";
        case TaskState::picked: return "picked";
        case TaskState::completed: return "completed";
        case TaskState::missed: return "missed";
        case TaskState::unassigned: return "unassigned";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(const std::vector<RobotSlot>& robots, const std::vector<Task>& tasks, const TravelTimeGraph& g) {
    for (const auto& r : robots) {
        if (!g.has(r.location)) throw InvalidInput("robot " + std::to_string(r.id) + " is at unknown location " +
                                                   std::to_string(r.location));
        for (int k : r.carrying)
            if (k < 0 || static_cast<std::size_t>(k) >= tasks.size())
                throw InvalidInput("robot " + std::to_string(r.id) + " carries unknown task " + std::to_string(k));
    }
    for (std::size_t k = 0; k < tasks.size(); ++k)
        if (!g.has(tasks[k].start) || !g.has(tasks[k].end))
            throw InvalidInput("task " + std::to_string(k) + " references an unknown location");
}

std::vector<RobotSlot> slots_from_map(const std::map<int, int>& robots, double now) {
    std::vector<RobotSlot> out;
    for (const auto& [id, loc] : robots) out.push_back({id, loc, now, {}});
    return out;
}

// Finish-time table of one robot over every subset of tasks it could serve.
struct RobotTable {
    std::vector<double> finish;                  // by task bitmask; +inf when infeasible
    std::vector<std::vector<Action>> sequence;   // realizing sequence per bitmask
    std::vector<std::vector<double>> times;
};

RobotTable robot_table(const RobotSlot& robot, const std::vector<Task>& tasks, const std::vector<int>& owner,
                       const TravelTimeGraph& g) {
    const int nt = static_cast<int>(tasks.size());
    const int nodes = 2 * nt + 1;  // 0 = start, 1+k = pickup k, 1+nt+k = dropoff k
    std::vector<int> pow3(static_cast<std::size_t>(nt) + 1, 1);
    for (int k = 1; k <= nt; ++k) pow3[static_cast<std::size_t>(k)] = pow3[static_cast<std::size_t>(k) - 1] * 3;
    const int states = pow3[static_cast<std::size_t>(nt)];

    auto node_loc = [&](int node) {
        if (node == 0) return robot.location;
        if (node <= nt) return tasks[static_cast<std::size_t>(node - 1)].start;
        return tasks[static_cast<std::size_t>(node - 1 - nt)].end;
    };
    auto digit = [&](int code, int k) { return (code / pow3[static_cast<std::size_t>(k)]) % 3; };

    int initial = 0;
    for (int k : robot.carrying) initial += pow3[static_cast<std::size_t>(k)];

    const auto cells = static_cast<std::size_t>(states) * static_cast<std::size_t>(nodes);
    std::vector<double> time(cells, kInf);
    std::vector<int> parent(cells, -1);
    auto at = [&](int code, int node) {
        return static_cast<std::size_t>(code) * static_cast<std::size_t>(nodes) + static_cast<std::size_t>(node);
    };
    time[at(initial, 0)] = robot.ready_time;

    // Transitions raise the digit sum by one, so process states by digit sum.
    std::vector<int> order(static_cast<std::size_t>(states));
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> digit_sum(static_cast<std::size_t>(states), 0);
    for (int c = 0; c < states; ++c)
        for (int k = 0; k < nt; ++k) digit_sum[static_cast<std::size_t>(c)] += digit(c, k);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return digit_sum[static_cast<std::size_t>(a)] < digit_sum[static_cast<std::size_t>(b)];
    });

    for (int code : order) {
        for (int node = 0; node < nodes; ++node) {
            const double t = time[at(code, node)];
            if (t == kInf) continue;
            const int here = node_loc(node);
            for (int k = 0; k < nt; ++k) {
                const Task& task = tasks[static_cast<std::size_t>(k)];
                const int d = digit(code, k);
                if (d == 0) {
                    if (owner[static_cast<std::size_t>(k)] >= 0) continue;  // carried by someone
                    const double tp = t + g(here, task.start);
                    if (tp > task.deadline) continue;
                    const int next = code + pow3[static_cast<std::size_t>(k)];
                    auto& slot = time[at(next, 1 + k)];
                    if (tp < slot) {
                        slot = tp;
                        parent[at(next, 1 + k)] = static_cast<int>(at(code, node));
                    }
                } else if (d == 1) {
                    const double td = t + g(here, task.end);
                    if (td > task.deadline) continue;
                    const int next = code + pow3[static_cast<std::size_t>(k)];
                    auto& slot = time[at(next, 1 + nt + k)];
                    if (td < slot) {
                        slot = td;
                        parent[at(next, 1 + nt + k)] = static_cast<int>(at(code, node));
                    }
                }
            }
        }
    }

    RobotTable table;
    const std::size_t subsets = std::size_t{1} << nt;
    table.finish.assign(subsets, kInf);
    table.sequence.assign(subsets, {});
    table.times.assign(subsets, {});
    for (std::size_t mask = 0; mask < subsets; ++mask) {
        bool ok = true;
        for (int k : robot.carrying)
            if (!(mask >> k & 1)) ok = false;
        if (!ok) continue;
        int code = 0;
        for (int k = 0; k < nt; ++k)
            if (mask >> k & 1) code += 2 * pow3[static_cast<std::size_t>(k)];
        if (mask == 0) {
            table.finish[0] = robot.ready_time;
            continue;
        }
        int best_node = -1;
        double best = kInf;
        for (int node = 1; node < nodes; ++node) {
            if (time[at(code, node)] < best) {
                best = time[at(code, node)];
                best_node = node;
            }
        }
        if (best_node < 0) continue;
        table.finish[mask] = best;
        std::vector<Action> seq;
        std::vector<double> ts;
        for (std::size_t cell = at(code, best_node); cell != at(initial, 0);
             cell = static_cast<std::size_t>(parent[cell])) {
            const int node = static_cast<int>(cell % static_cast<std::size_t>(nodes));
            const bool pick = node <= nt;
            const int k = pick ? node - 1 : node - 1 - nt;
            seq.push_back({k, pick ? ActionKind::pickup : ActionKind::dropoff, node_loc(node)});
            ts.push_back(time[cell]);
        }
        std::reverse(seq.begin(), seq.end());
        std::reverse(ts.begin(), ts.end());
        table.sequence[mask] = std::move(seq);
        table.times[mask] = std::move(ts);
    }
    return table;
}

struct Score {
    double makespan = kInf;
    double total = kInf;
    bool operator<(const Score& o) const { return makespan != o.makespan ? makespan < o.makespan : total < o.total; }
};

}  // namespace

Allocation solve_exact(const std::vector<RobotSlot>& robots_in, const std::vector<Task>& tasks,
                       const TravelTimeGraph& g, double now) {
    check_inputs(robots_in, tasks, g);
    if (tasks.size() > kExactMaxTasks || robots_in.size() > kExactMaxRobots)
        throw InvalidInput("solve_exact handles at most " + std::to_string(kExactMaxTasks) + " tasks and " +
                           std::to_string(kExactMaxRobots) + " robots; use solve_greedy for larger instances");

    std::vector<RobotSlot> robots = robots_in;
    std::sort(robots.begin(), robots.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<int> owner(tasks.size(), -1);
    for (std::size_t r = 0; r < robots.size(); ++r)
        for (int k : robots[r].carrying) owner[static_cast<std::size_t>(k)] = static_cast<int>(r);

    std::vector<RobotTable> tables;
    for (std::size_t r = 0; r < robots.size(); ++r) {
        std::vector<int> others = owner;
        for (int k : robots[r].carrying) others[static_cast<std::size_t>(k)] = -1;
        tables.push_back(robot_table(robots[r], tasks, others, g));
    }

    // Partition tasks among robots: best[r][mask] over the first r robots.
    const std::size_t full = (std::size_t{1} << tasks.size()) - 1;
    const std::size_t subsets = full + 1;
    std::vector<std::vector<Score>> best(robots.size() + 1, std::vector<Score>(subsets));
    std::vector<std::vector<std::size_t>> choice(robots.size() + 1, std::vector<std::size_t>(subsets, 0));
    best[0][0] = {now, 0.0};
    for (std::size_t r = 0; r < robots.size(); ++r) {
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            const Score base = best[r][mask];
            if (base.makespan == kInf) continue;
            const std::size_t rest = full & ~mask;
            // Enumerate subsets of `rest` in ascending order.
            for (std::size_t s = 0;; s = (s - rest) & rest) {
                const double f = tables[r].finish[s];
                if (f != kInf) {
                    Score cand = base;
                    if (s != 0) {
                        cand.makespan = std::max(cand.makespan, f);
                        cand.total += f;
                    }
                    if (cand < best[r + 1][mask | s]) {
                        best[r + 1][mask | s] = cand;
                        choice[r + 1][mask | s] = s;
                    }
                }
                if (s == rest) break;
            }
        }
    }

    Allocation out;
    const Score final_score = best[robots.size()][full];
    if (robots.empty() && tasks.empty()) {
        out.makespan = now;
        return out;
    }
    if (final_score.makespan == kInf) {
        out.feasible = false;
        return out;
    }
    out.makespan = final_score.makespan;
    std::size_t mask = full;
    for (std::size_t r = robots.size(); r-- > 0;) {
        const std::size_t s = choice[r + 1][mask];
        out.sequences[robots[r].id] = tables[r].sequence[s];
        out.predicted_times[robots[r].id] = tables[r].times[s];
        mask &= ~s;
    }
    return out;
}

Allocation solve_exact(const std::map<int, int>& robots, const std::vector<Task>& tasks, const TravelTimeGraph& g,
                       double now) {
    return solve_exact(slots_from_map(robots, now), tasks, g, now);
}

Allocation solve_greedy(const std::vector<RobotSlot>& robots_in, const std::vector<Task>& tasks,
                        const TravelTimeGraph& g, double now) {
    check_inputs(robots_in, tasks, g);
    std::vector<RobotSlot> robots = robots_in;
    std::sort(robots.begin(), robots.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    auto by_deadline = [&](int a, int b) {
        return tasks[static_cast<std::size_t>(a)].deadline < tasks[static_cast<std::size_t>(b)].deadline;
    };

    Allocation out;
    out.makespan = now;
    std::vector<int> loc(robots.size());
    std::vector<double> t(robots.size());
    std::vector<char> carried(tasks.size(), 0);
    for (std::size_t r = 0; r < robots.size(); ++r) {
        const int id = robots[r].id;
        loc[r] = robots[r].location;
        t[r] = robots[r].ready_time;
        out.sequences[id];
        out.predicted_times[id];
        std::vector<int> carry = robots[r].carrying;
        std::stable_sort(carry.begin(), carry.end(), by_deadline);
        for (int k : carry) {
            carried[static_cast<std::size_t>(k)] = 1;
            const Task& task = tasks[static_cast<std::size_t>(k)];
            t[r] += g(loc[r], task.end);
            loc[r] = task.end;
            out.sequences[id].push_back({k, ActionKind::dropoff, task.end});
            out.predicted_times[id].push_back(t[r]);
            out.makespan = std::max(out.makespan, t[r]);
        }
    }

    std::vector<int> order;
    for (std::size_t k = 0; k < tasks.size(); ++k)
        if (!carried[k]) order.push_back(static_cast<int>(k));
    std::stable_sort(order.begin(), order.end(), by_deadline);

    for (int k : order) {
        const Task& task = tasks[static_cast<std::size_t>(k)];
        int pick = -1;
        double best_done = kInf;
        for (std::size_t r = 0; r < robots.size(); ++r) {
            const double done = t[r] + g(loc[r], task.start) + g(task.start, task.end);
            if (done <= task.deadline && done < best_done) {
                best_done = done;
                pick = static_cast<int>(r);
            }
        }
        if (pick < 0) {
            out.unassigned.push_back(k);
            continue;
        }
        const auto r = static_cast<std::size_t>(pick);
        const int id = robots[r].id;
        const double tp = t[r] + g(loc[r], task.start);
        out.sequences[id].push_back({k, ActionKind::pickup, task.start});
        out.predicted_times[id].push_back(tp);
        out.sequences[id].push_back({k, ActionKind::dropoff, task.end});
        out.predicted_times[id].push_back(best_done);
        t[r] = best_done;
        loc[r] = task.end;
        out.makespan = std::max(out.makespan, best_done);
    }
    return out;
}

Allocation solve_greedy(const std::map<int, int>& robots, const std::vector<Task>& tasks, const TravelTimeGraph& g,
                        double now) {
    return solve_greedy(slots_from_map(robots, now), tasks, g, now);
}

std::optional<std::string> validate_allocation(const Allocation& a, const std::vector<Task>& tasks,
                                               const std::vector<RobotSlot>& robots) {
    std::vector<int> picked_by(tasks.size(), -1);
    std::vector<int> dropped_by(tasks.size(), -1);
    std::map<int, const RobotSlot*> slot_of;
    for (const auto& r : robots) slot_of[r.id] = &r;
    for (const auto& [id, seq] : a.sequences) {
        std::vector<char> holding(tasks.size(), 0);
        if (auto it = slot_of.find(id); it != slot_of.end())
            for (int k : it->second->carrying) holding[static_cast<std::size_t>(k)] = 1;
        for (const auto& act : seq) {
            if (act.task < 0 || static_cast<std::size_t>(act.task) >= tasks.size())
                return "robot " + std::to_string(id) + " visits unknown task " + std::to_string(act.task);
            const auto k = static_cast<std::size_t>(act.task);
            if (act.kind == ActionKind::pickup) {
                if (picked_by[k] >= 0) return "task " + std::to_string(k) + " picked up twice";
                picked_by[k] = id;
                holding[k] = 1;
                if (act.location != tasks[k].start) return "task " + std::to_string(k) + " pickup at wrong location";
            } else {
                if (!holding[k]) return "task " + std::to_string(k) + " dropped before pickup";
                if (dropped_by[k] >= 0) return "task " + std::to_string(k) + " dropped twice";
                dropped_by[k] = id;
                holding[k] = 0;
                if (act.location != tasks[k].end) return "task " + std::to_string(k) + " drop-off at wrong location";
            }
        }
        for (std::size_t k = 0; k < tasks.size(); ++k)
            if (holding[k]) return "task " + std::to_string(k) + " never dropped";
    }
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const bool listed = std::find(a.unassigned.begin(), a.unassigned.end(), static_cast<int>(k)) != a.unassigned.end();
        if (a.feasible && dropped_by[k] < 0 && !listed) return "task " + std::to_string(k) + " silently dropped";
    }
    return std::nullopt;
}

const Allocation& Dispatcher::dispatch(const TaskRequest& incoming, const std::vector<RobotSnapshot>& robots,
                                       double now) {
    if (incoming.tasks.empty()) return current_;
    for (const auto& t : incoming.tasks) {
        if (!graph_.has(t.start) || !graph_.has(t.end))
            throw InvalidInput("task references location outside the travel-time graph");
        TaskRecord rec;
        rec.id = static_cast<int>(tasks_.size());
        rec.task = t;
        rec.arrival = incoming.arrival;
        tasks_.push_back(rec);
    }

    // Local solver problem: open tasks plus carried tasks.
    std::vector<Task> local;
    std::vector<int> global_of;
    std::map<int, int> local_of;
    auto add_local = [&](int gid) {
        local_of[gid] = static_cast<int>(local.size());
        local.push_back(tasks_[static_cast<std::size_t>(gid)].task);
        global_of.push_back(gid);
        return local_of[gid];
    };

    std::vector<RobotSlot> slots;
    std::map<int, std::optional<Action>> kept;
    for (const auto& snap : robots) {
        RobotSlot slot{snap.id, snap.location, std::max(now, snap.ready_time), {}};
        std::optional<Action> prefix;
        if (snap.in_progress) {
            const Action& ip = *snap.in_progress;
            const auto& rec = tasks_[static_cast<std::size_t>(ip.task)];
            const bool live = rec.state == TaskState::assigned || rec.state == TaskState::picked;
            if (live) {
                prefix = ip;
                slot.location = ip.location;
            }
        }
        kept[snap.id] = prefix;
        slots.push_back(slot);
    }
    // Carried tasks: picked up already, or being picked up on the kept leg.
    for (std::size_t r = 0; r < robots.size(); ++r) {
        for (const auto& rec : tasks_) {
            const bool carried = rec.state == TaskState::picked && rec.robot == robots[r].id;
            const auto& pre = kept[robots[r].id];
            const bool committed_pickup = pre && pre->kind == ActionKind::pickup && pre->task == rec.id;
            const bool committed_drop = pre && pre->kind == ActionKind::dropoff && pre->task == rec.id;
            if ((carried || committed_pickup) && !committed_drop) slots[r].carrying.push_back(add_local(rec.id));
        }
    }
    for (const auto& rec : tasks_) {
        if (local_of.contains(rec.id)) continue;
        bool committed = false;
        for (const auto& [id, pre] : kept)
            if (pre && pre->task == rec.id) committed = true;
        if (committed) continue;
        if (rec.state == TaskState::pending || rec.state == TaskState::assigned) add_local(rec.id);
    }

    Allocation sol;
    const bool exact_ok = local.size() <= kExactMaxTasks && slots.size() <= kExactMaxRobots;
    if (preferred_ == SolverKind::exact && exact_ok) sol = solve_exact(slots, local, graph_, now);
    if (preferred_ == SolverKind::greedy || !exact_ok || !sol.feasible) sol = solve_greedy(slots, local, graph_, now);

    Allocation out;
    out.feasible = sol.feasible;
    out.makespan = sol.makespan;
    for (const auto& slot : slots) {
        auto& seq = out.sequences[slot.id];
        auto& times = out.predicted_times[slot.id];
        if (const auto& pre = kept[slot.id]) {
            seq.push_back(*pre);
            times.push_back(slot.ready_time);
        }
        for (std::size_t i = 0; i < sol.sequences[slot.id].size(); ++i) {
            Action a = sol.sequences[slot.id][i];
            a.task = global_of[static_cast<std::size_t>(a.task)];
            seq.push_back(a);
            times.push_back(sol.predicted_times[slot.id][i]);
        }
        for (const auto& a : seq) {
            auto& rec = tasks_[static_cast<std::size_t>(a.task)];
            rec.robot = slot.id;
            if (rec.state == TaskState::pending) rec.state = TaskState::assigned;
        }
    }
    for (int k : sol.unassigned) {
        const int gid = global_of[static_cast<std::size_t>(k)];
        auto& rec = tasks_[static_cast<std::size_t>(gid)];
        if (rec.state == TaskState::pending || rec.state == TaskState::assigned) {
            rec.state = TaskState::unassigned;
            rec.robot = -1;
            out.unassigned.push_back(gid);
        }
    }
    current_ = std::move(out);
    return current_;
}

}  // namespace mrta
