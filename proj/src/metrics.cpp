#include "mrta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mrta {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

MetricsReport compute_metrics(const TraceData& trace) {
    MetricsReport m;
    m.sim_time = trace.header.value("duration", 0.0);
    m.mean_task_latency = kNaN;
    m.min_robot_distance = kNaN;
    m.min_obstacle_distance = kNaN;
    m.fallback_fraction = kNaN;
    m.real_time_factor = kNaN;
    m.mean_queue_wait = kNaN;
    m.max_queue_wait = kNaN;

    std::map<int, double> arrival_time;
    double latency_sum = 0.0;
    std::size_t fallback = 0;
    std::map<std::pair<int, int>, double> requested;  // (room, robot) -> request time
    double wait_sum = 0.0;

    // State snapshots grouped by time stamp for the pairwise scan.
    std::vector<std::pair<double, std::pair<double, double>>> group;
    double group_t = kNaN;
    auto flush = [&] {
        for (std::size_t i = 0; i < group.size(); ++i)
            for (std::size_t j = i + 1; j < group.size(); ++j) {
                const double d = std::hypot(group[i].second.first - group[j].second.first,
                                            group[i].second.second - group[j].second.second);
                if (std::isnan(m.min_robot_distance) || d < m.min_robot_distance) m.min_robot_distance = d;
            }
        group.clear();
    };

    for (const auto& e : trace.events) {
        const double t = e["t"].get<double>();
        const std::string type = e.value("type", "");
        if (type == "state") {
            if (t != group_t) {
                flush();
                group_t = t;
            }
            group.push_back({t, {e["x"].get<double>(), e["y"].get<double>()}});
            if (e.contains("clearance") && e["clearance"].is_number()) {
                const double c = e["clearance"].get<double>();
                if (std::isnan(m.min_obstacle_distance) || c < m.min_obstacle_distance) m.min_obstacle_distance = c;
            }
        } else if (type == "cluster") {
            const std::size_t n = e["members"].size();
            m.robot_ticks += n;
            if (e.value("qp", "") == "infeasible-fallback") fallback += n;
            if (e.value("solved", false)) {
                auto& s = m.qp_time_by_size[n];
                ++s.solves;
                if (e.contains("solve_time")) {
                    const double d = e["solve_time"].get<double>();
                    s.mean += d;
                    s.max = s.timed == 0 ? d : std::max(s.max, d);
                    ++s.timed;
                }
            }
        } else if (type == "task") {
            const std::string ev = e.value("event", "");
            const int id = e.value("task", -1);
            if (ev == "arrival") {
                ++m.tasks_arrived;
                arrival_time[id] = t;
            } else if (ev == "dropoff") {
                ++m.tasks_completed;
                latency_sum += t - arrival_time[id];
            } else if (ev == "deadline_hit") {
                ++m.deadline_hits;
            } else if (ev == "deadline_miss") {
                ++m.tasks_missed;
            } else if (ev == "unassigned") {
                ++m.tasks_unassigned;
            }
        } else if (type == "queue") {
            const std::string ev = e.value("event", "");
            const std::pair<int, int> key{e.value("room", -1), e.value("robot", -1)};
            if (ev == "request") {
                requested[key] = t;
            } else if (ev == "grant") {
                auto it = requested.find(key);
                if (it != requested.end()) {
                    const double w = t - it->second;
                    ++m.queue_grants;
                    wait_sum += w;
                    m.max_queue_wait = m.queue_grants == 1 ? w : std::max(m.max_queue_wait, w);
                    requested.erase(it);
                }
            }
        } else if (type == "fault") {
            ++m.faults;
        } else if (type == "end") {
            if (e.contains("wall_time") && e["wall_time"].is_number() && e["wall_time"].get<double>() > 0)
                m.real_time_factor = t / e["wall_time"].get<double>();
        }
    }
    flush();

    if (m.tasks_completed > 0) m.mean_task_latency = latency_sum / static_cast<double>(m.tasks_completed);
    if (m.robot_ticks > 0) m.fallback_fraction = static_cast<double>(fallback) / static_cast<double>(m.robot_ticks);
    if (m.queue_grants > 0) m.mean_queue_wait = wait_sum / static_cast<double>(m.queue_grants);
    for (auto& [size, s] : m.qp_time_by_size) {
        if (s.timed > 0) s.mean /= static_cast<double>(s.timed);
        else s.mean = s.max = kNaN;
    }
    return m;
}

std::vector<std::pair<std::string, double>> metric_rows(const MetricsReport& m) {
    auto n = [](std::size_t v) { return static_cast<double>(v); };
    std::vector<std::pair<std::string, double>> rows = {
        {"sim_time_s", m.sim_time},
        {"tasks_arrived", n(m.tasks_arrived)},
        {"tasks_completed", n(m.tasks_completed)},
        {"tasks_missed", n(m.tasks_missed)},
        {"tasks_unassigned", n(m.tasks_unassigned)},
        {"deadline_hits", n(m.deadline_hits)},
        {"mean_task_latency_s", m.mean_task_latency},
    };
    for (const auto& [size, s] : m.qp_time_by_size) {
        const std::string suffix = ".agents" + std::to_string(size);
        rows.emplace_back("qp_solves" + suffix, n(s.solves));
        rows.emplace_back("qp_time_mean_s" + suffix, s.mean);
        rows.emplace_back("qp_time_max_s" + suffix, s.max);
    }
    rows.insert(rows.end(), {
                                {"min_robot_distance_m", m.min_robot_distance},
                                {"min_obstacle_distance_m", m.min_obstacle_distance},
                                {"robot_ticks", n(m.robot_ticks)},
                                {"fallback_fraction", m.fallback_fraction},
                                {"real_time_factor", m.real_time_factor},
                                {"queue_grants", n(m.queue_grants)},
                                {"mean_queue_wait_s", m.mean_queue_wait},
                                {"max_queue_wait_s", m.max_queue_wait},
                                {"faults", n(m.faults)},
                            });
    return rows;
}

std::string format_metric(double v) {
    if (std::isnan(v)) return "NA";
    return format_number(v);
}

std::string format_report_text(const MetricsReport& m) {
    const auto rows = metric_rows(m);
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.first.size());
    std::string out;
    for (const auto& [name, value] : rows) {
        out += name;
        out.append(width + 2 - name.size(), ' ');
        out += format_metric(value);
        out += '\n';
    }
    return out;
}

std::string format_report_csv(const MetricsReport& m) {
    std::string out = "metric,value\n";
    for (const auto& [name, value] : metric_rows(m)) out += name + "," + format_metric(value) + "\n";
    return out;
}

}  // namespace mrta
