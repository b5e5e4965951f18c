#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mrta/trace.hpp"

namespace mrta {

struct SolveStats {
    std::size_t solves = 0;  // cluster records of this size that ran a QP
    std::size_t timed = 0;   // of which carried a solve_time
    double mean = 0.0;       // NaN when nothing was timed
    double max = 0.0;
};

// Every value is recomputable from the trace alone. NaN marks "not available".
struct MetricsReport {
    double sim_time = 0.0;
    std::size_t tasks_arrived = 0;
    std::size_t tasks_completed = 0;
    std::size_t tasks_missed = 0;
    std::size_t tasks_unassigned = 0;
    std::size_t deadline_hits = 0;
    double mean_task_latency = 0.0;  // arrival to drop-off, completed tasks only

    std::map<std::size_t, SolveStats> qp_time_by_size;

    double min_robot_distance = 0.0;     // center to center, over all state snapshots
    double min_obstacle_distance = 0.0;  // robot center to nearest occupied cell
    std::size_t robot_ticks = 0;
    double fallback_fraction = 0.0;
    double real_time_factor = 0.0;

    std::size_t queue_grants = 0;
    double mean_queue_wait = 0.0;
    double max_queue_wait = 0.0;
    std::size_t faults = 0;
};

MetricsReport compute_metrics(const TraceData& trace);

// Fixed-order (name, value) rows shared by the text and CSV formats.
std::vector<std::pair<std::string, double>> metric_rows(const MetricsReport& m);
// Same digits as the trace, with NaN written as NA.
std::string format_metric(double v);
std::string format_report_text(const MetricsReport& m);
std::string format_report_csv(const MetricsReport& m);

}  // namespace mrta
