#include "mrta/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "mrta/errors.hpp"

namespace mrta {

namespace {

constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

struct OpenEntry {
    double f;
    double g;
    std::size_t index;
};

// Pops the smallest f; ties go to the larger g, then the smaller cell index.
struct OpenOrder {
    bool operator()(const OpenEntry& a, const OpenEntry& b) const {
        if (a.f != b.f) return a.f > b.f;
        if (a.g != b.g) return a.g < b.g;
        return a.index > b.index;
    }
};

Cell endpoint_cell(const Costmap& costmap, const Vec2& p, const char* which) {
    auto c = costmap.geometry().world_to_cell(p);
    if (!c) throw InvalidInput(std::string(which) + " is outside the map");
    if (costmap.lethal(*c)) throw InvalidInput(std::string(which) + " lies on a lethal cell");
    return *c;
}

}  // namespace

double edge_weight(const Costmap& costmap, const Cell& a, const Cell& b, double cost_weight) {
    const bool diagonal = a.x != b.x && a.y != b.y;
    const double length = diagonal ? std::numbers::sqrt2 : 1.0;
    const double avg = (static_cast<double>(costmap.cost(a)) + static_cast<double>(costmap.cost(b))) / 2.0;
    return length * (1.0 + cost_weight * avg / 254.0);
}

Path plan(const Costmap& costmap, const Vec2& start, const Vec2& goal, const PlannerParams& params) {
    const auto& g = costmap.geometry();
    const Cell s = endpoint_cell(costmap, start, "start");
    const Cell t = endpoint_cell(costmap, goal, "goal");

    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = g.size();
    std::vector<double> best(n, inf);
    std::vector<std::size_t> parent(n, n);

    // Scaled just under 1 so float rounding in path sums never makes it overestimate.
    auto heuristic = [&](const Cell& c) { return std::hypot(c.x - t.x, c.y - t.y) * (1.0 - 1e-10); };

    std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
    const std::size_t si = g.index(s);
    const std::size_t ti = g.index(t);
    best[si] = 0.0;
    open.push({heuristic(s), 0.0, si});

    while (!open.empty()) {
        const OpenEntry cur = open.top();
        open.pop();
        // Stale entries are skipped; a closed cell whose g improved is reopened.
        if (cur.g > best[cur.index]) continue;
        if (cur.index == ti) break;
        const Cell c{static_cast<int>(cur.index % static_cast<std::size_t>(g.width)),
                     static_cast<int>(cur.index / static_cast<std::size_t>(g.width))};
        for (int k = 0; k < 8; ++k) {
            const Cell nb{c.x + kDx[k], c.y + kDy[k]};
            if (!g.contains(nb) || costmap.lethal(nb)) continue;
            if (k >= 4 && (costmap.lethal({c.x + kDx[k], c.y}) || costmap.lethal({c.x, c.y + kDy[k]}))) continue;
            const double cand = cur.g + edge_weight(costmap, c, nb, params.cost_weight);
            const std::size_t ni = g.index(nb);
            if (cand < best[ni]) {
                best[ni] = cand;
                parent[ni] = cur.index;
                open.push({cand + heuristic(nb), cand, ni});
            }
        }
    }

    if (best[ti] == inf) throw Unreachable("no path between start and goal");

    Path path;
    path.total_cost = best[ti];
    for (std::size_t i = ti;; i = parent[i]) {
        const Cell c{static_cast<int>(i % static_cast<std::size_t>(g.width)),
                     static_cast<int>(i / static_cast<std::size_t>(g.width))};
        path.cells.push_back(c);
        if (i == si) break;
    }
    std::reverse(path.cells.begin(), path.cells.end());
    path.points.reserve(path.cells.size());
    for (const auto& c : path.cells) path.points.push_back(g.cell_center(c));
    return path;
}

std::size_t lookahead_index(const Path& path, const Vec2& position, double delta) {
    if (path.points.empty()) throw InvalidInput("lookahead on an empty path");
    std::size_t nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.points.size(); ++i) {
        const double d = (path.points[i] - position).norm();
        if (d < nearest_d) {
            nearest_d = d;
            nearest = i;
        }
    }
    for (std::size_t i = nearest; i < path.points.size(); ++i)
        if ((path.points[i] - position).norm() >= delta) return i;
    return path.points.size() - 1;
}

Vec2 lookahead_point(const Path& path, const Vec2& position, double delta) {
    return path.points[lookahead_index(path, position, delta)];
}

}  // namespace mrta
