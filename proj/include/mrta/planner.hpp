#pragma once

#include <vector>

#include "mrta/geometry.hpp"
#include "mrta/world.hpp"

namespace mrta {

struct Path {
    std::vector<Vec2> points;
    double total_cost = 0.0;
    // Cell sequence behind `points`; kept for oracle checks and rendering.
    std::vector<Cell> cells;
};

struct PlannerParams {
    double cost_weight = 3.0;
};

// Edge weight between 8-connected neighbors, in cell units:
// move_length * (1 + cost_weight * (cost(a) + cost(b)) / (2 * 254)).
double edge_weight(const Costmap& costmap, const Cell& a, const Cell& b, double cost_weight);

// Cost-aware A* over the costmap. Diagonal moves require both adjacent
// orthogonal cells to be non-lethal. Throws InvalidInput for bad endpoints
// and Unreachable when the goal cannot be connected.
Path plan(const Costmap& costmap, const Vec2& start, const Vec2& goal, const PlannerParams& params = {});

// First path point, scanning from the point nearest `position`, that is at
// least `delta` away from `position`; the final point when none qualifies.
Vec2 lookahead_point(const Path& path, const Vec2& position, double delta);
// Same rule, returning the index into path.points.
std::size_t lookahead_index(const Path& path, const Vec2& position, double delta);

}  // namespace mrta
