#include "mrta/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mrta/errors.hpp"

namespace mrta {

bool GridGeometry::contains(const Vec2& p) const { return world_to_cell(p).has_value(); }

std::optional<Cell> GridGeometry::world_to_cell(const Vec2& p) const {
    const double gx = (p.x() - origin.x()) / resolution;
    const double gy = (p.y() - origin.y()) / resolution;
    if (!(gx >= 0.0 && gy >= 0.0 && gx < width && gy < height)) return std::nullopt;
    Cell c{static_cast<int>(std::floor(gx)), static_cast<int>(std::floor(gy))};
    if (!contains(c)) return std::nullopt;
    return c;
}

Vec2 GridGeometry::cell_center(const Cell& c) const {
    return {origin.x() + (c.x + 0.5) * resolution, origin.y() + (c.y + 0.5) * resolution};
}

OccupancyGrid::OccupancyGrid(GridGeometry geometry, std::vector<std::uint8_t> occupied)
    : geom_(std::move(geometry)), occ_(std::move(occupied)) {
    if (geom_.width <= 0 || geom_.height <= 0) throw InvalidInput("grid dimensions must be positive");
    if (!(geom_.resolution > 0.0)) throw InvalidInput("grid resolution must be positive");
    if (occ_.size() != geom_.size()) throw InvalidInput("grid cell count does not match dimensions");
}

bool OccupancyGrid::occupied_at(const Vec2& p) const {
    auto c = geom_.world_to_cell(p);
    return c && occupied(*c);
}

std::size_t OccupancyGrid::occupied_count() const {
    return static_cast<std::size_t>(std::count_if(occ_.begin(), occ_.end(), [](auto v) { return v != 0; }));
}

double OccupancyGrid::clearance(const Vec2& p, double max_search) const {
    const double res = geom_.resolution;
    const int span = static_cast<int>(std::ceil(max_search / res)) + 1;
    const int cx = static_cast<int>(std::floor((p.x() - geom_.origin.x()) / res));
    const int cy = static_cast<int>(std::floor((p.y() - geom_.origin.y()) / res));
    double best = max_search;
    for (int y = std::max(0, cy - span); y <= std::min(geom_.height - 1, cy + span); ++y) {
        for (int x = std::max(0, cx - span); x <= std::min(geom_.width - 1, cx + span); ++x) {
            if (!occupied({x, y})) continue;
            const double x0 = geom_.origin.x() + x * res;
            const double y0 = geom_.origin.y() + y * res;
            const double dx = std::max({x0 - p.x(), 0.0, p.x() - (x0 + res)});
            const double dy = std::max({y0 - p.y(), 0.0, p.y() - (y0 + res)});
            best = std::min(best, std::hypot(dx, dy));
        }
    }
    return best;
}

std::vector<Vec2> ObstaclePointSet::points() const {
    std::vector<Vec2> out;
    for (const auto& r : rays)
        if (r) out.push_back(*r);
    return out;
}

bool ObstaclePointSet::empty() const {
    return std::none_of(rays.begin(), rays.end(), [](const auto& r) { return r.has_value(); });
}

OccupancyGrid load_map(std::string_view text) {
    std::vector<std::string> lines;
    {
        std::string cur;
        for (char ch : text) {
            if (ch == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur.push_back(ch);
            }
        }
        if (!cur.empty()) lines.push_back(cur);
    }
    if (lines.empty()) throw ParseError(1, "empty map file");

    std::istringstream header(lines[0]);
    std::string tag;
    GridGeometry g;
    double ox = 0, oy = 0;
    if (!(header >> tag >> g.width >> g.height >> g.resolution >> ox >> oy) || tag != "map")
        throw ParseError(1, "expected 'map <width> <height> <resolution> <origin_x> <origin_y>'");
    std::string extra;
    if (header >> extra) throw ParseError(1, "trailing token '" + extra + "' in header");
    if (g.width <= 0 || g.height <= 0) throw ParseError(1, "width and height must be positive");
    if (!(g.resolution > 0.0) || !std::isfinite(g.resolution)) throw ParseError(1, "resolution must be positive");
    g.origin = {ox, oy};

    std::size_t last = lines.size();
    while (last > 1 && lines[last - 1].empty()) --last;
    const std::size_t rows = last - 1;
    if (rows != static_cast<std::size_t>(g.height))
        throw ParseError(static_cast<int>(last), "header declares " + std::to_string(g.height) + " rows but body has " +
                                                     std::to_string(rows));

    std::vector<std::uint8_t> occ(g.size(), 0);
    for (int r = 0; r < g.height; ++r) {
        const std::string& row = lines[static_cast<std::size_t>(r) + 1];
        const int line_no = r + 2;
        if (row.size() != static_cast<std::size_t>(g.width))
            throw ParseError(line_no, "row has " + std::to_string(row.size()) + " cells, expected " +
                                          std::to_string(g.width));
        const int y = g.height - 1 - r;
        for (int x = 0; x < g.width; ++x) {
            const char ch = row[static_cast<std::size_t>(x)];
            if (ch == '#')
                occ[g.index({x, y})] = 1;
            else if (ch != '.')
                throw ParseError(line_no, std::string("unknown map character '") + ch + "'");
        }
    }
    return OccupancyGrid(g, std::move(occ));
}

OccupancyGrid load_map_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open map file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_map(ss.str());
}

std::string format_map(const OccupancyGrid& grid) {
    const auto& g = grid.geometry();
    std::ostringstream out;
    out.precision(9);
    out << "map " << g.width << ' ' << g.height << ' ' << g.resolution << ' ' << g.origin.x() << ' ' << g.origin.y()
        << '\n';
    for (int y = g.height - 1; y >= 0; --y) {
        for (int x = 0; x < g.width; ++x) out << (grid.occupied({x, y}) ? '#' : '.');
        out << '\n';
    }
    return out.str();
}

Costmap inflate(const OccupancyGrid& grid, double inflation_radius, double cost_scale, double r_robot) {
    if (inflation_radius < 0.0) throw InvalidInput("inflation_radius must be non-negative");
    const auto& g = grid.geometry();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(g.size(), inf);
    const int span = static_cast<int>(std::floor(inflation_radius / g.resolution));

    // Stamp a disc around every occupied cell; exact for center-to-center distance.
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            if (!grid.occupied({x, y})) continue;
            for (int dy = -span; dy <= span; ++dy) {
                for (int dx = -span; dx <= span; ++dx) {
                    const Cell c{x + dx, y + dy};
                    if (!g.contains(c)) continue;
                    const double d = std::hypot(dx, dy) * g.resolution;
                    auto& slot = dist[g.index(c)];
                    slot = std::min(slot, d);
                }
            }
        }
    }

    std::vector<std::uint8_t> cost(g.size(), 0);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const Cell c{x, y};
            const std::size_t i = g.index(c);
            if (grid.occupied(c)) {
                cost[i] = kLethalCost;
            } else if (dist[i] <= inflation_radius) {
                const double v = std::clamp(254.0 * std::exp(-cost_scale * (dist[i] - r_robot)), 0.0, 254.0);
                cost[i] = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }
    return Costmap(g, std::move(cost));
}

namespace {

std::optional<Vec2> cast_one(const OccupancyGrid& grid, const Vec2& from, const Vec2& dir, double max_range) {
    const auto& g = grid.geometry();
    const double res = g.resolution;
    const double gx = (from.x() - g.origin.x()) / res;
    const double gy = (from.y() - g.origin.y()) / res;
    int cx = static_cast<int>(std::floor(gx));
    int cy = static_cast<int>(std::floor(gy));
    if (grid.occupied({cx, cy})) return from;

    const double inf = std::numeric_limits<double>::infinity();
    const int step_x = dir.x() > 0 ? 1 : (dir.x() < 0 ? -1 : 0);
    const int step_y = dir.y() > 0 ? 1 : (dir.y() < 0 ? -1 : 0);
    // Ray parameters are in meters along dir.
    const double delta_x = step_x != 0 ? res / std::abs(dir.x()) : inf;
    const double delta_y = step_y != 0 ? res / std::abs(dir.y()) : inf;
    double next_x = inf;
    double next_y = inf;
    if (step_x > 0) next_x = (cx + 1 - gx) * res / dir.x();
    if (step_x < 0) next_x = (gx - cx) * res / -dir.x();
    if (step_y > 0) next_y = (cy + 1 - gy) * res / dir.y();
    if (step_y < 0) next_y = (gy - cy) * res / -dir.y();

    while (true) {
        double t;
        if (next_x <= next_y) {
            t = next_x;
            cx += step_x;
            next_x += delta_x;
        } else {
            t = next_y;
            cy += step_y;
            next_y += delta_y;
        }
        if (t > max_range) return std::nullopt;
        const Cell c{cx, cy};
        if (!g.contains(c)) return std::nullopt;
        if (grid.occupied(c)) return Vec2(from + dir * t);
    }
}

}  // namespace

ObstaclePointSet raycast(const OccupancyGrid& grid, const Pose& pose, int n_rays, double max_range) {
    if (n_rays < 1) throw InvalidInput("n_rays must be at least 1");
    if (!grid.geometry().contains(pose.position)) throw InvalidInput("raycast pose is outside the map");
    ObstaclePointSet out;
    out.rays.reserve(static_cast<std::size_t>(n_rays));
    for (int k = 0; k < n_rays; ++k) {
        const double angle = pose.heading + 2.0 * std::numbers::pi * k / n_rays;
        out.rays.push_back(cast_one(grid, pose.position, heading_vector(angle), max_range));
    }
    return out;
}

}  // namespace mrta
