#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrta/geometry.hpp"

namespace mrta {

struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

// Cell (0,0) is the lower-left cell; its lower-left corner sits at `origin`.
struct GridGeometry {
    int width = 0;
    int height = 0;
    double resolution = 1.0;
    Vec2 origin{0.0, 0.0};

    bool contains(const Cell& c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    bool contains(const Vec2& p) const;
    // Out-of-bounds points yield nullopt; indices are never wrapped or clamped.
    std::optional<Cell> world_to_cell(const Vec2& p) const;
    Vec2 cell_center(const Cell& c) const;
    std::size_t index(const Cell& c) const {
        return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.x);
    }
    std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
};

class OccupancyGrid {
public:
    OccupancyGrid() = default;
    OccupancyGrid(GridGeometry geometry, std::vector<std::uint8_t> occupied);

    const GridGeometry& geometry() const { return geom_; }
    int width() const { return geom_.width; }
    int height() const { return geom_.height; }
    double resolution() const { return geom_.resolution; }

    bool occupied(const Cell& c) const { return occ_[geom_.index(c)] != 0; }
    // Points outside the map count as free.
    bool occupied_at(const Vec2& p) const;
    std::size_t occupied_count() const;

    // Euclidean distance from p to the nearest occupied cell square, searching
    // no further than max_search meters. Returns max_search when nothing is found.
    double clearance(const Vec2& p, double max_search) const;

private:
    GridGeometry geom_;
    std::vector<std::uint8_t> occ_;
};

inline constexpr std::uint8_t kLethalCost = 255;

class Costmap {
public:
    Costmap() = default;
    Costmap(GridGeometry geometry, std::vector<std::uint8_t> cost)
        : geom_(std::move(geometry)), cost_(std::move(cost)) {}

    const GridGeometry& geometry() const { return geom_; }
    std::uint8_t cost(const Cell& c) const { return cost_[geom_.index(c)]; }
    bool lethal(const Cell& c) const { return cost(c) == kLethalCost; }
    const std::vector<std::uint8_t>& data() const { return cost_; }

private:
    GridGeometry geom_;
    std::vector<std::uint8_t> cost_;
};

// One optional hit per sensing ray, in ray order.
struct ObstaclePointSet {
    std::vector<std::optional<Vec2>> rays;

    std::vector<Vec2> points() const;
    bool empty() const;
};

// Parses the ASCII map format:
//   map <width> <height> <resolution> <origin_x> <origin_y>
// followed by `height` rows of `width` characters from {'#', '.'}; the first
// row is the top of the map.
OccupancyGrid load_map(std::string_view text);
OccupancyGrid load_map_file(const std::string& path);
std::string format_map(const OccupancyGrid& grid);

// Exponential inflation: occupied cells are lethal; free cells within
// inflation_radius of an occupied cell get 254*exp(-cost_scale*(d - r_robot))
// clamped to [0, 254], where d is the center-to-center distance in meters.
Costmap inflate(const OccupancyGrid& grid, double inflation_radius, double cost_scale, double r_robot);

// Casts n_rays evenly spaced rays starting at pose.heading. Each ray walks
// every grid cell it crosses and stops at the first occupied one; the hit is
// the entry point on that cell's boundary.
ObstaclePointSet raycast(const OccupancyGrid& grid, const Pose& pose, int n_rays, double max_range);

}  // namespace mrta
