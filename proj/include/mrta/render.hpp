#pragma once

#include <string>
#include <vector>

#include "mrta/trace.hpp"
#include "mrta/world.hpp"

namespace mrta {

struct RenderStyle {
    double scale = 0.05;  // meters per pixel
    std::vector<std::string> robot_colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                             "#e377c2", "#17becf"};
    bool paths = true;
    bool obstacles = true;
    bool clusters = true;
    bool queues = true;
    bool rooms = true;
    bool humans = true;
};

// JSON object with any of: scale, colors (list), paths, obstacles, clusters,
// queues, rooms, humans. Throws InvalidInput for scale <= 0 or wrong types.
RenderStyle parse_render_style(const std::string& json_text);

struct Frame {
    double t = 0.0;
    std::string svg;
};

// One frame per sample time k*every for k = 0.. while k*every <= duration,
// showing the latest recorded state at or before each sample.
std::vector<Frame> render_frames(const TraceData& trace, const OccupancyGrid& grid, const RenderStyle& style,
                                 double every);

// Writes frame_00000.svg, frame_00001.svg, ... and returns the file count.
std::size_t write_frames(const std::vector<Frame>& frames, const std::string& out_dir);

}  // namespace mrta
