#include "mrta/render.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "mrta/errors.hpp"

namespace mrta {

using nlohmann::json;

RenderStyle parse_render_style(const std::string& json_text) {
    RenderStyle st;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("render style is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidInput("render style must be a JSON object");
    try {
        if (j.contains("scale")) st.scale = j["scale"].get<double>();
        if (j.contains("colors")) st.robot_colors = j["colors"].get<std::vector<std::string>>();
        if (j.contains("paths")) st.paths = j["paths"].get<bool>();
        if (j.contains("obstacles")) st.obstacles = j["obstacles"].get<bool>();
        if (j.contains("clusters")) st.clusters = j["clusters"].get<bool>();
        if (j.contains("queues")) st.queues = j["queues"].get<bool>();
        if (j.contains("rooms")) st.rooms = j["rooms"].get<bool>();
        if (j.contains("humans")) st.humans = j["humans"].get<bool>();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("render style: ") + e.what());
    }
    if (!(st.scale > 0.0) || !std::isfinite(st.scale)) throw InvalidInput("render style: scale must be > 0");
    if (st.robot_colors.empty()) throw InvalidInput("render style: colors must not be empty");
    return st;
}

namespace {

std::string f2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct View {
    const GridGeometry* g;
    double scale;
    double height_m;
    double px(double x) const { return (x - g->origin.x()) / scale; }
    double py(double y) const { return (height_m - (y - g->origin.y())) / scale; }
    std::string pt(double x, double y) const { return f2(px(x)) + "," + f2(py(y)); }
};

struct Snapshot {
    std::map<int, json> states;
    std::map<int, json> plans;
    std::map<int, json> queues;
    std::map<int, json> humans;
    std::vector<json> clusters;
    double cluster_t = -1.0;
};

void apply(Snapshot& s, const json& e) {
    const std::string type = e.value("type", "");
    if (type == "state") s.states[e["robot"].get<int>()] = e;
    else if (type == "plan") s.plans[e["robot"].get<int>()] = e;
    else if (type == "queue") s.queues[e["room"].get<int>()] = e;
    else if (type == "human") s.humans[e["human"].get<int>()] = e;
    else if (type == "cluster") {
        const double t = e["t"].get<double>();
        if (t != s.cluster_t) {
            s.clusters.clear();
            s.cluster_t = t;
        }
        s.clusters.push_back(e);
    }
}

std::string draw(const Snapshot& snap, const json& header, const OccupancyGrid& grid, const RenderStyle& st, double t) {
    const GridGeometry& g = grid.geometry();
    const View v{&g, st.scale, g.height * g.resolution};
    const double w_px = g.width * g.resolution / st.scale;
    const double h_px = g.height * g.resolution / st.scale;
    const double cell_px = g.resolution / st.scale;
    double r_robot = header.value("r_robot", 0.3);

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(w_px) + "\" height=\"" + f2(h_px) +
         "\" viewBox=\"0 0 " + f2(w_px) + " " + f2(h_px) + "\">\n";
    o += "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" + f2(w_px) + "\" height=\"" + f2(h_px) +
         "\" fill=\"#ffffff\"/>\n";

    // Occupied cells, merged into horizontal runs.
    for (int y = 0; y < g.height; ++y) {
        int x = 0;
        while (x < g.width) {
            if (!grid.occupied({x, y})) {
                ++x;
                continue;
            }
            int end = x;
            while (end < g.width && grid.occupied({end, y})) ++end;
            const double wx = g.origin.x() + x * g.resolution;
            const double wy = g.origin.y() + (y + 1) * g.resolution;
            o += "<rect class=\"cell\" x=\"" + f2(v.px(wx)) + "\" y=\"" + f2(v.py(wy)) + "\" width=\"" +
                 f2((end - x) * cell_px) + "\" height=\"" + f2(cell_px) + "\" fill=\"#404040\"/>\n";
            x = end;
        }
    }

    const json rooms = header.value("rooms", json::array());
    if (st.rooms) {
        for (const auto& room : rooms) {
            std::string pts;
            for (const auto& p : room["polygon"]) pts += (pts.empty() ? "" : " ") + v.pt(p[0], p[1]);
            o += "<polygon class=\"room\" points=\"" + pts + "\" fill=\"#fff3c4\" fill-opacity=\"0.5\" stroke=\"#c49a00\"/>\n";
        }
    }
    if (st.queues) {
        for (const auto& room : rooms) {
            const int id = room["location"].get<int>();
            std::size_t occupied = 0;
            if (auto it = snap.queues.find(id); it != snap.queues.end()) occupied = it->second["occupants"].size();
            for (std::size_t k = 0; k < room["slots"].size(); ++k) {
                const auto& p = room["slots"][k];
                o += "<rect class=\"queue-slot\" x=\"" + f2(v.px(p[0].get<double>()) - 0.2 / st.scale) + "\" y=\"" +
                     f2(v.py(p[1].get<double>()) - 0.2 / st.scale) + "\" width=\"" + f2(0.4 / st.scale) +
                     "\" height=\"" + f2(0.4 / st.scale) + "\" fill=\"" + (k < occupied ? "#c49a00" : "none") +
                     "\" stroke=\"#c49a00\"/>\n";
            }
        }
    }
    if (st.paths) {
        for (const auto& [id, plan] : snap.plans) {
            if (auto s = snap.states.find(id); s != snap.states.end() && !s->second.value("active", false)) continue;
            std::string pts;
            for (const auto& p : plan["points"]) pts += (pts.empty() ? "" : " ") + v.pt(p[0], p[1]);
            const std::string& color = st.robot_colors[static_cast<std::size_t>(id) % st.robot_colors.size()];
            o += "<polyline class=\"path\" points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
                 "\" stroke-dasharray=\"4 2\"/>\n";
        }
    }
    if (st.clusters) {
        for (const auto& c : snap.clusters) {
            const auto& members = c["members"];
            if (members.size() < 2) continue;
            int hub = c["leader"].get<int>();
            if (hub < 0) hub = members[0].get<int>();
            auto hs = snap.states.find(hub);
            if (hs == snap.states.end()) continue;
            for (const auto& m : members) {
                const int id = m.get<int>();
                auto ms = snap.states.find(id);
                if (id == hub || ms == snap.states.end()) continue;
                o += "<line class=\"cluster-link\" x1=\"" + f2(v.px(hs->second["x"])) + "\" y1=\"" +
                     f2(v.py(hs->second["y"])) + "\" x2=\"" + f2(v.px(ms->second["x"])) + "\" y2=\"" +
                     f2(v.py(ms->second["y"])) + "\" stroke=\"#7f7f7f\"/>\n";
            }
        }
    }
    if (st.obstacles) {
        for (const auto& [id, s] : snap.states)
            for (const auto& p : s.value("obstacles", json::array()))
                o += "<circle class=\"obstacle-point\" cx=\"" + f2(v.px(p[0])) + "\" cy=\"" + f2(v.py(p[1])) +
                     "\" r=\"2\" fill=\"#e41a1c\"/>\n";
    }
    if (st.humans) {
        for (const auto& [id, h] : snap.humans)
            o += "<circle class=\"human\" cx=\"" + f2(v.px(h["x"])) + "\" cy=\"" + f2(v.py(h["y"])) + "\" r=\"" +
                 f2(0.35 / st.scale) + "\" fill=\"#999999\"/>\n";
    }
    const json robots = header.value("robots", json::array());
    for (const auto& [id, s] : snap.states) {
        for (const auto& r : robots)
            if (r.value("id", -1) == id) r_robot = r.value("r_robot", r_robot);
        const double x = s["x"], y = s["y"], th = s["theta"];
        const std::string& color = st.robot_colors[static_cast<std::size_t>(id) % st.robot_colors.size()];
        o += "<circle class=\"robot\" cx=\"" + f2(v.px(x)) + "\" cy=\"" + f2(v.py(y)) + "\" r=\"" + f2(r_robot / st.scale) +
             "\" fill=\"" + color + "\" stroke=\"#000000\"/>\n";
        o += "<line class=\"heading\" x1=\"" + f2(v.px(x)) + "\" y1=\"" + f2(v.py(y)) + "\" x2=\"" +
             f2(v.px(x + r_robot * std::cos(th))) + "\" y2=\"" + f2(v.py(y + r_robot * std::sin(th))) +
             "\" stroke=\"#000000\"/>\n";
    }
    char label[64];
    std::snprintf(label, sizeof label, "t = %.2f s", t);
    o += "<text x=\"4\" y=\"14\" font-family=\"monospace\" font-size=\"12\">" + std::string(label) + "</text>\n";
    o += "</svg>\n";
    return o;
}

}  // namespace

std::vector<Frame> render_frames(const TraceData& trace, const OccupancyGrid& grid, const RenderStyle& style,
                                 double every) {
    if (!(every > 0.0)) throw InvalidInput("render: --every must be > 0");
    const double duration = trace.header.value("duration", 0.0);
    const auto samples = static_cast<std::size_t>(std::floor(duration / every + 1e-9)) + 1;
    std::vector<Frame> frames;
    Snapshot snap;
    std::size_t next = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) * every;
        while (next < trace.events.size() && trace.events[next]["t"].get<double>() <= t + 1e-9) apply(snap, trace.events[next++]);
        frames.push_back({t, draw(snap, trace.header, grid, style, t)});
    }
    return frames;
}

std::size_t write_frames(const std::vector<Frame>& frames, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
    for (std::size_t k = 0; k < frames.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu.svg", k);
        const fs::path path = fs::path(out_dir) / name;
        std::ofstream out(path, std::ios::binary);
        out << frames[k].svg;
        if (!out) throw IoError("cannot write " + path.string());
    }
    return frames.size();
}

}  // namespace mrta
