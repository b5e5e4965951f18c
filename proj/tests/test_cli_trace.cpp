#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <sys/wait.h>

#include "mrta/engine.hpp"
#include "mrta/errors.hpp"
#include "mrta/render.hpp"
#include "mrta/scenario.hpp"
#include "mrta/trace.hpp"

using namespace mrta;
namespace fs = std::filesystem;

namespace {

const std::string kData = MRTA_DATA_DIR;
const std::string kExe = MRTA_SIM_EXE;

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("mrta_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct Result {
    int code;
    std::string out;
};

Result sh(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "log.txt";
    const int raw = std::system((kExe + " " + args + " > " + log.string() + " 2>&1").c_str());
    const int code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return {code, read_text_file(log.string())};
}

std::string ten_second_trace() {
    auto s = load_scenario(kData + "/scenarios/open20_single.yaml");
    RunOptions o;
    o.duration = 10.0;
    return run_to_string(s, o);
}

}  // namespace

TEST_CASE("format_number") {
    CHECK(format_number(0.05) == "0.05");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(120.0) == "120");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "null");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "null");
}

TEST_CASE("records keep field order") {
    const auto line = Record(1.5, "task").integer("task", 3).str("event", "pickup").flag("ok", true).line();
    CHECK(line == R"({"t":1.5,"type":"task","task":3,"event":"pickup","ok":true})");
}

TEST_CASE("trace parsing errors") {
    CHECK_THROWS_AS(parse_trace(""), ParseError);
    CHECK_THROWS_AS(parse_trace("{\"type\":\"state\"}\n"), ParseError);
    CHECK_THROWS_AS(parse_trace("{\"type\":\"header\",\"format\":\"other\",\"version\":1}\n"), ParseError);
    const std::string good = ten_second_trace();
    const auto first_line = good.substr(0, good.find('\n') + 1);
    CHECK_THROWS_WITH_AS(parse_trace(first_line + "{\"t\":0,\n"), doctest::Contains("line 2"), ParseError);
    CHECK(parse_trace(first_line).events.empty());
}

TEST_CASE("render_frames") {
    const auto trace = parse_trace(ten_second_trace());
    const auto grid = load_map_file(kData + "/maps/open20.map");
    RenderStyle style;
    const auto frames = render_frames(trace, grid, style, 1.0);
    CHECK(frames.size() == 11);
    CHECK(frames.front().t == 0.0);
    CHECK(frames.back().t == 10.0);
    CHECK(frames[3].svg.rfind("<svg", 0) == 0);
    CHECK(render_frames(trace, grid, style, 1.0)[5].svg == frames[5].svg);

    style.paths = false;
    for (const auto& f : render_frames(trace, grid, style, 2.0)) CHECK(f.svg.find("<polyline") == std::string::npos);

    CHECK_THROWS_AS(parse_render_style(R"({"scale": 0})"), InvalidInput);
    CHECK_THROWS_AS(parse_render_style(R"({"paths": "yes"})"), InvalidInput);
    const auto parsed = parse_render_style(read_text_file(kData + "/styles/default.json"));
    CHECK(parsed.scale == RenderStyle{}.scale);
    CHECK(parsed.robot_colors == RenderStyle{}.robot_colors);
}

TEST_CASE("command line") {
    const auto dir = scratch("cmd");
    const std::string scen = kData + "/scenarios/open20_single.yaml";

    SUBCASE("run, report and render") {
        const auto trace = (dir / "t.jsonl").string();
        REQUIRE(sh("run --scenario " + scen + " --out " + trace + " --duration 20", dir).code == 0);
        CHECK(read_text_file(trace) == [&] {
            auto s = load_scenario(scen);
            RunOptions o;
            o.duration = 20.0;
            return run_to_string(s, o);
        }());
        const auto csv = sh("report --trace " + trace + " --format csv", dir);
        CHECK(csv.code == 0);
        CHECK(csv.out.rfind("metric,value\n", 0) == 0);
        CHECK(csv.out.find("tasks_completed,1\n") != std::string::npos);
        const auto frames = dir / "frames";
        CHECK(sh("render --trace " + trace + " --map " + kData + "/maps/open20.map --out-dir " + frames.string() +
                     " --every 5",
                 dir)
                  .code == 0);
        CHECK(fs::exists(frames / "frame_00004.svg"));
        CHECK_FALSE(fs::exists(frames / "frame_00005.svg"));
    }
    SUBCASE("zero duration gives a header-only trace") {
        const auto trace = (dir / "h.jsonl").string();
        REQUIRE(sh("run --scenario " + scen + " --out " + trace + " --duration 0", dir).code == 0);
        const auto text = read_text_file(trace);
        CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    }
    SUBCASE("missing scenario file") {
        const auto r = sh("run --scenario " + (dir / "absent.yaml").string() + " --out " + (dir / "x").string(), dir);
        CHECK(r.code == 3);
        CHECK(r.out.find("absent.yaml") != std::string::npos);
    }
    SUBCASE("empty trace cannot be rendered") {
        write_file(dir / "empty.jsonl", "");
        const auto r = sh("render --trace " + (dir / "empty.jsonl").string() + " --map " + kData +
                              "/maps/open20.map --out-dir " + (dir / "f").string(),
                          dir);
        CHECK(r.code == 2);
    }
    SUBCASE("bad arguments") {
        CHECK(sh("run", dir).code == 2);
        CHECK(sh("frobnicate", dir).code == 2);
    }
    SUBCASE("collection over a severed map") {
        std::string map = "map 20 20 0.5 0 0\n";
        for (int y = 0; y < 20; ++y) map += std::string(10, '.') + "#" + std::string(9, '.') + "\n";
        write_file(dir / "cut.map", map);
        write_file(dir / "cut.yaml",
                   "map: cut.map\nagents:\n  r: {start: [2, 5]}\nlocations: [[2, 5], [8, 5]]\n");
        const auto r = sh("collect-travel-times --scenario " + (dir / "cut.yaml").string() + " --out " +
                              (dir / "g.txt").string(),
                          dir);
        CHECK(r.code == 2);
        CHECK(r.out.find("0 and 1") != std::string::npos);
    }
}
