#include "mrta/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mrta/errors.hpp"

namespace mrta {

std::string format_number(double v) {
    if (!std::isfinite(v)) return "null";
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

Record::Record(std::string_view type) {
    buf_ = "{";
    str("type", type);
}

Record::Record(double t, std::string_view type) {
    buf_ = "{";
    num("t", t);
    str("type", type);
}

void Record::key(std::string_view k) {
    if (buf_.size() > 1) buf_ += ',';
    buf_ += '"';
    buf_ += k;
    buf_ += "\":";
}

Record& Record::num(std::string_view k, double v) {
    key(k);
    buf_ += format_number(v);
    return *this;
}

Record& Record::integer(std::string_view k, long long v) {
    key(k);
    buf_ += std::to_string(v);
    return *this;
}

Record& Record::str(std::string_view k, std::string_view v) {
    key(k);
    buf_ += nlohmann::json(std::string(v)).dump();
    return *this;
}

Record& Record::flag(std::string_view k, bool v) {
    key(k);
    buf_ += v ? "true" : "false";
    return *this;
}

Record& Record::point(std::string_view k, const Vec2& p) {
    key(k);
    buf_ += '[' + format_number(p.x()) + ',' + format_number(p.y()) + ']';
    return *this;
}

Record& Record::points(std::string_view k, const std::vector<Vec2>& pts) {
    key(k);
    buf_ += '[';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += '[' + format_number(pts[i].x()) + ',' + format_number(pts[i].y()) + ']';
    }
    buf_ += ']';
    return *this;
}

Record& Record::ints(std::string_view k, const std::vector<int>& v) {
    key(k);
    buf_ += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += std::to_string(v[i]);
    }
    buf_ += ']';
    return *this;
}

Record& Record::null(std::string_view k) {
    key(k);
    buf_ += "null";
    return *this;
}

Record& Record::raw(std::string_view k, std::string_view json) {
    key(k);
    buf_ += json;
    return *this;
}

void TraceWriter::write(const Record& r) {
    ++count_;
    if (!out_) return;
    *out_ << r.line() << '\n';
}

TraceData read_trace(std::istream& in) {
    TraceData d;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(lineno, std::string("malformed trace record: ") + e.what());
        }
        if (!j.is_object()) throw ParseError(lineno, "trace record is not an object");
        if (!have_header) {
            if (j.value("type", "") != "header" || j.value("format", "") != kTraceFormat)
                throw ParseError(lineno, "missing trace header");
            d.header = std::move(j);
            have_header = true;
            continue;
        }
        if (!j.contains("t") || !j["t"].is_number()) throw ParseError(lineno, "trace event without a time stamp");
        d.events.push_back(std::move(j));
    }
    if (!have_header) throw ParseError(1, "empty trace: missing trace header");
    return d;
}

TraceData read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trace: " + path);
    return read_trace(in);
}

TraceData parse_trace(const std::string& text) {
    std::istringstream in(text);
    return read_trace(in);
}

}  // namespace mrta
