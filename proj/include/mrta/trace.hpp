#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrta/geometry.hpp"

namespace mrta {

inline constexpr std::string_view kTraceFormat = "mrta-trace";
inline constexpr int kTraceVersion = 1;

// %.9g, with non-finite values written as null.
std::string format_number(double v);

// One JSON object per line with caller-controlled field order. Events start
// with {"t", "type"}; the header starts with {"type"}.
class Record {
public:
    explicit Record(std::string_view type);
    Record(double t, std::string_view type);

    Record& num(std::string_view key, double v);
    Record& integer(std::string_view key, long long v);
    Record& str(std::string_view key, std::string_view v);
    Record& flag(std::string_view key, bool v);
    Record& point(std::string_view key, const Vec2& p);
    Record& points(std::string_view key, const std::vector<Vec2>& pts);
    Record& ints(std::string_view key, const std::vector<int>& v);
    Record& null(std::string_view key);
    // Pre-serialized JSON value.
    Record& raw(std::string_view key, std::string_view json);

    std::string line() const { return buf_ + "}"; }

private:
    void key(std::string_view k);
    std::string buf_;
};

class TraceWriter {
public:
    explicit TraceWriter(std::ostream* out) : out_(out) {}
    bool enabled() const { return out_ != nullptr; }
    void write(const Record& r);
    std::size_t records() const { return count_; }

private:
    std::ostream* out_;
    std::size_t count_ = 0;
};

struct TraceData {
    nlohmann::json header;
    std::vector<nlohmann::json> events;
};

// Throws ParseError for an empty trace, a missing or foreign header, or a
// malformed line (with its line number).
TraceData read_trace(std::istream& in);
TraceData read_trace_file(const std::string& path);
TraceData parse_trace(const std::string& text);

}  // namespace mrta
