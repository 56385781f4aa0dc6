#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "coopdqn/error.hpp"

namespace coopdqn::csv {

/// Shortest decimal text that parses back to the same double; "nan"/"inf" for non-finite.
inline std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw NumericFault("csv: cannot format number");
    return {buf, end};
}

inline std::string format(std::uint64_t v) { return std::to_string(v); }
inline std::string format(std::int64_t v) { return std::to_string(v); }
inline std::string format(const std::string& s) { return s; }
inline std::string format(const char* s) { return s; }

inline double parse_double(std::string_view s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("csv: not a number: '" + std::string(s) + "'");
    return v;
}

/// Commas and line breaks would break the unquoted format.
inline std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',') c = ';';
        else if (c == '\n' || c == '\r') c = ' ';
    return s;
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename... Ts>
void write_row(std::ostream& os, const Ts&... fields) {
    bool first = true;
    ((os << (first ? "" : ",") << format(fields), first = false), ...);
    os << '\n';
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) os << (k ? "," : "") << fields[k];
    os << '\n';
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        throw ConfigError("csv: missing column '" + std::string(name) + "'");
    }
};

inline Table read(std::istream& is) {
    Table t;
    std::string line;
    if (!std::getline(is, line)) return t;
    t.header = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw ConfigError("csv: ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace coopdqn::csv
