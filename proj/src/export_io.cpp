#include "amliq/export_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

namespace amliq {

std::string format_double(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string format_double17(double x) {
    char buf[48];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string surface_csv(const PriceSurface& v, const Grid& g, double tau) {
    if (v.n_s != g.n_s || v.n_l != g.n_l)
        throw LengthMismatch("surface does not match the grid");
    std::string out = "S,L,tau,V\n";
    const std::string tau_str = format_double17(tau);
    for (int i = 0; i < g.n_s; ++i)
        for (int j = 0; j < g.n_l; ++j)
            out += format_double17(g.s(i)) + "," + format_double17(g.l(j)) + "," + tau_str +
                   "," + format_double17(v.at(i, j)) + "\n";
    return out;
}

PriceSurface surface_from_csv(const std::string& text, const Grid& g) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw MalformedRow("surface csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "S,L,tau,V")
        throw MalformedRow("surface csv: expected header 'S,L,tau,V'");

    PriceSurface v(g.n_s, g.n_l, Side::holder, Style::american);
    std::vector<char> seen(static_cast<size_t>(g.n_s) * g.n_l, 0);
    size_t filled = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        double cols[4];
        size_t pos = 0;
        for (int c = 0; c < 4; ++c) {
            const size_t comma = line.find(',', pos);
            const std::string field = line.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if ((c < 3 && comma == std::string::npos) ||
                (c == 3 && comma != std::string::npos))
                throw MalformedRow("surface csv line " + std::to_string(lineno) +
                                   ": expected 4 columns");
            char* endp = nullptr;
            cols[c] = std::strtod(field.c_str(), &endp);
            if (endp == field.c_str() || *endp != '\0')
                throw MalformedRow("surface csv line " + std::to_string(lineno) +
                                   ": bad number '" + field + "'");
            pos = comma + 1;
        }
        const long i = std::lround(cols[0] / g.delta_s);
        const long j = std::lround(cols[1] / g.delta_l);
        if (i < 0 || i >= g.n_s || j < 0 || j >= g.n_l ||
            std::abs(cols[0] - g.s(static_cast<int>(i))) > 1e-9 * std::max(1.0, g.s_max) ||
            std::abs(cols[1] - g.l(static_cast<int>(j))) > 1e-9 * std::max(1.0, g.l_max))
            throw MalformedRow("surface csv line " + std::to_string(lineno) +
                               ": node not on the grid");
        const size_t q = static_cast<size_t>(i) * g.n_l + static_cast<size_t>(j);
        if (!seen[q]) {
            seen[q] = 1;
            ++filled;
        }
        v.values[q] = cols[3];
    }
    if (filled != seen.size())
        throw MalformedRow("surface csv: " + std::to_string(seen.size() - filled) +
                           " nodes missing");
    return v;
}

std::string surface_json(const PriceSurface& v, const Grid& g, double tau) {
    if (v.n_s != g.n_s || v.n_l != g.n_l)
        throw LengthMismatch("surface does not match the grid");
    std::string out = "{\n  \"n_s\": " + std::to_string(g.n_s) +
                      ",\n  \"n_l\": " + std::to_string(g.n_l) +
                      ",\n  \"tau\": " + format_double17(tau) + ",\n  \"s\": [";
    for (int i = 0; i < g.n_s; ++i)
        out += (i ? ", " : "") + format_double17(g.s(i));
    out += "],\n  \"l\": [";
    for (int j = 0; j < g.n_l; ++j)
        out += (j ? ", " : "") + format_double17(g.l(j));
    out += "],\n  \"values\": [\n";
    for (int i = 0; i < g.n_s; ++i) {
        out += "    [";
        for (int j = 0; j < g.n_l; ++j)
            out += (j ? ", " : "") + format_double17(v.at(i, j));
        out += i + 1 < g.n_s ? "],\n" : "]\n";
    }
    out += "  ]\n}\n";
    return out;
}

std::string boundary_csv(const ExerciseBoundary& b, const Grid& g) {
    if (b.n_l != g.n_l || b.n_t != g.n_t)
        throw LengthMismatch("boundary does not match the grid");
    std::string out = "L,tau,Sf,flagged\n";
    for (int n = 0; n < b.n_t; ++n)
        for (int j = 0; j < b.n_l; ++j)
            out += format_double17(g.l(j)) + "," + format_double17(g.tau(n)) + "," +
                   format_double17(b.sf(j, n)) + "," + (b.is_flagged(j, n) ? "1" : "0") + "\n";
    return out;
}

std::string boundary_json(const ExerciseBoundary& b, const Grid& g) {
    if (b.n_l != g.n_l || b.n_t != g.n_t)
        throw LengthMismatch("boundary does not match the grid");
    std::string out = "{\n  \"l\": [";
    for (int j = 0; j < b.n_l; ++j)
        out += (j ? ", " : "") + format_double17(g.l(j));
    out += "],\n  \"tau\": [";
    for (int n = 0; n < b.n_t; ++n)
        out += (n ? ", " : "") + format_double17(g.tau(n));
    out += "],\n  \"sf\": [\n";
    for (int n = 0; n < b.n_t; ++n) {
        out += "    [";
        for (int j = 0; j < b.n_l; ++j)
            out += (j ? ", " : "") + format_double17(b.sf(j, n));
        out += n + 1 < b.n_t ? "],\n" : "]\n";
    }
    out += "  ],\n  \"flagged\": [\n";
    for (int n = 0; n < b.n_t; ++n) {
        out += "    [";
        for (int j = 0; j < b.n_l; ++j)
            out += std::string(j ? ", " : "") + (b.is_flagged(j, n) ? "1" : "0");
        out += n + 1 < b.n_t ? "],\n" : "]\n";
    }
    out += "  ]\n}\n";
    return out;
}

} // namespace amliq
