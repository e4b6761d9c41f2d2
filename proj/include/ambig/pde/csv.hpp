#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ambig/error.hpp"
#include "ambig/pde/surface.hpp"

namespace ambig::pde {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Rows ordered by time, then space. The `exercise` column appears only for
/// surfaces that carry a mask.
inline void write_surface_csv(std::ostream& os, const PriceSurface& s) {
    const bool ex = !s.exercise.empty();
    os << "t,S,value,dP_dS,pi_star" << (ex ? ",exercise" : "") << '\n';
    for (std::size_t k = 0; k < s.grid.t.size(); ++k) {
        for (std::size_t j = 0; j < s.width(); ++j) {
            const std::size_t i = s.index(k, j);
            const double S = s.grid.spot(j);
            os << format_double(s.grid.t[k]) << ',' << format_double(S) << ',' << format_double(s.values[i]) << ','
               << format_double(s.grad[i] / S) << ',' << format_double(s.pi_star[i]);
            if (ex) os << ',' << int(s.exercise[i]);
            os << '\n';
        }
    }
}

inline void write_boundary_csv(std::ostream& os, const std::vector<double>& t,
                               const std::vector<std::vector<double>>& boundary) {
    os << "t,S_star\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        for (double s : boundary[k]) os << format_double(t[k]) << ',' << format_double(s) << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

inline double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) fail(ErrorCode::InvalidArgument, "bad number in CSV: '" + s + "'");
    return v;
}

}  // namespace detail

/// Reads a surface written by write_surface_csv. The grid is rebuilt from the
/// distinct t and S columns; x = ln S.
inline PriceSurface read_surface_csv(std::istream& is, Side side = Side::Bid) {
    std::string line;
    if (!std::getline(is, line)) fail(ErrorCode::InvalidArgument, "empty surface CSV");
    auto head = detail::split_csv(line);
    const bool ex = head.size() == 6 && head[5] == "exercise";
    if (head.size() < 5 || head[0] != "t" || head[1] != "S" || head[2] != "value" || head[3] != "dP_dS" ||
        head[4] != "pi_star" || (head.size() == 6 && !ex) || head.size() > 6) {
        fail(ErrorCode::InvalidArgument, "unexpected surface CSV header: " + line);
    }
    std::vector<double> ts, ss, val, dps, pis;
    std::vector<std::uint8_t> exv;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv(line);
        if (cells.size() != head.size()) fail(ErrorCode::InvalidArgument, "ragged surface CSV row: " + line);
        ts.push_back(detail::parse_double(cells[0]));
        ss.push_back(detail::parse_double(cells[1]));
        val.push_back(detail::parse_double(cells[2]));
        dps.push_back(detail::parse_double(cells[3]));
        pis.push_back(detail::parse_double(cells[4]));
        if (ex) exv.push_back(cells[5] == "1" ? 1 : 0);
    }
    PriceSurface s;
    s.side = side;
    for (std::size_t i = 0; i < ts.size() && (i == 0 || ts[i] == ts[0]); ++i) s.grid.x.push_back(std::log(ss[i]));
    const std::size_t w = s.grid.x.size();
    if (w < 2 || ts.size() % w != 0) fail(ErrorCode::InvalidArgument, "surface CSV is not a full grid");
    for (std::size_t k = 0; k < ts.size() / w; ++k) s.grid.t.push_back(ts[k * w]);
    s.grid.s_anchor = std::exp(s.grid.x[(w - 1) / 2]);
    s.values = std::move(val);
    s.pi_star = std::move(pis);
    s.exercise = std::move(exv);
    s.grad.resize(dps.size());
    for (std::size_t i = 0; i < dps.size(); ++i) s.grad[i] = dps[i] * ss[i];
    return s;
}

}  // namespace ambig::pde
