#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "ambig/pde/csv.hpp"
#include "ambig/pde/grid.hpp"

namespace ambig::experiments {

/// One line of a pass/fail table. `value <= threshold` passes.
struct VerdictRow {
    std::string case_name;
    std::string metric;
    double value = 0.0;
    double threshold = 0.0;

    bool pass() const { return std::isfinite(value) && value <= threshold; }
};

using Table = std::vector<VerdictRow>;

inline bool all_pass(const Table& t) {
    for (const auto& r : t) {
        if (!r.pass()) return false;
    }
    return true;
}

inline void write_table_csv(std::ostream& os, const Table& t) {
    os << "case,metric,value,threshold,verdict\n";
    for (const auto& r : t) {
        os << r.case_name << ',' << r.metric << ',' << pde::format_double(r.value) << ','
           << pde::format_double(r.threshold) << ',' << (r.pass() ? "pass" : "fail") << '\n';
    }
}

/// Index window of a grid: space nodes [j_lo, j_hi], time rows [0, k_hi].
struct Window {
    std::size_t j_lo = 0, j_hi = 0, k_hi = 0;

    /// Trims `trim` of the nodes at each space end and the last `skip` time steps.
    static Window of(const pde::Grid& g, double trim, int skip) {
        auto [lo, hi] = g.trimmed(trim);
        Window w{lo, hi, g.nt() - std::min<std::size_t>(g.nt(), static_cast<std::size_t>(std::max(skip, 0)))};
        return w;
    }
    double s_lo(const pde::Grid& g) const { return g.spot(j_lo); }
    double s_hi(const pde::Grid& g) const { return g.spot(j_hi); }
};

}  // namespace ambig::experiments
