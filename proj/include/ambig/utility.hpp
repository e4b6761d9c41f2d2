#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <variant>
#include <vector>

#include "ambig/error.hpp"

namespace ambig {

/// Consumption utility v(t, c) = exp(-impatience * t) * u(c).
struct UtilitySpec {
    struct Power {
        double gamma;
    };
    struct Log {};
    /// Tabulated marginal u'(c) on strictly increasing consumption knots,
    /// linearly interpolated; u(1) is anchored at `value_at_one`.
    struct CustomMarginal {
        std::vector<double> c;
        std::vector<double> marginal;
        double value_at_one = 0.0;
    };

    std::variant<Power, Log, CustomMarginal> kind = Log{};
    double impatience = 0.0;

    static UtilitySpec power(double gamma) { return {Power{gamma}, 0.0}; }
    static UtilitySpec log() { return {Log{}, 0.0}; }
    static UtilitySpec custom(std::vector<double> c, std::vector<double> m, double value_at_one) {
        return {CustomMarginal{std::move(c), std::move(m), value_at_one}, 0.0};
    }

    bool time_homogeneous() const noexcept { return impatience == 0.0; }

    void validate() const {
        if (const auto* p = std::get_if<Power>(&kind)) {
            if (!(p->gamma > 0.0 && p->gamma < 1.0)) {
                fail(ErrorCode::InvalidArgument, "power utility needs gamma in (0,1)");
            }
        } else if (const auto* cm = std::get_if<CustomMarginal>(&kind)) {
            if (cm->c.size() < 2 || cm->c.size() != cm->marginal.size()) {
                fail(ErrorCode::InvalidArgument, "custom marginal needs >= 2 matching knots");
            }
            for (std::size_t i = 0; i < cm->c.size(); ++i) {
                if (!(cm->c[i] > 0.0) || !(cm->marginal[i] > 0.0)) {
                    fail(ErrorCode::InvalidArgument, "custom marginal knots must be positive");
                }
                if (i > 0 && (!(cm->c[i] > cm->c[i - 1]) || !(cm->marginal[i] < cm->marginal[i - 1]))) {
                    fail(ErrorCode::InvalidArgument,
                         "custom marginal must be strictly decreasing on increasing knots");
                }
            }
            if (!(cm->c.front() <= 1.0 && cm->c.back() >= 1.0)) {
                fail(ErrorCode::InvalidArgument, "custom marginal table must cover c = 1");
            }
        }
        if (!(impatience >= 0.0) || !std::isfinite(impatience)) {
            fail(ErrorCode::InvalidArgument, "impatience must be finite and nonnegative");
        }
    }

    double weight(double t) const { return std::exp(-impatience * t); }

    /// d/dc v(t, c).
    double marginal(double t, double c) const {
        return weight(t) * std::visit([c](const auto& k) { return base_marginal(k, c); }, kind);
    }

    double value(double t, double c) const {
        return weight(t) * std::visit([c](const auto& k) { return base_value(k, c); }, kind);
    }

    /// Upper end of the consumption domain (finite for tabulated marginals).
    double c_limit() const {
        if (const auto* cm = std::get_if<CustomMarginal>(&kind)) return cm->c.back();
        return HUGE_VAL;
    }
    double c_floor() const {
        if (const auto* cm = std::get_if<CustomMarginal>(&kind)) return cm->c.front();
        return 0.0;
    }

private:
    static double base_marginal(const Power& p, double c) { return std::pow(c, p.gamma - 1.0); }
    static double base_marginal(const Log&, double c) { return 1.0 / c; }
    static double base_marginal(const CustomMarginal& cm, double c) {
        if (c <= cm.c.front()) return cm.marginal.front();
        if (c >= cm.c.back()) return cm.marginal.back();
        std::size_t i = 1;
        while (cm.c[i] < c) ++i;
        double w = (c - cm.c[i - 1]) / (cm.c[i] - cm.c[i - 1]);
        return cm.marginal[i - 1] * (1.0 - w) + cm.marginal[i] * w;
    }

    static double base_value(const Power& p, double c) { return std::pow(c, p.gamma) / p.gamma; }
    static double base_value(const Log&, double c) { return std::log(c); }
    // Exact integral of the interpolated marginal from 1 to c.
    static double base_value(const CustomMarginal& cm, double c) {
        auto integral_to = [&cm](double x) {
            // int_{c0}^{x} m(s) ds for x inside the table
            double acc = 0.0;
            for (std::size_t i = 1; i < cm.c.size() && cm.c[i - 1] < x; ++i) {
                double hi = std::min(x, cm.c[i]);
                double m_hi = base_marginal(cm, hi);
                acc += 0.5 * (cm.marginal[i - 1] + m_hi) * (hi - cm.c[i - 1]);
            }
            return acc;
        };
        double x = std::clamp(c, cm.c.front(), cm.c.back());
        double v = cm.value_at_one + integral_to(x) - integral_to(1.0);
        // flat extrapolation of the marginal outside the table
        if (c > cm.c.back()) v += cm.marginal.back() * (c - cm.c.back());
        if (c < cm.c.front()) v -= cm.marginal.front() * (cm.c.front() - c);
        return v;
    }
};

}  // namespace ambig
