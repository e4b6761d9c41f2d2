#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ambig/error.hpp"

namespace ambig {

/// Right-continuous piecewise-constant function of time.
///
/// `breaks` holds the interior switch times in ascending order; `values[i]`
/// applies on [breaks[i-1], breaks[i]). A function with no breaks is constant.
/// T only needs `+`, `-` and scaling by double, so both scalars and Eigen
/// matrices work.
template <class T>
class PiecewiseConstant {
public:
    PiecewiseConstant() = default;
    PiecewiseConstant(T value) : values_{std::move(value)} {}  // NOLINT: implicit by intent

    PiecewiseConstant(std::vector<double> breaks, std::vector<T> values)
        : breaks_(std::move(breaks)), values_(std::move(values)) {
        if (values_.size() != breaks_.size() + 1) {
            fail(ErrorCode::InvalidArgument, "piecewise function needs breaks.size()+1 values");
        }
        if (!std::is_sorted(breaks_.begin(), breaks_.end()) ||
            std::adjacent_find(breaks_.begin(), breaks_.end()) != breaks_.end()) {
            fail(ErrorCode::InvalidArgument, "piecewise breaks must be strictly increasing");
        }
    }

    const std::vector<double>& breaks() const noexcept { return breaks_; }
    const std::vector<T>& values() const noexcept { return values_; }
    std::size_t pieces() const noexcept { return values_.size(); }

    const T& at(double t) const {
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
        return values_[static_cast<std::size_t>(it - breaks_.begin())];
    }

    /// Exact integral of g(value) over [a, b], a <= b.
    template <class F>
    auto integrate(double a, double b, F&& g) const {
        using R = decltype(g(values_.front()));
        R acc = g(values_.front()) * 0.0;
        double lo = a;
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), a);
        std::size_t idx = static_cast<std::size_t>(it - breaks_.begin());
        while (lo < b) {
            double hi = idx < breaks_.size() ? std::min(b, breaks_[idx]) : b;
            acc = acc + g(values_[idx]) * (hi - lo);
            lo = hi;
            ++idx;
        }
        return acc;
    }

    T integral(double a, double b) const {
        return integrate(a, b, [](const T& v) { return v; });
    }

    /// Mean value over [a, b]; the point value when a == b.
    T average(double a, double b) const {
        if (b <= a) return at(a);
        return integral(a, b) * (1.0 / (b - a));
    }

    /// Calls f(lo, hi, value) for every constant piece intersecting [a, b].
    template <class F>
    void for_each_piece(double a, double b, F&& f) const {
        double lo = a;
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), a);
        std::size_t idx = static_cast<std::size_t>(it - breaks_.begin());
        while (lo < b) {
            double hi = idx < breaks_.size() ? std::min(b, breaks_[idx]) : b;
            f(lo, hi, values_[idx]);
            lo = hi;
            ++idx;
        }
    }

private:
    std::vector<double> breaks_;
    std::vector<T> values_;
};

}  // namespace ambig
