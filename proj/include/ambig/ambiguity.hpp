#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ambig/model.hpp"

namespace ambig {

struct DistanceResult {
    double value = 0.0;
    Vector argmin_z;   // minimizer in B_t = sigma^T A
    Vector argmin_pi;  // (sigma^T)^{-1} argmin_z, lies in A
};

/// delta_O(zbar) = kappa_hi^T zbar^+ + kappa_lo^T zbar^-.
inline double support_value(const Vector& zbar, const AmbiguityRectangle& amb) {
    if (zbar.size() != amb.kappa_hi.size() || zbar.size() != amb.kappa_lo.size()) {
        fail(ErrorCode::DimensionMismatch, "support_value: zbar and kappa sizes differ");
    }
    double v = 0.0;
    for (Eigen::Index i = 0; i < zbar.size(); ++i) {
        v += zbar[i] > 0.0 ? amb.kappa_hi[i] * zbar[i] : -amb.kappa_lo[i] * zbar[i];
    }
    return v;
}

/// One coordinate of the separable problem min_{z in [a,b]} kh (zbar+z)^+ + kl (zbar+z)^-.
///
/// Among minimizers the one closest to -zbar is returned, i.e. the position
/// leaving the smallest residual exposure.
struct ScalarDistance {
    double value;
    double z;
};

inline ScalarDistance distance_1d(double zbar, double kl, double kh, double a, double b) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    // optimal set of w = zbar + z when unconstrained
    double wl = kl > 0.0 ? 0.0 : -inf;
    double wh = kh > 0.0 ? 0.0 : inf;
    if (kl > 0.0 && kh > 0.0) wl = wh = 0.0;
    double zl = std::max(a, wl - zbar);
    double zh = std::min(b, wh - zbar);
    double z;
    if (zl <= zh) {
        z = std::clamp(-zbar, zl, zh);
    } else {
        // optimal set misses [a,b]: the objective is monotone across the gap
        z = (wh - zbar < a) ? a : b;
    }
    double w = zbar + z;
    return {w > 0.0 ? kh * w : -kl * w, z};
}

inline bool is_diagonal(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i != j && m(i, j) != 0.0) return false;
        }
    }
    return true;
}

namespace detail {

inline void check_dims(const Vector& zbar, const AmbiguityRectangle& amb, const ConstraintSpec& cons,
                       const Matrix& sigma) {
    const auto n = zbar.size();
    if (amb.kappa_hi.size() != n || amb.kappa_lo.size() != n || cons.dim() != n ||
        sigma.rows() != n || sigma.cols() != n) {
        fail(ErrorCode::DimensionMismatch, "distance: inconsistent dimensions");
    }
}

inline Vector pi_from_z(const Matrix& sigma, const Vector& z) {
    return sigma.transpose().fullPivLu().solve(z);
}

}  // namespace detail

/// Closed form, valid when A is unconstrained or sigma is diagonal (B_t is then
/// an axis-aligned box or orthant). Throws NonAxisAligned otherwise.
inline DistanceResult distance_closed_form(const Vector& zbar, const AmbiguityRectangle& amb,
                                           const ConstraintSpec& cons, const Matrix& sigma) {
    detail::check_dims(zbar, amb, cons, sigma);
    const auto n = zbar.size();
    DistanceResult out;
    if (cons.kind() == ConstraintKind::Unconstrained) {
        out.value = 0.0;
        out.argmin_z = -zbar;
        out.argmin_pi = detail::pi_from_z(sigma, out.argmin_z);
        return out;
    }
    if (!is_diagonal(sigma)) {
        fail(ErrorCode::NonAxisAligned, "closed form needs diagonal sigma for orthant/box constraints");
    }
    out.argmin_z.resize(n);
    out.argmin_pi.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = sigma(i, i);
        // B_t component is s * [lo, hi] with s > 0
        const double a = cons.lo()[i] == -HUGE_VAL ? -HUGE_VAL : s * cons.lo()[i];
        const double b = cons.hi()[i] == HUGE_VAL ? HUGE_VAL : s * cons.hi()[i];
        ScalarDistance d = distance_1d(zbar[i], amb.kappa_lo[i], amb.kappa_hi[i], a, b);
        out.value += d.value;
        out.argmin_z[i] = d.z;
        out.argmin_pi[i] = std::clamp(d.z / s, cons.lo()[i], cons.hi()[i]);
    }
    return out;
}

/// Exact minimization for a general invertible sigma.
///
/// With w = zbar + sigma^T pi the objective is linear on each sign cell of w,
/// and each cell intersected with A is a pointed polyhedron, so a minimizer sits
/// at a point where n of the hyperplanes {w_i = 0} and {pi_j = finite bound}
/// are active. All such points are enumerated; among equal values the smallest
/// residual |w| wins.
inline DistanceResult distance_vertex_enumeration(const Vector& zbar, const AmbiguityRectangle& amb,
                                                  const ConstraintSpec& cons, const Matrix& sigma) {
    detail::check_dims(zbar, amb, cons, sigma);
    const int n = static_cast<int>(zbar.size());
    const Matrix st = sigma.transpose();

    struct Plane {
        Vector normal;  // acts on pi
        double rhs;
    };
    std::vector<Plane> planes;
    for (int i = 0; i < n; ++i) planes.push_back({st.row(i).transpose(), -zbar[i]});
    for (int j = 0; j < n; ++j) {
        Vector e = Vector::Unit(n, j);
        if (std::isfinite(cons.lo()[j])) planes.push_back({e, cons.lo()[j]});
        if (std::isfinite(cons.hi()[j]) && cons.hi()[j] != cons.lo()[j]) planes.push_back({e, cons.hi()[j]});
    }

    const double scale = 1.0 + zbar.cwiseAbs().maxCoeff();
    const double feas_tol = 1e-12 * scale;
    double best = HUGE_VAL;
    double best_res = HUGE_VAL;
    Vector best_pi = Vector::Zero(n);

    std::vector<int> idx(static_cast<std::size_t>(n));
    const int m = static_cast<int>(planes.size());
    // iterate over n-combinations of planes
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    Matrix a(n, n);
    Vector rhs(n);
    while (true) {
        for (int r = 0; r < n; ++r) {
            a.row(r) = planes[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])].normal.transpose();
            rhs[r] = planes[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])].rhs;
        }
        Eigen::FullPivLU<Matrix> lu(a);
        if (lu.isInvertible()) {
            Vector pi = lu.solve(rhs);
            if (pi.allFinite() && cons.contains(pi, feas_tol)) {
                for (int j = 0; j < n; ++j) pi[j] = std::clamp(pi[j], cons.lo()[j], cons.hi()[j]);
                Vector w = zbar + st * pi;
                double v = support_value(w, amb);
                double res = w.norm();
                double tie = 1e-13 * scale;
                if (v < best - tie || (v <= best + tie && res < best_res)) {
                    best = std::min(best, v);
                    best_res = res;
                    best_pi = pi;
                }
            }
        }
        // next combination
        int k = n - 1;
        while (k >= 0 && idx[static_cast<std::size_t>(k)] == m - n + k) --k;
        if (k < 0) break;
        ++idx[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < n; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    DistanceResult out;
    out.argmin_pi = best_pi;
    out.argmin_z = st * best_pi;
    out.value = support_value(zbar + out.argmin_z, amb);
    return out;
}

/// d_O(zbar, sigma^T A) with its minimizer.
inline DistanceResult distance_to_constraint(const Vector& zbar, const AmbiguityRectangle& amb,
                                             const ConstraintSpec& cons, const Matrix& sigma) {
    if (cons.kind() == ConstraintKind::Unconstrained || is_diagonal(sigma)) {
        return distance_closed_form(zbar, amb, cons, sigma);
    }
    return distance_vertex_enumeration(zbar, amb, cons, sigma);
}

/// Search box and resolution for the brute-force oracle.
struct ZGridSpec {
    Vector lo;
    Vector hi;
    double step = 1e-2;
    int xi_points = 2;  // per dimension; 2 keeps only the rectangle's corners
};

/// Exhaustive min over a tensor z-grid (restricted to B_t) of the max over a
/// tensor grid of the priors rectangle.
inline DistanceResult brute_force_distance(const Vector& zbar, const AmbiguityRectangle& amb,
                                           const ConstraintSpec& cons, const Matrix& sigma,
                                           const ZGridSpec& grid) {
    detail::check_dims(zbar, amb, cons, sigma);
    const int n = static_cast<int>(zbar.size());
    if (grid.lo.size() != n || grid.hi.size() != n || !(grid.step > 0.0) || grid.xi_points < 1) {
        fail(ErrorCode::InvalidArgument, "brute force: malformed grid");
    }
    std::vector<int> counts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (grid.hi[i] < grid.lo[i]) fail(ErrorCode::InvalidArgument, "brute force: empty grid");
        counts[static_cast<std::size_t>(i)] =
            static_cast<int>(std::floor((grid.hi[i] - grid.lo[i]) / grid.step + 1e-9)) + 1;
    }

    // xi grid points, flattened
    std::vector<Vector> xis;
    {
        std::vector<int> k(static_cast<std::size_t>(n), 0);
        const int m = grid.xi_points;
        while (true) {
            Vector xi(n);
            for (int i = 0; i < n; ++i) {
                double lo = -amb.kappa_lo[i], hi = amb.kappa_hi[i];
                xi[i] = m == 1 ? 0.0 : lo + (hi - lo) * k[static_cast<std::size_t>(i)] / (m - 1);
            }
            xis.push_back(xi);
            int d = 0;
            while (d < n && ++k[static_cast<std::size_t>(d)] == m) k[static_cast<std::size_t>(d++)] = 0;
            if (d == n) break;
        }
    }

    const Matrix st_inv = sigma.transpose().inverse();
    const bool diag = is_diagonal(sigma);
    double best = HUGE_VAL;
    Vector best_z;
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    Vector z(n), w(n);
    while (true) {
        for (int i = 0; i < n; ++i) z[i] = grid.lo[i] + grid.step * k[static_cast<std::size_t>(i)];
        bool inside = true;
        if (cons.kind() != ConstraintKind::Unconstrained) {
            if (diag) {
                for (int i = 0; i < n && inside; ++i) {
                    double p = z[i] / sigma(i, i);
                    inside = p >= cons.lo()[i] - 1e-12 && p <= cons.hi()[i] + 1e-12;
                }
            } else {
                inside = cons.contains(st_inv * z, 1e-12);
            }
        }
        if (inside) {
            w = zbar + z;
            double worst = -HUGE_VAL;
            for (const Vector& xi : xis) worst = std::max(worst, xi.dot(w));
            if (worst < best) {
                best = worst;
                best_z = z;
            }
        }
        int d = 0;
        while (d < n && ++k[static_cast<std::size_t>(d)] == counts[static_cast<std::size_t>(d)]) {
            k[static_cast<std::size_t>(d++)] = 0;
        }
        if (d == n) break;
    }
    if (!std::isfinite(best)) fail(ErrorCode::InvalidArgument, "brute force: grid has no point in B_t");
    DistanceResult out;
    out.value = best;
    out.argmin_z = best_z;
    out.argmin_pi = st_inv * best_z;
    return out;
}

}  // namespace ambig
