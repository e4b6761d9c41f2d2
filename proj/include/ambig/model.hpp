#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ambig/error.hpp"
#include "ambig/piecewise.hpp"

namespace ambig {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Black-Scholes market with deterministic piecewise-constant coefficients.
/// Under the reference measure dS_i = r S_i dt + S_i sum_j sigma_ij dW_j.
struct MarketModel {
    int n = 1;
    PiecewiseConstant<double> rate{0.0};
    PiecewiseConstant<Matrix> vol{Matrix::Identity(1, 1)};
    double horizon = 1.0;

    static MarketModel black_scholes(double r, double sigma, double horizon) {
        MarketModel m;
        m.n = 1;
        m.rate = PiecewiseConstant<double>(r);
        m.vol = PiecewiseConstant<Matrix>(Matrix::Constant(1, 1, sigma));
        m.horizon = horizon;
        return m;
    }

    /// Scalar volatility for n == 1.
    double sigma_at(double t) const { return vol.at(t)(0, 0); }

    /// Mean of sigma over [a, b] (n == 1).
    double sigma_mean(double a, double b) const {
        return vol.average(a, b)(0, 0);
    }

    /// Root-mean-square sigma over [a, b] (n == 1).
    double sigma_rms(double a, double b) const {
        if (b <= a) return std::abs(sigma_at(a));
        double v = vol.integrate(a, b, [](const Matrix& s) { return s(0, 0) * s(0, 0); });
        return std::sqrt(v / (b - a));
    }

    double rate_mean(double a, double b) const { return rate.average(a, b); }
};

/// Smallest eigenvalue of the symmetric part; positive iff x^T s x > 0 for x != 0.
inline double min_symmetric_eigenvalue(const Matrix& s) {
    Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Every violated invariant of the model; empty means valid.
inline std::vector<std::string> validate_model(const MarketModel& model) {
    std::vector<std::string> errors;
    if (model.n < 1) errors.emplace_back("asset count must be positive");
    if (!(model.horizon > 0.0) || !std::isfinite(model.horizon)) {
        errors.emplace_back("horizon must be positive");
    }
    for (double r : model.rate.values()) {
        if (!std::isfinite(r)) {
            errors.emplace_back("rate must be finite");
            break;
        }
    }
    for (std::size_t i = 0; i < model.vol.values().size(); ++i) {
        const Matrix& s = model.vol.values()[i];
        std::string where = " (vol piece " + std::to_string(i) + ")";
        if (s.rows() != model.n || s.cols() != model.n) {
            errors.push_back("volatility must be n x n" + where);
            continue;
        }
        if (!s.allFinite()) {
            errors.push_back("volatility entries must be finite" + where);
            continue;
        }
        if (!(min_symmetric_eigenvalue(s) > 1e-10)) {
            errors.push_back("volatility is not positive definite" + where);
        }
    }
    return errors;
}

inline void require_valid(const MarketModel& model) {
    auto errs = validate_model(model);
    if (!errs.empty()) {
        std::string msg;
        for (const auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
        fail(ErrorCode::InvalidModel, msg);
    }
}

/// Kernel bounds of the priors rectangle: -kappa_lo <= xi <= kappa_hi.
struct AmbiguityRectangle {
    Vector kappa_lo;
    Vector kappa_hi;

    static AmbiguityRectangle symmetric(int n, double kappa) {
        return {Vector::Constant(n, kappa), Vector::Constant(n, kappa)};
    }
    static AmbiguityRectangle upper_only(int n, double kappa_hi) {
        return {Vector::Zero(n), Vector::Constant(n, kappa_hi)};
    }
    static AmbiguityRectangle none(int n) { return {Vector::Zero(n), Vector::Zero(n)}; }

    int dim() const { return static_cast<int>(kappa_hi.size()); }
    double kappa_star() const { return kappa_hi.size() ? kappa_hi.maxCoeff() : 0.0; }
    bool is_trivial() const {
        return kappa_lo.cwiseAbs().maxCoeff() == 0.0 && kappa_hi.cwiseAbs().maxCoeff() == 0.0;
    }

    void validate() const {
        if (kappa_lo.size() != kappa_hi.size() || kappa_hi.size() == 0) {
            fail(ErrorCode::DimensionMismatch, "kappa_lo and kappa_hi must have equal positive size");
        }
        if (!kappa_lo.allFinite() || !kappa_hi.allFinite() || kappa_lo.minCoeff() < 0.0 ||
            kappa_hi.minCoeff() < 0.0) {
            fail(ErrorCode::InvalidArgument, "kappa bounds must be finite and nonnegative");
        }
    }
};

enum class ConstraintKind { Unconstrained, Orthant, Box };

/// Admissible set A for the dollar amounts held in the risky assets.
class ConstraintSpec {
public:
    static ConstraintSpec unconstrained(int n) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return ConstraintSpec(ConstraintKind::Unconstrained, Vector::Constant(n, -inf),
                              Vector::Constant(n, inf));
    }
    static ConstraintSpec orthant(int n) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return ConstraintSpec(ConstraintKind::Orthant, Vector::Zero(n), Vector::Constant(n, inf));
    }
    static ConstraintSpec box(Vector lo, Vector hi) {
        if (lo.size() != hi.size() || lo.size() == 0) {
            fail(ErrorCode::DimensionMismatch, "box bounds must have equal positive size");
        }
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > 0.0 || hi[i] < 0.0) {
                fail(ErrorCode::InvalidArgument, "box must satisfy lo <= 0 <= hi componentwise");
            }
        }
        return ConstraintSpec(ConstraintKind::Box, std::move(lo), std::move(hi));
    }

    ConstraintKind kind() const noexcept { return kind_; }
    int dim() const { return static_cast<int>(lo_.size()); }
    const Vector& lo() const noexcept { return lo_; }
    const Vector& hi() const noexcept { return hi_; }
    bool is_cone() const noexcept { return kind_ != ConstraintKind::Box; }

    bool contains(const Vector& pi, double tol = 0.0) const {
        if (pi.size() != lo_.size()) return false;
        for (Eigen::Index i = 0; i < pi.size(); ++i) {
            if (pi[i] < lo_[i] - tol || pi[i] > hi_[i] + tol) return false;
        }
        return true;
    }

private:
    ConstraintSpec(ConstraintKind kind, Vector lo, Vector hi)
        : kind_(kind), lo_(std::move(lo)), hi_(std::move(hi)) {}

    ConstraintKind kind_;
    Vector lo_;
    Vector hi_;
};

inline const char* to_string(ConstraintKind k) {
    switch (k) {
        case ConstraintKind::Unconstrained: return "unconstrained";
        case ConstraintKind::Orthant: return "orthant";
        case ConstraintKind::Box: return "box";
    }
    return "?";
}

/// Exact lognormal map: S_T = S_0 exp(int (r - |sigma_i|^2/2) + chol(int sigma sigma^T) z).
inline Vector sample_gbm_terminal(const MarketModel& model, const Vector& s0, double t, double T,
                                  const Vector& normals) {
    if (s0.size() != model.n || normals.size() != model.n) {
        fail(ErrorCode::DimensionMismatch, "spot and normals must have n entries");
    }
    if (s0.minCoeff() <= 0.0) fail(ErrorCode::InvalidArgument, "spot must be positive");
    if (T < t) fail(ErrorCode::InvalidArgument, "t must not exceed T");
    if (T == t) return s0;

    double r_int = model.rate.integral(t, T);
    Matrix cov = model.vol.integrate(t, T, [](const Matrix& s) -> Matrix { return s * s.transpose(); });
    Vector out(model.n);
    if (model.n == 1) {
        double v = cov(0, 0);
        out[0] = s0[0] * std::exp(r_int - 0.5 * v + std::sqrt(v) * normals[0]);
        return out;
    }
    Eigen::LLT<Matrix> llt(cov);
    Vector shock = llt.matrixL() * normals;
    for (int i = 0; i < model.n; ++i) {
        out[i] = s0[i] * std::exp(r_int - 0.5 * cov(i, i) + shock[i]);
    }
    return out;
}

}  // namespace ambig
