#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ambig/model.hpp"

namespace ambig {

enum class PayoffKind { Call, Put, Straddle, Linear, PiecewiseLinear };

/// Piecewise-linear function f of the scalar index s = w^T S.
///
/// Between knots f interpolates linearly; outside it extends with the stored
/// end slopes. Restricting to this family keeps the Lipschitz constant exact.
class PayoffDescriptor {
public:
    static PayoffDescriptor call(double strike) {
        return {PayoffKind::Call, {strike}, {0.0}, 0.0, 1.0};
    }
    static PayoffDescriptor put(double strike) {
        return {PayoffKind::Put, {strike}, {0.0}, -1.0, 0.0};
    }
    static PayoffDescriptor straddle(double strike) {
        return {PayoffKind::Straddle, {strike}, {0.0}, -1.0, 1.0};
    }
    /// a + b s
    static PayoffDescriptor linear(double intercept, double slope) {
        return {PayoffKind::Linear, {0.0}, {intercept}, slope, slope};
    }
    static PayoffDescriptor constant(double c) { return linear(c, 0.0); }

    static PayoffDescriptor piecewise(std::vector<double> knots, std::vector<double> values,
                                      double slope_left, double slope_right) {
        if (knots.empty() || knots.size() != values.size()) {
            fail(ErrorCode::InvalidArgument, "piecewise payoff needs matching non-empty knots/values");
        }
        for (std::size_t i = 1; i < knots.size(); ++i) {
            if (!(knots[i] > knots[i - 1])) {
                fail(ErrorCode::InvalidArgument, "payoff knots must be strictly increasing");
            }
        }
        return {PayoffKind::PiecewiseLinear, std::move(knots), std::move(values), slope_left,
                slope_right};
    }

    PayoffKind kind() const noexcept { return kind_; }
    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double slope_left() const noexcept { return slope_left_; }
    double slope_right() const noexcept { return slope_right_; }
    double strike() const { return knots_.front(); }

    /// Index weights for multi-asset claims; empty means "first asset".
    const Vector& weights() const noexcept { return weights_; }
    PayoffDescriptor with_weights(Vector w) const {
        PayoffDescriptor out = *this;
        out.weights_ = std::move(w);
        return out;
    }

    /// Same function plus a constant.
    PayoffDescriptor shifted(double c) const {
        PayoffDescriptor out = *this;
        for (double& v : out.values_) v += c;
        out.kind_ = PayoffKind::PiecewiseLinear;
        return out;
    }

    double eval_scalar(double s) const {
        if (s <= knots_.front()) return values_.front() + slope_left_ * (s - knots_.front());
        if (s >= knots_.back()) return values_.back() + slope_right_ * (s - knots_.back());
        auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
        std::size_t i = static_cast<std::size_t>(it - knots_.begin());
        double x0 = knots_[i - 1], x1 = knots_[i];
        double w = (s - x0) / (x1 - x0);
        return values_[i - 1] * (1.0 - w) + values_[i] * w;
    }

    double index(const Vector& S) const {
        if (weights_.size() == 0) return S[0];
        if (weights_.size() != S.size()) fail(ErrorCode::DimensionMismatch, "payoff weights vs spot");
        return weights_.dot(S);
    }

    /// Largest absolute slope of the scalar profile.
    double slope_bound() const {
        double k = std::max(std::abs(slope_left_), std::abs(slope_right_));
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            k = std::max(k, std::abs((values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1])));
        }
        return k;
    }

    /// Euclidean Lipschitz constant in S.
    double lipschitz() const {
        double wn = weights_.size() ? weights_.norm() : 1.0;
        return slope_bound() * wn;
    }

    bool is_nondecreasing() const {
        if (slope_left_ < 0.0 || slope_right_ < 0.0) return false;
        for (std::size_t i = 1; i < values_.size(); ++i) {
            if (values_[i] < values_[i - 1]) return false;
        }
        return weights_.size() == 0 || weights_.minCoeff() >= 0.0;
    }

    bool is_nonincreasing() const {
        if (slope_left_ > 0.0 || slope_right_ > 0.0) return false;
        for (std::size_t i = 1; i < values_.size(); ++i) {
            if (values_[i] > values_[i - 1]) return false;
        }
        return weights_.size() == 0 || weights_.minCoeff() >= 0.0;
    }

private:
    PayoffDescriptor(PayoffKind kind, std::vector<double> knots, std::vector<double> values,
                     double sl, double sr)
        : kind_(kind), knots_(std::move(knots)), values_(std::move(values)), slope_left_(sl),
          slope_right_(sr) {}

    PayoffKind kind_;
    std::vector<double> knots_;
    std::vector<double> values_;
    double slope_left_;
    double slope_right_;
    Vector weights_;
};

inline double payoff_eval(const PayoffDescriptor& desc, const Vector& S) {
    if (S.size() == 0 || S.minCoeff() <= 0.0) fail(ErrorCode::InvalidArgument, "payoff needs S > 0");
    return desc.eval_scalar(desc.index(S));
}

inline double payoff_eval(const PayoffDescriptor& desc, double S) {
    if (!(S > 0.0)) fail(ErrorCode::InvalidArgument, "payoff needs S > 0");
    return desc.eval_scalar(S);
}

inline PayoffKind payoff_kind_from_string(const std::string& s) {
    if (s == "call") return PayoffKind::Call;
    if (s == "put") return PayoffKind::Put;
    if (s == "straddle") return PayoffKind::Straddle;
    if (s == "linear") return PayoffKind::Linear;
    if (s == "piecewise") return PayoffKind::PiecewiseLinear;
    fail(ErrorCode::InvalidArgument, "unknown payoff descriptor '" + s + "'");
}

enum class ExerciseStyle { European, American };

/// Claim paying the earnings rate until exercise plus the early or terminal payoff.
struct ClaimSpec {
    PiecewiseConstant<double> earnings{0.0};
    PayoffDescriptor terminal = PayoffDescriptor::call(100.0);
    std::optional<std::pair<PayoffDescriptor, PayoffDescriptor>> early;
    ExerciseStyle style = ExerciseStyle::European;

    static ClaimSpec european(PayoffDescriptor psi) {
        ClaimSpec c;
        c.terminal = std::move(psi);
        return c;
    }

    /// American claim with early payoff max(g1, g2).
    static ClaimSpec american(PayoffDescriptor psi, PayoffDescriptor g1, PayoffDescriptor g2) {
        ClaimSpec c;
        c.terminal = std::move(psi);
        c.early = std::make_pair(std::move(g1), std::move(g2));
        c.style = ExerciseStyle::American;
        return c;
    }

    /// American claim whose early payoff equals the terminal one (g2 = g1).
    static ClaimSpec american(PayoffDescriptor psi) {
        PayoffDescriptor g = psi;
        return american(std::move(psi), g, g);
    }

    bool is_american() const noexcept { return style == ExerciseStyle::American; }

    double early_payoff(double S) const {
        if (!early) fail(ErrorCode::InvalidClaim, "claim has no early payoff");
        return std::max(early->first.eval_scalar(S), early->second.eval_scalar(S));
    }

    /// Checks the obstacle stays below the terminal payoff on the sampled spots.
    void check_obstacle(const std::vector<double>& spots, double tol = 1e-12) const {
        if (!is_american()) return;
        if (!early) fail(ErrorCode::InvalidClaim, "American pricing needs the early payoff pair");
        for (double s : spots) {
            double psi = terminal.eval_scalar(s);
            if (early_payoff(s) > psi + tol * (1.0 + std::abs(psi))) {
                fail(ErrorCode::InvalidClaim,
                     "early payoff exceeds terminal payoff at S=" + std::to_string(s));
            }
        }
    }
};

}  // namespace ambig
