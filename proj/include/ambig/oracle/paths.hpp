#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ambig/model.hpp"
#include "ambig/parallel.hpp"

namespace ambig::oracle {

struct McEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
};

/// Mean and sample-std / sqrt(N) of a fixed-order sample.
inline McEstimate summarize(const std::vector<double>& x, std::uint64_t seed) {
    McEstimate e;
    e.paths = x.size();
    e.seed = seed;
    if (x.empty()) return e;
    double sum = 0.0;
    for (double v : x) sum += v;
    e.mean = sum / static_cast<double>(x.size());
    if (x.size() < 2) return e;
    double ss = 0.0;
    for (double v : x) ss += (v - e.mean) * (v - e.mean);
    e.std_err = std::sqrt(ss / static_cast<double>(x.size() - 1)) / std::sqrt(static_cast<double>(x.size()));
    return e;
}

/// Generator for path batch `batch`; depends only on (seed, batch).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t batch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32)};
    return std::mt19937_64(seq);
}

inline constexpr std::size_t kBatch = 4096;

/// Simulated GBM paths on a uniform time grid, exact in distribution per step.
/// Layouts: log_s[(k * paths + p) * n + i], dw[(k * paths + p) * n + i].
struct PathSet {
    int n = 1;
    std::size_t paths = 0;
    int steps = 0;
    std::vector<double> times;
    std::vector<double> log_s;
    std::vector<double> dw;      // Brownian increments consistent with the step's mean sigma
    std::vector<Matrix> sigma;   // mean sigma per step

    double log_spot(int k, std::size_t p, int i = 0) const {
        return log_s[(static_cast<std::size_t>(k) * paths + p) * static_cast<std::size_t>(n) +
                     static_cast<std::size_t>(i)];
    }
    double increment(int k, std::size_t p, int i = 0) const {
        return dw[(static_cast<std::size_t>(k) * paths + p) * static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(i)];
    }
    Vector spot(int k, std::size_t p) const {
        Vector s(n);
        for (int i = 0; i < n; ++i) s[i] = std::exp(log_spot(k, p, i));
        return s;
    }
};

inline PathSet simulate_paths(const MarketModel& model, const Vector& s0, int steps, std::size_t paths,
                              std::uint64_t seed) {
    require_valid(model);
    if (steps < 1 || paths < 1) fail(ErrorCode::InvalidArgument, "simulation needs steps >= 1 and paths >= 1");
    if (s0.size() != model.n) fail(ErrorCode::DimensionMismatch, "spot must have n entries");
    if (s0.minCoeff() <= 0.0) fail(ErrorCode::InvalidArgument, "spot must be positive");
    const int n = model.n;
    const auto nn = static_cast<std::size_t>(n);
    PathSet ps;
    ps.n = n;
    ps.paths = paths;
    ps.steps = steps;
    const double dt = model.horizon / steps;
    for (int k = 0; k <= steps; ++k) ps.times.push_back(k == steps ? model.horizon : k * dt);

    std::vector<Vector> drift(static_cast<std::size_t>(steps));
    std::vector<Matrix> chol(static_cast<std::size_t>(steps));
    std::vector<Matrix> sig_inv(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        const double a = ps.times[static_cast<std::size_t>(k)], b = ps.times[static_cast<std::size_t>(k) + 1];
        Matrix cov = model.vol.integrate(a, b, [](const Matrix& s) -> Matrix { return s * s.transpose(); });
        const double r_int = model.rate.integral(a, b);
        Vector d(n);
        for (int i = 0; i < n; ++i) d[i] = r_int - 0.5 * cov(i, i);
        drift[static_cast<std::size_t>(k)] = d;
        chol[static_cast<std::size_t>(k)] = Eigen::LLT<Matrix>(cov).matrixL();
        ps.sigma.push_back(model.vol.average(a, b));
        sig_inv[static_cast<std::size_t>(k)] = ps.sigma.back().inverse();
    }

    ps.log_s.assign((static_cast<std::size_t>(steps) + 1) * paths * nn, 0.0);
    ps.dw.assign(static_cast<std::size_t>(steps) * paths * nn, 0.0);
    const std::size_t batches = (paths + kBatch - 1) / kBatch;
    parallel_for(batches, [&](std::size_t b) {
        auto gen = substream(seed, b);
        std::normal_distribution<double> normal;
        Vector z(n), shock(n), w(n);
        const std::size_t p_end = std::min(paths, (b + 1) * kBatch);
        for (std::size_t p = b * kBatch; p < p_end; ++p) {
            for (int i = 0; i < n; ++i) ps.log_s[p * nn + static_cast<std::size_t>(i)] = std::log(s0[i]);
            for (int k = 0; k < steps; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                for (int i = 0; i < n; ++i) z[i] = normal(gen);
                shock = chol[kk] * z;
                w = sig_inv[kk] * shock;
                for (int i = 0; i < n; ++i) {
                    const std::size_t at = (kk * paths + p) * nn + static_cast<std::size_t>(i);
                    ps.log_s[at + paths * nn] = ps.log_s[at] + drift[kk][i] + shock[i];
                    ps.dw[at] = w[i];
                }
            }
        }
    });
    return ps;
}

}  // namespace ambig::oracle
