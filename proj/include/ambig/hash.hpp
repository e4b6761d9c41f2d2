#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

#include "ambig/model.hpp"
#include "ambig/payoff.hpp"

namespace ambig {

/// 64-bit FNV-1a; stable across runs and platforms with IEEE doubles.
class Fnv1a {
public:
    Fnv1a& bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= c[i];
            h_ *= 1099511628211ULL;
        }
        return *this;
    }
    Fnv1a& add(double v) { return bytes(&v, sizeof v); }
    Fnv1a& add(std::int64_t v) { return bytes(&v, sizeof v); }
    Fnv1a& add(std::string_view s) { return bytes(s.data(), s.size()); }
    Fnv1a& add(const Vector& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) add(v[i]);
        return *this;
    }
    template <class T>
    Fnv1a& add(const PiecewiseConstant<T>& f) {
        for (double b : f.breaks()) add(b);
        for (const auto& v : f.values()) {
            if constexpr (std::is_same_v<T, double>) {
                add(v);
            } else {
                for (Eigen::Index i = 0; i < v.size(); ++i) add(v.data()[i]);
            }
        }
        return *this;
    }
    Fnv1a& add(const PayoffDescriptor& p) {
        add(static_cast<std::int64_t>(p.kind()));
        for (double k : p.knots()) add(k);
        for (double v : p.values()) add(v);
        add(p.slope_left()).add(p.slope_right()).add(p.weights());
        return *this;
    }
    std::uint64_t value() const noexcept { return h_; }

private:
    std::uint64_t h_ = 14695981039346656037ULL;
};

inline std::uint64_t problem_hash(const MarketModel& m, const ClaimSpec& c, const AmbiguityRectangle& a,
                                  const ConstraintSpec& k) {
    Fnv1a h;
    h.add(static_cast<std::int64_t>(m.n)).add(m.rate).add(m.vol).add(m.horizon);
    h.add(c.earnings).add(c.terminal).add(static_cast<std::int64_t>(c.style));
    if (c.early) h.add(c.early->first).add(c.early->second);
    h.add(a.kappa_lo).add(a.kappa_hi);
    h.add(static_cast<std::int64_t>(k.kind())).add(k.lo()).add(k.hi());
    return h.value();
}

}  // namespace ambig
