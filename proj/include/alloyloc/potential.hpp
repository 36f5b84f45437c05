#pragma once
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <string>

#include "errors.hpp"

namespace alloyloc {

enum class PotentialKind { piecewise_constant, smooth_power };

/// Screening profile u(r). The piecewise kind is constant on [r_k, r_{k+1})
/// with height r_k^{-A}, r_k = floor(k^ups); the first plateau is extended
/// down to the origin so that u(0) = r_1^{-A} = 1.
class InteractionPotential {
public:
    static constexpr std::int64_t default_r_max = 65536;

    InteractionPotential() = default;

    static InteractionPotential piecewise(double A, double ups, std::int64_t r_max = default_r_max) {
        return InteractionPotential(PotentialKind::piecewise_constant, A, ups, r_max);
    }
    static InteractionPotential smooth(double A, std::int64_t r_max = default_r_max) {
        return InteractionPotential(PotentialKind::smooth_power, A, 1.0, r_max);
    }

    PotentialKind kind() const { return kind_; }
    double A() const { return A_; }
    double ups() const { return ups_; }
    std::int64_t r_max() const { return r_max_; }
    bool piecewise() const { return kind_ == PotentialKind::piecewise_constant; }

    /// Plateau start r_k = floor(k^ups), k >= 1. For the smooth kind r_k = k.
    std::int64_t plateau_start(std::int64_t k) const {
        if (k < 1) throw ConfigError("plateau index must be >= 1");
        if (ups_ == 1.0 || !piecewise()) return k;
        const double v = std::pow(static_cast<double>(k), ups_);
        if (v > 9.0e15) throw ConfigError("plateau radius overflows the integer range");
        // Guard against pow landing a hair below an exact integer.
        return static_cast<std::int64_t>(std::floor(v * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())));
    }

    /// The k with r ∈ [r_k, r_{k+1}); radii below r_1 belong to plateau 1.
    std::int64_t plateau_index(double r) const {
        if (!(r >= 0.0)) throw ConfigError("interaction radius must be nonnegative");
        if (ups_ == 1.0 || !piecewise()) return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(r)));
        auto k = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::pow(r, 1.0 / ups_))));
        while (k > 1 && static_cast<double>(plateau_start(k)) > r) --k;
        while (static_cast<double>(plateau_start(k + 1)) <= r) ++k;
        return k;
    }

    /// Plateau height 𝔞 = r_k^{-A}.
    double plateau_value(std::int64_t k) const { return std::pow(static_cast<double>(plateau_start(k)), -A_); }

    /// u(r).
    double operator()(double r) const {
        if (!(r >= 0.0)) throw ConfigError("interaction radius must be nonnegative");
        if (!piecewise()) return std::pow(std::max(r, 1.0), -A_);
        return plateau_value(plateau_index(r));
    }

    std::string describe() const {
        if (piecewise()) return "piecewise_constant(A=" + fmt(A_) + ",ups=" + fmt(ups_) + ")";
        return "smooth_power(A=" + fmt(A_) + ")";
    }

private:
    InteractionPotential(PotentialKind kind, double A, double ups, std::int64_t r_max)
        : kind_(kind), A_(A), ups_(ups), r_max_(r_max) {
        if (!(A > 0.0) || !std::isfinite(A)) throw ConfigError("decay exponent A must be positive and finite");
        if (kind == PotentialKind::piecewise_constant && !(ups >= 1.0 && std::isfinite(ups)))
            throw ConfigError("plateau growth exponent ups must be >= 1");
        if (r_max < 1) throw ConfigError("truncation radius r_max must be >= 1");
    }
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    PotentialKind kind_ = PotentialKind::piecewise_constant;
    double A_ = 2.0;
    double ups_ = 1.0;
    std::int64_t r_max_ = default_r_max;
};

} // namespace alloyloc
