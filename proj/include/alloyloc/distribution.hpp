#pragma once
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace alloyloc {

enum class DistKind { bernoulli_sym, bernoulli_p, uniform01 };

/// Law of the IID amplitudes: ±1 coin, {0,1} coin with P{1} = p, or uniform on [0,1].
class AmplitudeDistribution {
public:
    AmplitudeDistribution() = default;

    static AmplitudeDistribution bernoulli_sym() { return AmplitudeDistribution(DistKind::bernoulli_sym, 0.5); }
    static AmplitudeDistribution bernoulli_p(double p) {
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("bernoulli_p needs p in (0, 1]");
        return AmplitudeDistribution(DistKind::bernoulli_p, p);
    }
    static AmplitudeDistribution uniform01() { return AmplitudeDistribution(DistKind::uniform01, 0.5); }

    /// Accepts "bernoulli_sym", "bernoulli-sym", "bernoulli_p", "uniform01" (dashes or underscores).
    static AmplitudeDistribution parse(std::string name, double p = 0.5) {
        for (auto& c : name)
            if (c == '-') c = '_';
        if (name == "bernoulli_sym") return bernoulli_sym();
        if (name == "bernoulli_p") return bernoulli_p(p);
        if (name == "uniform01" || name == "uniform") return uniform01();
        throw ConfigError("unknown amplitude distribution '" + name + "'");
    }

    DistKind kind() const { return kind_; }
    double p() const { return p_; }
    bool discrete() const { return kind_ != DistKind::uniform01; }

    std::string name() const {
        switch (kind_) {
        case DistKind::bernoulli_sym: return "bernoulli_sym";
        case DistKind::bernoulli_p: return "bernoulli_p";
        default: return "uniform01";
        }
    }

    double support_min() const { return kind_ == DistKind::bernoulli_sym ? -1.0 : 0.0; }
    double support_max() const { return 1.0; }

    double mean() const {
        switch (kind_) {
        case DistKind::bernoulli_sym: return 0.0;
        case DistKind::bernoulli_p: return p_;
        default: return 0.5;
        }
    }
    /// σ̄² = E ω².
    double second_moment() const {
        switch (kind_) {
        case DistKind::bernoulli_sym: return 1.0;
        case DistKind::bernoulli_p: return p_;
        default: return 1.0 / 3.0;
        }
    }
    /// μ̄₃ = E |ω|³.
    double abs_third_moment() const {
        switch (kind_) {
        case DistKind::bernoulli_sym: return 1.0;
        case DistKind::bernoulli_p: return p_;
        default: return 0.25;
        }
    }
    /// Centered variance σ².
    double variance() const {
        switch (kind_) {
        case DistKind::bernoulli_sym: return 1.0;
        case DistKind::bernoulli_p: return p_ * (1.0 - p_);
        default: return 1.0 / 12.0;
        }
    }
    /// Centered absolute third moment m₃ = E|ω − Eω|³.
    double centered_abs_third_moment() const {
        switch (kind_) {
        case DistKind::bernoulli_sym: return 1.0;
        case DistKind::bernoulli_p: return p_ * (1.0 - p_) * ((1.0 - p_) * (1.0 - p_) + p_ * p_);
        default: return 1.0 / 32.0;
        }
    }
    bool degenerate() const { return variance() <= 0.0; }

    /// Atoms of a discrete law (values and probabilities); empty for uniform01.
    std::vector<std::pair<double, double>> atoms() const {
        switch (kind_) {
        case DistKind::bernoulli_sym: return {{-1.0, 0.5}, {1.0, 0.5}};
        case DistKind::bernoulli_p: return {{0.0, 1.0 - p_}, {1.0, p_}};
        default: return {};
        }
    }

    double sample(Stream& s) const {
        const double u = s.uniform();
        switch (kind_) {
        case DistKind::bernoulli_sym: return u < 0.5 ? -1.0 : 1.0;
        case DistKind::bernoulli_p: return u < p_ ? 1.0 : 0.0;
        default: return u;
        }
    }

    /// φ(t) = E e^{itω}.
    std::complex<double> char_fun(double t) const {
        switch (kind_) {
        case DistKind::bernoulli_sym: return {std::cos(t), 0.0};
        case DistKind::bernoulli_p: return (1.0 - p_) + p_ * std::polar(1.0, t);
        default: return std::polar(sinc(0.5 * t), 0.5 * t);
        }
    }

    /// ln |φ(t)|⁻¹, accurate near t = 0 and +∞ at exact zeros.
    double log_inv_modulus(double t) const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        switch (kind_) {
        case DistKind::bernoulli_sym: {
            const double c = std::abs(std::cos(t));
            if (c == 0.0) return inf;
            if (c < 0.5) return -std::log(c);
            const double s = std::sin(t);
            return -0.5 * std::log1p(-s * s);
        }
        case DistKind::bernoulli_p: {
            const double s = std::sin(0.5 * t);
            const double q = 4.0 * p_ * (1.0 - p_) * s * s;
            if (q < 0.5) return -0.5 * std::log1p(-q);
            const double m = std::abs(char_fun(t));
            return m == 0.0 ? inf : -std::log(m);
        }
        default: {
            const double x = 0.5 * std::abs(t);
            if (x < 1e-2) {
                const double x2 = x * x;
                return x2 / 6.0 + x2 * x2 / 180.0 + x2 * x2 * x2 / 2835.0;
            }
            const double m = std::abs(std::sin(x)) / x;
            return m == 0.0 ? inf : -std::log(m);
        }
        }
    }

private:
    AmplitudeDistribution(DistKind k, double p) : kind_(k), p_(p) {}
    static double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

    DistKind kind_ = DistKind::bernoulli_sym;
    double p_ = 0.5;
};

} // namespace alloyloc
