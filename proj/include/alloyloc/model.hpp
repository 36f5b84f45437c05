#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "distribution.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "potential.hpp"
#include "rng.hpp"

namespace alloyloc {

// ---------------------------------------------------------------------------
// Lattice sums of u

/// Σ_{0<|y|≤r} u(|y|) over Z^d, evaluated plateau by plateau.
inline double ball_sum(const InteractionPotential& pot, int d, std::int64_t r) {
    double total = 0.0;
    if (!pot.piecewise()) {
        for (std::int64_t m = 1; m <= r; ++m) total += sphere_count(d, m) * pot(static_cast<double>(m));
        return total;
    }
    for (std::int64_t k = 1;; ++k) {
        const std::int64_t lo = std::max<std::int64_t>(1, pot.plateau_start(k));
        if (lo > r) break;
        const std::int64_t hi = std::min(r, pot.plateau_start(k + 1) - 1);
        total += annulus_count(d, lo, hi) * pot.plateau_value(k);
    }
    return total;
}

/// Rigorous upper bound on Σ_{|y|>r} u(|y|). Sums plateaus exactly out to 16r,
/// then bounds the rest by comparing the sphere counts with ∫ s^{d-1-A} ds.
inline double tail_bound(const InteractionPotential& pot, int d, std::int64_t r) {
    const double A = pot.A();
    if (!(A > d)) throw ConfigError("u is not summable over Z^d unless A > d");
    const std::int64_t R2 = std::max<std::int64_t>(16 * r, r + 64);
    const double explicit_part = ball_sum(pot, d, R2) - ball_sum(pot, d, r);
    // For m > R2 on plateau k, u(m) ≤ (q·m)^{-A} with q ≤ r_k / (r_{k+1} − 1).
    double q = 1.0;
    if (pot.piecewise() && pot.ups() != 1.0) {
        const double k0 = static_cast<double>(pot.plateau_index(static_cast<double>(R2 + 1)));
        q = (std::pow(k0, pot.ups()) - 1.0) / std::pow(k0 + 1.0, pot.ups());
    }
    const double s0 = 2.0 * static_cast<double>(R2) + 1.0;
    const double c = (s0 - 1.0) / s0;
    const double remainder = std::pow(2.0 / (c * q), A) * d * std::pow(s0, d - A) / (A - d);
    return explicit_part + remainder;
}

/// Smallest power-of-two radius with tail_bound below tol, capped at cap.
inline std::int64_t default_truncation(const InteractionPotential& pot, int d, double tol = 1e-8,
                                       std::int64_t cap = InteractionPotential::default_r_max) {
    std::int64_t r = 8;
    while (r < cap && tail_bound(pot, d, r) >= tol) r *= 2;
    return std::min(r, cap);
}

// ---------------------------------------------------------------------------
// Field samples

enum class BackgroundKind { frozen_zero, frozen_value, sup_support, undefined };

struct Background {
    BackgroundKind kind = BackgroundKind::frozen_zero;
    double value = 0.0;

    static Background zero() { return {}; }
    static Background frozen(double v) { return {BackgroundKind::frozen_value, v}; }
    static Background sup_support(double sup) { return {BackgroundKind::sup_support, sup}; }
    static Background undefined() { return {BackgroundKind::undefined, 0.0}; }

    bool defined() const { return kind != BackgroundKind::undefined; }
    double resolved() const { return kind == BackgroundKind::frozen_zero ? 0.0 : value; }
};

inline std::string to_string(BackgroundKind k) {
    switch (k) {
    case BackgroundKind::frozen_zero: return "frozen_zero";
    case BackgroundKind::frozen_value: return "frozen_value";
    case BackgroundKind::sup_support: return "sup_support";
    default: return "undefined";
    }
}

inline BackgroundKind background_kind_from(const std::string& s) {
    if (s == "frozen_zero") return BackgroundKind::frozen_zero;
    if (s == "frozen_value") return BackgroundKind::frozen_value;
    if (s == "sup_support") return BackgroundKind::sup_support;
    if (s == "undefined") return BackgroundKind::undefined;
    throw ConfigError("unknown background kind '" + s + "'");
}

/// Explicit amplitudes on a finite domain plus a rule for every other site.
struct FieldSample {
    int dim = 1;
    std::map<Site, double> values;
    Background background;
    double support_min = -1.0;
    double support_max = 1.0;
    /// False when ω ≤ ω⁺ cannot be promoted to V(ω) ≤ V(ω⁺) (amplitudes of both signs).
    bool monotone_guaranteed = true;

    FieldSample() = default;
    explicit FieldSample(int d, Background bg = {}) : dim(d), background(bg) {
        if (d < 1) throw ConfigError("field dimension must be >= 1");
    }

    bool in_domain(const Site& x) const { return values.count(x) != 0; }
    bool defined_at(const Site& x) const { return in_domain(x) || background.defined(); }

    double at(const Site& x) const {
        if (auto it = values.find(x); it != values.end()) return it->second;
        if (!background.defined()) throw ConfigError("field undefined at " + x.str());
        return background.resolved();
    }

    void set(const Site& x, double v) {
        if (x.dim() != dim) throw ConfigError("field site dimension mismatch");
        values[x] = v;
    }

    /// Shift every explicit site by `by`.
    FieldSample translated(const Site& by) const {
        FieldSample out = *this;
        out.values.clear();
        for (const auto& [x, v] : values) out.values.emplace(x + by, v);
        return out;
    }

    friend bool operator==(const FieldSample& a, const FieldSample& b) {
        return a.dim == b.dim && a.values == b.values && a.background.kind == b.background.kind &&
               a.background.value == b.background.value && a.monotone_guaranteed == b.monotone_guaranteed;
    }
};

inline nlohmann::json to_json(const FieldSample& f) {
    nlohmann::json sites = nlohmann::json::array();
    for (const auto& [x, v] : f.values) sites.push_back({{"site", x.coords}, {"value", v}});
    return {{"dim", f.dim},
            {"background", {{"kind", to_string(f.background.kind)}, {"value", f.background.value}}},
            {"support", {f.support_min, f.support_max}},
            {"monotone_guaranteed", f.monotone_guaranteed},
            {"sites", sites}};
}

inline FieldSample field_from_json(const nlohmann::json& j) {
    try {
        FieldSample f(j.at("dim").get<int>());
        const auto& bg = j.at("background");
        f.background.kind = background_kind_from(bg.at("kind").get<std::string>());
        f.background.value = bg.value("value", 0.0);
        if (j.contains("support")) {
            f.support_min = j["support"].at(0).get<double>();
            f.support_max = j["support"].at(1).get<double>();
        }
        f.monotone_guaranteed = j.value("monotone_guaranteed", true);
        for (const auto& s : j.at("sites")) f.set(Site(s.at("site").get<std::vector<std::int64_t>>()), s.at("value").get<double>());
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed field sample: ") + e.what());
    }
}

/// IID draws on `region` (sorted, duplicates dropped), deterministic in the stream key.
inline FieldSample sample_field(const AmplitudeDistribution& dist, std::vector<Site> region, Stream stream,
                                Background bg = {}) {
    if (region.empty()) throw ConfigError("sample_field needs a nonempty region");
    std::sort(region.begin(), region.end());
    region.erase(std::unique(region.begin(), region.end()), region.end());
    FieldSample f(region.front().dim(), bg);
    f.support_min = dist.support_min();
    f.support_max = dist.support_max();
    f.monotone_guaranteed = dist.support_min() >= 0.0;
    if (bg.kind == BackgroundKind::sup_support) f.background.value = dist.support_max();
    for (const auto& x : region) f.set(x, dist.sample(stream));
    return f;
}

/// ω⁺: ω inside ball_plus, sup of the support elsewhere.
inline FieldSample plus_modification(const FieldSample& field, const Ball& ball_plus) {
    if (ball_plus.dim() != field.dim) throw ConfigError("plus_modification: dimension mismatch");
    FieldSample out(field.dim, Background::sup_support(field.support_max));
    out.support_min = field.support_min;
    out.support_max = field.support_max;
    out.monotone_guaranteed = field.support_min >= 0.0;
    for (std::size_t i = 0; i < ball_plus.size(); ++i) {
        const Site x = ball_plus.site_at(i);
        auto it = field.values.find(x);
        if (it == field.values.end()) throw ConfigError("plus_modification: field not explicit at " + x.str());
        out.values.emplace(x, it->second);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cumulative potential

enum class SelfTerm { include, exclude };

struct PotentialOptions {
    std::int64_t r_max = 0;  ///< 0 selects the potential's own truncation radius
    SelfTerm self = SelfTerm::include;
};

struct CumulativePotential {
    std::map<Site, double> values;
    double tail_error = 0.0;
    std::int64_t r_max = 0;
};

namespace detail {
inline std::int64_t resolve_r_max(const InteractionPotential& pot, const PotentialOptions& opt) {
    const std::int64_t r = opt.r_max > 0 ? opt.r_max : pot.r_max();
    if (r < 1) throw ConfigError("r_max must be >= r_1 = 1");
    return r;
}
} // namespace detail

/// V(x) for each target. The background contributes v·(number-weighted ball sum
/// minus the explicit domain), so wide truncation radii cost nothing extra.
inline std::vector<double> cumulative_potential_values(const InteractionPotential& pot, const FieldSample& field,
                                                       const std::vector<Site>& targets, PotentialOptions opt,
                                                       double* tail_error = nullptr) {
    const std::int64_t R = detail::resolve_r_max(pot, opt);
    const int d = field.dim;
    const bool self = opt.self == SelfTerm::include;
    const double v = field.background.resolved();
    double full_ball = 0.0, bg_tail = 0.0;
    if (v != 0.0) {
        full_ball = ball_sum(pot, d, R) + (self ? pot(0.0) : 0.0);
        bg_tail = std::abs(v) * tail_bound(pot, d, R);
    }

    std::vector<double> out(targets.size());
    double worst_tail = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const Site& x = targets[i];
        if (x.dim() != d) throw ConfigError("target dimension mismatch");
        double s = 0.0, covered = 0.0, beyond = 0.0;
        double in_ball = 0.0;
        for (const auto& [y, w] : field.values) {
            const std::int64_t r = sup_dist(x, y);
            if (r == 0 && !self) {
                in_ball += 1.0;
                continue;
            }
            const double u = pot(static_cast<double>(r));
            if (r <= R) {
                s += u * w;
                covered += u;
                in_ball += 1.0;
            } else {
                beyond += u * std::abs(w);
            }
        }
        if (!field.background.defined()) {
            if (in_ball < ball_count(d, R))
                throw ConfigError("field undefined inside the truncation ball of target " + x.str());
        } else if (v != 0.0) {
            s += v * (full_ball - covered);
        }
        out[i] = s;
        worst_tail = std::max(worst_tail, bg_tail + beyond);
    }
    if (tail_error) *tail_error = worst_tail;
    return out;
}

inline CumulativePotential cumulative_potential(const InteractionPotential& pot, const FieldSample& field,
                                                const std::vector<Site>& targets, PotentialOptions opt = {}) {
    CumulativePotential cp;
    cp.r_max = detail::resolve_r_max(pot, opt);
    const auto vals = cumulative_potential_values(pot, field, targets, opt, &cp.tail_error);
    for (std::size_t i = 0; i < targets.size(); ++i) cp.values[targets[i]] = vals[i];
    return cp;
}

/// Affine map ω_R ↦ V on a fixed target list, for repeated sampling of the
/// amplitudes on `random_sites` with everything else frozen:
///   V = base + W·ω_R.
struct InfluenceMatrix {
    std::vector<Site> targets;
    std::vector<Site> random_sites;
    std::vector<double> weights;  ///< row-major |targets| × |random_sites|
    std::vector<double> base;
    double tail_error = 0.0;

    double weight(std::size_t t, std::size_t j) const { return weights[t * random_sites.size() + j]; }

    template <class Vec>
    void apply(const Vec& omega, std::vector<double>& V) const {
        const std::size_t m = random_sites.size();
        V.assign(base.begin(), base.end());
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const double* row = weights.data() + t * m;
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += row[j] * omega[j];
            V[t] += s;
        }
    }
};

inline InfluenceMatrix influence_matrix(const InteractionPotential& pot, const FieldSample& frozen,
                                        std::vector<Site> targets, std::vector<Site> random_sites,
                                        PotentialOptions opt = {}) {
    InfluenceMatrix im;
    const std::int64_t R = detail::resolve_r_max(pot, opt);
    FieldSample fixed = frozen;
    for (const auto& y : random_sites) fixed.set(y, 0.0);
    im.base = cumulative_potential_values(pot, fixed, targets, opt, &im.tail_error);
    im.weights.resize(targets.size() * random_sites.size());
    for (std::size_t t = 0; t < targets.size(); ++t)
        for (std::size_t j = 0; j < random_sites.size(); ++j) {
            const std::int64_t r = sup_dist(targets[t], random_sites[j]);
            const bool skip = r > R || (r == 0 && opt.self == SelfTerm::exclude);
            im.weights[t * random_sites.size() + j] = skip ? 0.0 : pot(static_cast<double>(r));
        }
    im.targets = std::move(targets);
    im.random_sites = std::move(random_sites);
    return im;
}

} // namespace alloyloc
