#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"

namespace alloyloc::experiments {

/// Frozen-bath eigenvalue concentration: only the annulus B_{R_L} \ B_L is random.
struct WegnerConfig {
    std::int64_t L = 2;
    double tau = 2;
    double theta = 0.5;
    double E = 0;
    std::uint64_t trials = 10000;
    AmplitudeDistribution dist = AmplitudeDistribution::bernoulli_sym();
    double A = 2;
    double ups = 1;
    int d = 1;
    double g = 1;
    std::int64_t r_max = 0;       ///< potential truncation, 0 = potential default
    double level = 0.95;          ///< Wilson confidence level
    double C = 0;                 ///< absorbed constant; 0 = fit on a calibration sample
    std::uint64_t calibration_trials = 0;  ///< 0 = same as trials

    double R_real() const { return std::pow(static_cast<double>(L), tau); }
    std::int64_t R_L() const { return static_cast<std::int64_t>(std::floor(R_real() * (1 + 1e-12))); }
    double eps_L() const { return std::pow(R_real(), -A / (1 + theta)); }
    double beta() const { return 1 - (1 + theta) / tau; }

    InteractionPotential potential() const {
        return r_max > 0 ? InteractionPotential::piecewise(A, ups, r_max) : InteractionPotential::piecewise(A, ups);
    }

    void validate() const {
        if (L < 1) throw ConfigError("L must be >= 1");
        if (d < 1) throw ConfigError("d must be >= 1");
        if (!(tau > 1)) throw ConfigError("tau must exceed 1");
        if (!(theta > 0 && theta < tau - 1)) throw ConfigError("theta must lie in (0, tau - 1)");
        if (!(A > d)) throw ConfigError("A must exceed d");
        if (trials < 100) throw ConfigError("wegner_experiment needs at least 100 trials");
        if (R_L() <= L) throw ConfigError("annulus B_{R_L} \\ B_L is empty");
    }
};

struct WegnerPoint {
    double E = 0;
    Estimate estimate;
    std::optional<double> exact;
    double bound = 0;  ///< C·|B|·ε_L^β
    bool pass = false;
};

struct WegnerReport {
    WegnerConfig config;
    std::int64_t R_L = 0;
    double eps_L = 0;
    double beta = 0;
    std::size_t box_sites = 0;
    std::size_t annulus_sites = 0;
    double C = 0;
    bool C_fitted = false;
    double calibration_spacing = 0;
    std::size_t calibration_energies = 0;
    double tail_error = 0;
    std::vector<WegnerPoint> points;
    bool pass = false;
};

namespace detail {

inline RandomBox wegner_box(const WegnerConfig& cfg, const FieldSample& frozen) {
    if (frozen.dim != cfg.d) throw ConfigError("frozen background dimension does not match d");
    const Site o = Site::origin(cfg.d);
    return RandomBox(Ball(o, cfg.L), cfg.g, cfg.potential(), frozen, Annulus(o, cfg.L, cfg.R_L()).sites(),
                     PotentialOptions{cfg.r_max, SelfTerm::include});
}

inline std::vector<std::vector<double>> wegner_spectra(const RandomBox& rb, const AmplitudeDistribution& dist,
                                                       std::uint64_t seed, std::string_view tag, std::uint64_t trials,
                                                       unsigned threads) {
    return parallel_map<std::vector<double>>(trials, threads, [&](std::size_t i) {
        Stream s(seed, tag, i);
        const auto ev = spectral::eigenvalues(rb.hamiltonian(rb.draw(dist, s)));
        return std::vector<double>(ev.data(), ev.data() + ev.size());
    });
}

inline double sorted_distance(const std::vector<double>& v, double E) {
    auto it = std::lower_bound(v.begin(), v.end(), E);
    double d = std::numeric_limits<double>::infinity();
    if (it != v.end()) d = *it - E;
    if (it != v.begin()) d = std::min(d, E - *(it - 1));
    return d;
}

inline std::uint64_t count_hits(const std::vector<std::vector<double>>& spectra, double E, double eps) {
    std::uint64_t h = 0;
    for (const auto& v : spectra) h += sorted_distance(v, E) <= eps ? 1 : 0;
    return h;
}

} // namespace detail

/// Exact P{dist(Σ_B, E) ≤ ε_L} by enumerating every annulus configuration of a two-point law.
inline std::vector<double> wegner_exact(const WegnerConfig& cfg, const FieldSample& frozen,
                                        const std::vector<double>& energies, unsigned threads = 0) {
    cfg.validate();
    const auto rb = detail::wegner_box(cfg, frozen);
    const std::size_t k = rb.random_count();
    if (k > max_enumerated_sites) throw ConfigError("annulus too large for exhaustive enumeration");
    const double eps = cfg.eps_L();
    const std::uint64_t configs = std::uint64_t{1} << k;
    return chunked_sum(configs, energies.size(), threads, [&](std::uint64_t mask, std::vector<double>& acc) {
        double p = 0;
        const auto omega = configuration(cfg.dist, mask, k, &p);
        const auto ev = spectral::eigenvalues(rb.hamiltonian(omega));
        const std::vector<double> v(ev.data(), ev.data() + ev.size());
        for (std::size_t e = 0; e < energies.size(); ++e)
            if (detail::sorted_distance(v, energies[e]) <= eps) acc[e] += p;
    });
}

/// Monte Carlo over the given energies (one shared sample of spectra).
/// When cfg.C == 0 the constant is fitted as the maximum over a calibration
/// energy grid (spacing ε_L/4, independent stream) of upper_CI / (|B| ε_L^β).
inline WegnerReport wegner_scan(const WegnerConfig& cfg, const FieldSample& frozen, std::uint64_t seed,
                                const std::vector<double>& energies, bool with_exact = false, unsigned threads = 0) {
    cfg.validate();
    if (energies.empty()) throw ConfigError("no energies requested");
    WegnerReport rep;
    rep.config = cfg;
    rep.R_L = cfg.R_L();
    rep.eps_L = cfg.eps_L();
    rep.beta = cfg.beta();
    const auto rb = detail::wegner_box(cfg, frozen);
    rep.box_sites = rb.box.size();
    rep.annulus_sites = rb.random_count();
    rep.tail_error = rb.influence.tail_error;
    const double eps = rep.eps_L;
    const double scale = static_cast<double>(rep.box_sites) * std::pow(eps, rep.beta);

    if (cfg.C > 0) {
        rep.C = cfg.C;
    } else {
        rep.C_fitted = true;
        const std::uint64_t n = cfg.calibration_trials ? cfg.calibration_trials : cfg.trials;
        const auto cal = detail::wegner_spectra(rb, cfg.dist, seed, "wegner.calibration", n, threads);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& v : cal) {
            lo = std::min(lo, v.front());
            hi = std::max(hi, v.back());
        }
        lo -= eps;
        hi += eps;
        rep.calibration_spacing = eps / 4;
        const auto m = static_cast<std::size_t>(std::ceil((hi - lo) / rep.calibration_spacing)) + 1;
        rep.calibration_energies = m;
        double worst = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double E = lo + static_cast<double>(i) * rep.calibration_spacing;
            worst = std::max(worst, stats::wilson(detail::count_hits(cal, E, eps), n, cfg.level).hi);
        }
        rep.C = worst / scale;
    }

    const auto spectra = detail::wegner_spectra(rb, cfg.dist, seed, "wegner.trial", cfg.trials, threads);
    std::vector<double> exact;
    if (with_exact) exact = wegner_exact(cfg, frozen, energies, threads);
    rep.pass = true;
    for (std::size_t e = 0; e < energies.size(); ++e) {
        WegnerPoint pt;
        pt.E = energies[e];
        pt.estimate = make_estimate(detail::count_hits(spectra, pt.E, eps), cfg.trials, cfg.level);
        if (with_exact) pt.exact = exact[e];
        pt.bound = rep.C * scale;
        pt.pass = pt.estimate.ci.hi <= pt.bound;
        rep.pass = rep.pass && pt.pass;
        rep.points.push_back(pt);
    }
    return rep;
}

inline WegnerReport wegner_experiment(const WegnerConfig& cfg, const FieldSample& frozen, std::uint64_t seed,
                                      unsigned threads = 0) {
    return wegner_scan(cfg, frozen, seed, {cfg.E}, false, threads);
}

} // namespace alloyloc::experiments
