#pragma once
#include <cmath>
#include <limits>
#include <vector>

#include "common.hpp"

namespace alloyloc::experiments {

/// Box B_L(0) in a thermal bath: amplitudes on B_{L+bath}(0) are drawn afresh
/// for every sample, everything beyond is frozen at zero.
struct EnsembleConfig {
    std::int64_t L = 6;
    int d = 1;
    double A = 2;
    double ups = 1;
    double g = 1;
    AmplitudeDistribution dist = AmplitudeDistribution::uniform01();
    std::int64_t bath = 0;  ///< 0 = 2L
    std::int64_t r_max = 0;

    std::int64_t bath_width() const { return bath > 0 ? bath : 2 * L; }
    InteractionPotential potential() const {
        return r_max > 0 ? InteractionPotential::piecewise(A, ups, r_max) : InteractionPotential::piecewise(A, ups);
    }
    void validate() const {
        if (L < 1 || d < 1) throw ConfigError("ensemble needs L >= 1 and d >= 1");
        if (!(A > d)) throw ConfigError("A must exceed d");
    }
    RandomBox box() const {
        validate();
        const Site o = Site::origin(d);
        return RandomBox(Ball(o, L), g, potential(), FieldSample(d), enumerate_ball(Ball(o, L + bath_width())),
                         PotentialOptions{r_max, SelfTerm::include});
    }
};

inline std::vector<std::vector<double>> sample_spectra(const EnsembleConfig& cfg, std::uint64_t samples, std::uint64_t seed,
                                                       unsigned threads = 0) {
    const auto rb = cfg.box();
    return parallel_map<std::vector<double>>(samples, threads, [&](std::size_t i) {
        Stream s(seed, "ensemble.spectrum", i);
        const auto ev = spectral::eigenvalues(rb.hamiltonian(rb.draw(cfg.dist, s)));
        return std::vector<double>(ev.data(), ev.data() + ev.size());
    });
}

struct EfcProfile {
    std::vector<std::int64_t> distances;
    std::vector<double> mean;    ///< ensemble average of EFC(0, r·e₁)
    std::vector<double> std_error;  ///< standard error of the mean
    std::uint64_t samples = 0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

/// Ensemble-averaged eigenfunction correlator Σ_{λ_j ∈ [lo, hi]} |ψ_j(0)||ψ_j(r e₁)|.
inline EfcProfile efc_profile(const EnsembleConfig& cfg, const std::vector<std::int64_t>& distances, std::uint64_t samples,
                              std::uint64_t seed, double lo = -std::numeric_limits<double>::infinity(),
                              double hi = std::numeric_limits<double>::infinity(), unsigned threads = 0) {
    for (auto r : distances)
        if (r < 0 || r > cfg.L) throw ConfigError("EFC distance must lie in [0, L]");
    if (samples < 2) throw ConfigError("EFC needs at least 2 samples");
    const auto rb = cfg.box();
    const Site o = Site::origin(cfg.d);
    const auto rows = parallel_map<std::vector<double>>(samples, threads, [&](std::size_t i) {
        Stream s(seed, "ensemble.efc", i);
        const auto sd = spectral::eigensystem(rb.hamiltonian(rb.draw(cfg.dist, s)));
        std::vector<double> v;
        for (auto r : distances) v.push_back(spectral::efc_estimate(sd, o, Site::axis(cfg.d, r), lo, hi));
        return v;
    });
    EfcProfile p;
    p.distances = distances;
    p.samples = samples;
    p.lo = lo;
    p.hi = hi;
    const double n = static_cast<double>(samples);
    for (std::size_t k = 0; k < distances.size(); ++k) {
        double m = 0, q = 0;
        for (const auto& row : rows) m += row[k];
        m /= n;
        for (const auto& row : rows) q += (row[k] - m) * (row[k] - m);
        p.mean.push_back(m);
        p.std_error.push_back(std::sqrt(q / (n - 1) / n));
    }
    return p;
}

} // namespace alloyloc::experiments
