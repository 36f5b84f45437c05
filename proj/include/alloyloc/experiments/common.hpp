#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "../distribution.hpp"
#include "../errors.hpp"
#include "../lattice.hpp"
#include "../model.hpp"
#include "../parallel.hpp"
#include "../rng.hpp"
#include "../spectral.hpp"
#include "../stats.hpp"

namespace alloyloc::experiments {

/// A box Hamiltonian whose potential is affine in the amplitudes of a fixed
/// set of random sites: H(ω) = −Δ + g·diag(base + W ω).
struct RandomBox {
    Ball box;
    double g = 1;
    InfluenceMatrix influence;
    Eigen::MatrixXd laplacian;

    RandomBox(const Ball& b, double coupling, const InteractionPotential& pot, const FieldSample& frozen,
              std::vector<Site> random_sites, PotentialOptions opt = {})
        : box(b), g(coupling), influence(influence_matrix(pot, frozen, enumerate_ball(b), std::move(random_sites), opt)),
          laplacian(spectral::neg_laplacian(b)) {}

    std::size_t random_count() const { return influence.random_sites.size(); }

    std::vector<double> potential(const std::vector<double>& omega) const {
        std::vector<double> V;
        influence.apply(omega, V);
        return V;
    }

    spectral::HamiltonianMatrix hamiltonian(const std::vector<double>& omega) const {
        spectral::HamiltonianMatrix h;
        h.box = box;
        h.g = g;
        h.matrix = laplacian;
        h.potential = potential(omega);
        for (std::size_t i = 0; i < h.potential.size(); ++i)
            h.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += g * h.potential[i];
        h.tail_error = influence.tail_error;
        return h;
    }

    std::vector<double> draw(const AmplitudeDistribution& dist, Stream& s) const {
        std::vector<double> omega(random_count());
        for (auto& w : omega) w = dist.sample(s);
        return omega;
    }
};

/// Amplitudes for configuration `mask` of a two-point law (bit j picks the upper atom at site j).
inline std::vector<double> configuration(const AmplitudeDistribution& dist, std::uint64_t mask, std::size_t sites,
                                         double* probability = nullptr) {
    const auto atoms = dist.atoms();
    if (atoms.size() != 2) throw ConfigError("exact enumeration needs a two-point amplitude law");
    std::vector<double> omega(sites);
    double p = 1;
    for (std::size_t j = 0; j < sites; ++j) {
        const auto& a = atoms[(mask >> j) & 1];
        omega[j] = a.first;
        p *= a.second;
    }
    if (probability) *probability = p;
    return omega;
}

inline constexpr std::size_t max_enumerated_sites = 20;

/// Σ_i fn(i) for vector-valued fn, split into fixed chunks so the floating-point
/// summation order does not depend on the worker count.
template <class Fn>
std::vector<double> chunked_sum(std::uint64_t n, std::size_t width, unsigned threads, Fn&& fn) {
    const std::uint64_t chunk = 4096;
    const std::uint64_t chunks = (n + chunk - 1) / chunk;
    const auto partial = parallel_map<std::vector<double>>(chunks, threads, [&](std::size_t c) {
        std::vector<double> acc(width, 0.0);
        const std::uint64_t end = std::min<std::uint64_t>(n, (c + 1) * chunk);
        for (std::uint64_t i = c * chunk; i < end; ++i) fn(i, acc);
        return acc;
    });
    std::vector<double> out(width, 0.0);
    for (const auto& p : partial)
        for (std::size_t j = 0; j < width; ++j) out[j] += p[j];
    return out;
}

struct Estimate {
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    double p_hat = 0;
    stats::Interval ci;
    double level = 0.95;
};

inline Estimate make_estimate(std::uint64_t hits, std::uint64_t trials, double level) {
    Estimate e;
    e.hits = hits;
    e.trials = trials;
    e.level = level;
    e.p_hat = trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
    e.ci = stats::wilson(hits, trials, level);
    return e;
}

} // namespace alloyloc::experiments
