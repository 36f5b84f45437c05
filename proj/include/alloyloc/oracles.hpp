#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "charfun.hpp"
#include "distribution.hpp"
#include "errors.hpp"

// Brute-force reference computations for small instances. They share no code
// paths with the production routines they are compared against.

namespace alloyloc::oracle {

/// Exact law of S = Σ_n 𝔞_n Σ_{x∈X_n} ω_x for a discrete amplitude law, as
/// (value, probability) atoms sorted by value. Enumerates every configuration.
inline std::vector<std::pair<double, double>> exact_law(const AmplitudeDistribution& dist,
                                                        const charfun::ShellWeights& w) {
    const auto atoms = dist.atoms();
    if (atoms.size() != 2) throw ConfigError("exact_law needs a two-point amplitude law");
    std::vector<double> coef;
    for (const auto& t : w.terms)
        for (int i = 0; i < static_cast<int>(t.K); ++i) coef.push_back(t.a);
    if (coef.size() > 24) throw ConfigError("exact_law: too many sites to enumerate");
    const std::size_t m = coef.size();
    std::vector<std::pair<double, double>> out;
    out.reserve(std::size_t{1} << m);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        double v = 0, p = 1;
        for (std::size_t j = 0; j < m; ++j) {
            const auto& at = atoms[(mask >> j) & 1];
            v += coef[j] * at.first;
            p *= at.second;
        }
        out.emplace_back(v, p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// P{S ∈ [lo, hi]} from a sorted exact law.
inline double interval_mass(const std::vector<std::pair<double, double>>& law, double lo, double hi) {
    auto first = std::lower_bound(law.begin(), law.end(), std::make_pair(lo, -1.0));
    double s = 0;
    for (auto it = first; it != law.end() && it->first <= hi; ++it) s += it->second;
    return s;
}

/// E exp(iτ S_n) for the sign chain by summing over all 2^n paths.
inline std::complex<double> markov_char_fun_enumerated(double q, int n, double tau) {
    if (n > 24) throw ConfigError("markov enumeration limited to n <= 24");
    std::complex<double> s = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        double p = 0.5, sum = 0;
        int prev = 0;
        for (int k = 0; k < n; ++k) {
            const int x = ((mask >> k) & 1) ? 1 : -1;
            if (k > 0) p *= (x == prev) ? (1 - q) : q;
            sum += x;
            prev = x;
        }
        s += p * std::polar(1.0, tau * sum);
    }
    return s;
}

} // namespace alloyloc::oracle
