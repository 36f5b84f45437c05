#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "lattice.hpp"
#include "model.hpp"
#include "potential.hpp"
#include "rng.hpp"

namespace alloyloc::spectral {

inline constexpr std::size_t max_box_sites = 4096;

/// H_Λ = −Δ_Λ + gV on a box, Dirichlet (couplings to the exterior deleted).
struct HamiltonianMatrix {
    Ball box;
    double g = 0;
    Eigen::MatrixXd matrix;
    std::vector<double> potential;  ///< V(x) in the lexicographic order of the box
    double tail_error = 0;

    std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// −Δ_Λ = 2d·I − adjacency.
inline Eigen::MatrixXd neg_laplacian(const Ball& box) {
    if (box.size() > max_box_sites) throw ConfigError("box exceeds the dense-solver cap of 4096 sites");
    const auto n = static_cast<Eigen::Index>(box.size());
    const int d = box.dim();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        H(i, i) = 2.0 * d;
        const Site x = box.site_at(static_cast<std::size_t>(i));
        for (int k = 0; k < d; ++k) {
            Site y = x;
            y[static_cast<std::size_t>(k)] += 1;
            if (!box.contains(y)) continue;
            const auto j = static_cast<Eigen::Index>(box.index_of(y));
            H(i, j) = H(j, i) = -1.0;
        }
    }
    return H;
}

inline HamiltonianMatrix hamiltonian_from_potential(const Ball& box, const std::vector<double>& V, double g) {
    if (V.size() != box.size()) throw ConfigError("potential length does not match the box");
    HamiltonianMatrix h;
    h.box = box;
    h.g = g;
    h.matrix = neg_laplacian(box);
    h.potential = V;
    for (std::size_t i = 0; i < V.size(); ++i) h.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += g * V[i];
    return h;
}

inline HamiltonianMatrix assemble_hamiltonian(const Ball& box, const InteractionPotential& pot, const FieldSample& field,
                                              double g, PotentialOptions opt = {}) {
    double tail = 0;
    const auto V = cumulative_potential_values(pot, field, enumerate_ball(box), opt, &tail);
    auto h = hamiltonian_from_potential(box, V, g);
    h.tail_error = tail;
    return h;
}

/// Eigenpairs with ascending eigenvalues; each eigenvector is signed so that its
/// first entry of largest magnitude is positive.
struct SpectralDecomposition {
    Ball box;
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    double max_residual = 0;
    double orthonormality_defect = 0;

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
    double psi(std::size_t j, const Site& x) const {
        return vectors(static_cast<Eigen::Index>(box.index_of(x)), static_cast<Eigen::Index>(j));
    }
    /// dist(Σ, E).
    double distance(double E) const {
        const double* b = values.data();
        const double* e = b + values.size();
        const double* it = std::lower_bound(b, e, E);
        double d = std::numeric_limits<double>::infinity();
        if (it != e) d = std::min(d, *it - E);
        if (it != b) d = std::min(d, E - *(it - 1));
        return d;
    }
};

inline SpectralDecomposition eigensystem(const HamiltonianMatrix& h) {
    const Eigen::MatrixXd& H = h.matrix;
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw ConfigError("Hamiltonian is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed to converge");
    SpectralDecomposition s;
    s.box = h.box;
    s.values = es.eigenvalues();
    s.vectors = es.eigenvectors();
    for (Eigen::Index j = 0; j < s.vectors.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1;
        for (Eigen::Index i = 0; i < s.vectors.rows(); ++i)
            if (std::abs(s.vectors(i, j)) > best + 1e-12) {
                best = std::abs(s.vectors(i, j));
                arg = i;
            }
        if (s.vectors(arg, j) < 0) s.vectors.col(j) *= -1.0;
    }
    const double norm = std::max(1.0, s.values.cwiseAbs().maxCoeff());
    const Eigen::MatrixXd R = H * s.vectors - s.vectors * s.values.asDiagonal();
    s.max_residual = R.colwise().norm().maxCoeff() / norm;
    s.orthonormality_defect =
        (s.vectors.transpose() * s.vectors - Eigen::MatrixXd::Identity(s.vectors.cols(), s.vectors.cols())).cwiseAbs().maxCoeff();
    if (s.max_residual > 1e-8 || s.orthonormality_defect > 1e-8)
        throw NumericalError("eigensystem failed its residual check");
    return s;
}

/// Eigenvalues only (faster; used inside Monte Carlo loops).
inline Eigen::VectorXd eigenvalues(const HamiltonianMatrix& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed to converge");
    return es.eigenvalues();
}

inline double spectral_distance(const Eigen::VectorXd& values, double E) {
    double d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < values.size(); ++i) d = std::min(d, std::abs(values(i) - E));
    return d;
}

inline constexpr double resonance_tolerance = 1e-12;

/// G(x, y; E) = Σ_j ψ_j(x)ψ_j(y)/(λ_j − E).
inline double green_function(const SpectralDecomposition& s, const Site& x, const Site& y, double E) {
    const double dist = s.distance(E);
    if (dist <= resonance_tolerance) throw ResonanceError("energy lies on the spectrum", dist);
    const auto ix = static_cast<Eigen::Index>(s.box.index_of(x));
    const auto iy = static_cast<Eigen::Index>(s.box.index_of(y));
    double g = 0;
    for (Eigen::Index j = 0; j < s.values.size(); ++j) g += s.vectors(ix, j) * s.vectors(iy, j) / (s.values(j) - E);
    return g;
}

/// Columns of (H − E)⁻¹ by LU; componentwise accurate far from the diagonal.
inline Eigen::MatrixXd green_columns(const HamiltonianMatrix& h, double E, const std::vector<Site>& ys) {
    const auto n = static_cast<Eigen::Index>(h.size());
    const Eigen::MatrixXd A = h.matrix - E * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(ys.size()));
    for (std::size_t k = 0; k < ys.size(); ++k) rhs(static_cast<Eigen::Index>(h.box.index_of(ys[k])), static_cast<Eigen::Index>(k)) = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    return lu.solve(rhs);
}

// ---------------------------------------------------------------------------
// Plateau decomposition

/// Sup-norm distances from y to the box range over [lo, hi].
struct DistanceRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

inline DistanceRange distance_range(const Ball& box, const Site& y) {
    DistanceRange r;
    for (int i = 0; i < box.dim(); ++i) {
        const std::int64_t off = std::abs(y[static_cast<std::size_t>(i)] - box.center[static_cast<std::size_t>(i)]);
        r.lo = std::max(r.lo, std::max<std::int64_t>(0, off - box.radius));
        r.hi = std::max(r.hi, off + box.radius);
    }
    return r;
}

/// True iff every distance from y to the box lies in one plateau [r_k, r_{k+1}).
inline bool is_plateau_site(const Ball& box, const InteractionPotential& pot, const Site& y) {
    const auto r = distance_range(box, y);
    return pot.plateau_index(static_cast<double>(r.lo)) == pot.plateau_index(static_cast<double>(r.hi));
}

struct PlateauDecomposition {
    std::vector<Site> plateau_sites;
    std::vector<double> plateau_weights;  ///< 𝔞 = u(dist) per plateau site
    double xi = 0;                        ///< g·Σ 𝔞_y ω_y
    HamiltonianMatrix H;
    HamiltonianMatrix H_tilde;
    double reconstruction_defect = 0;     ///< max |H − (H̃ + ξI)|
    std::uint64_t H_tilde_checksum = 0;
};

inline std::uint64_t matrix_checksum(const Eigen::MatrixXd& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::uint64_t bits;
            const double v = m(i, j) == 0.0 ? 0.0 : m(i, j);
            std::memcpy(&bits, &v, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xff;
                h *= 0x100000001b3ULL;
            }
        }
    return h;
}

inline PlateauDecomposition plateau_decompose(const Ball& box, const InteractionPotential& pot, const FieldSample& field,
                                              double g, const std::vector<Site>& exterior_region, PotentialOptions opt = {}) {
    if (!pot.piecewise()) throw ConfigError("plateau decomposition needs a piecewise-constant potential");
    if (opt.self == SelfTerm::exclude) throw ConfigError("plateau decomposition assumes the self-term is included");
    const std::int64_t R = opt.r_max > 0 ? opt.r_max : pot.r_max();
    PlateauDecomposition p;
    p.H = assemble_hamiltonian(box, pot, field, g, opt);
    for (const auto& y : exterior_region) {
        if (box.contains(y)) continue;
        const auto r = distance_range(box, y);
        if (r.hi > R) continue;  // only part of the box feels y
        if (!is_plateau_site(box, pot, y)) continue;
        const double a = pot(static_cast<double>(r.lo));
        p.plateau_sites.push_back(y);
        p.plateau_weights.push_back(a);
        p.xi += g * a * field.at(y);
    }
    p.H_tilde = p.H;
    const auto n = static_cast<Eigen::Index>(p.H.size());
    p.H_tilde.matrix.diagonal().array() -= p.xi;
    for (auto& v : p.H_tilde.potential) v -= (g != 0 ? p.xi / g : 0.0);
    p.reconstruction_defect =
        (p.H.matrix - (p.H_tilde.matrix + p.xi * Eigen::MatrixXd::Identity(n, n))).cwiseAbs().maxCoeff();
    p.H_tilde_checksum = matrix_checksum(p.H_tilde.matrix);
    return p;
}

// ---------------------------------------------------------------------------
// Density of states

struct DosHistogram {
    double lo = 0, hi = 0;
    std::vector<double> edges;
    std::vector<double> density;  ///< integrates to 1 over [lo, hi]
    std::size_t samples = 0;
    std::size_t eigenvalues = 0;
    std::size_t outside = 0;      ///< eigenvalues that fell outside [lo, hi]
    double integral = 0;
};

inline DosHistogram dos_histogram(const std::vector<std::vector<double>>& spectra, double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo)) throw ConfigError("DoS histogram needs bins >= 1 and hi > lo");
    if (spectra.size() < static_cast<std::size_t>(bins)) throw ConfigError("fewer samples than bins");
    DosHistogram h;
    h.lo = lo;
    h.hi = hi;
    h.samples = spectra.size();
    const double w = (hi - lo) / bins;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (const auto& s : spectra)
        for (double e : s) {
            ++h.eigenvalues;
            if (e < lo || e > hi) {
                ++h.outside;
                continue;
            }
            auto k = static_cast<std::size_t>(std::floor((e - lo) / w));
            counts[std::min(k, counts.size() - 1)] += 1;
        }
    const double total = static_cast<double>(h.eigenvalues - h.outside);
    for (int i = 0; i <= bins; ++i) h.edges.push_back(lo + w * i);
    for (double c : counts) h.density.push_back(total > 0 ? c / (total * w) : 0.0);
    for (double d : h.density) h.integral += d * w;
    return h;
}

/// Σ_i |Δ^{k+1} ρ_i| / h^k: the total variation of the k-th difference quotient.
inline double derivative_variation(const DosHistogram& h, int k) {
    std::vector<double> v = h.density;
    for (int j = 0; j <= k && v.size() > 1; ++j) {
        std::vector<double> nv(v.size() - 1);
        for (std::size_t i = 0; i + 1 < v.size(); ++i) nv[i] = v[i + 1] - v[i];
        v = std::move(nv);
    }
    const double w = (h.hi - h.lo) / static_cast<double>(h.density.size());
    double s = 0;
    for (double x : v) s += std::abs(x);
    return s / std::pow(w, k);
}

struct SmoothnessDiagnostic {
    int bins = 0;
    std::vector<double> coarse;   ///< variation of orders 0, 1, 2 at `bins`
    std::vector<double> fine;     ///< the same at 2·bins
    std::vector<double> ratio;    ///< fine / coarse
};

inline SmoothnessDiagnostic smoothness_diagnostic(const std::vector<std::vector<double>>& spectra, double lo, double hi,
                                                  int bins) {
    SmoothnessDiagnostic d;
    d.bins = bins;
    const auto c = dos_histogram(spectra, lo, hi, bins);
    const auto f = dos_histogram(spectra, lo, hi, 2 * bins);
    for (int k = 0; k <= 2; ++k) {
        d.coarse.push_back(derivative_variation(c, k));
        d.fine.push_back(derivative_variation(f, k));
        d.ratio.push_back(d.coarse.back() > 0 ? d.fine.back() / d.coarse.back() : std::numeric_limits<double>::infinity());
    }
    return d;
}

// ---------------------------------------------------------------------------
// Eigenfunction correlator

/// Σ_{λ_j∈[lo,hi]} |ψ_j(x)||ψ_j(y)|.
inline double efc_estimate(const SpectralDecomposition& s, const Site& x, const Site& y, double lo, double hi) {
    const auto ix = static_cast<Eigen::Index>(s.box.index_of(x));
    const auto iy = static_cast<Eigen::Index>(s.box.index_of(y));
    double sum = 0;
    for (Eigen::Index j = 0; j < s.values.size(); ++j)
        if (s.values(j) >= lo && s.values(j) <= hi) sum += std::abs(s.vectors(ix, j)) * std::abs(s.vectors(iy, j));
    return sum;
}

inline double efc_estimate(const SpectralDecomposition& s, const Site& x, const Site& y) {
    constexpr double big = std::numeric_limits<double>::infinity();
    return efc_estimate(s, x, y, -big, big);
}

} // namespace alloyloc::spectral
