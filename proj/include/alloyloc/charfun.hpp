#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "distribution.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "model.hpp"
#include "potential.hpp"
#include "stats.hpp"

namespace alloyloc::charfun {

using cplx = std::complex<double>;
inline constexpr double inf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Shell weights and exact products

struct ShellTerm {
    std::int64_t n = 1;
    double K = 0;  ///< number of sites in the shell
    double a = 0;  ///< 𝔞_n = r_n^{-A}
};

/// Shells n = M..N of a centred shell decomposition; S_{M,N} = Σ_n 𝔞_n Σ_{x∈X_n} ω_x.
struct ShellWeights {
    std::vector<ShellTerm> terms;
    int d = 1;
    double A = 2;
    double ups = 1;
    std::int64_t M = 1;
    std::int64_t N = 1;

    double total_sites() const {
        double s = 0;
        for (const auto& t : terms) s += t.K;
        return s;
    }
    /// Σ K_n 𝔞_n: the largest frequency present in φ_S for amplitudes in [-1, 1].
    double max_frequency() const {
        double s = 0;
        for (const auto& t : terms) s += t.K * t.a;
        return s;
    }
    double a_of(std::int64_t n) const { return std::pow(static_cast<double>(r_of(n)), -A); }
    std::int64_t r_of(std::int64_t n) const { return InteractionPotential::piecewise(A, ups).plateau_start(n); }
};

inline ShellWeights make_shell_weights(const InteractionPotential& pot, int d, std::int64_t M, std::int64_t N) {
    if (M < 1 || N < M) throw ConfigError("shell range needs 1 <= M <= N");
    ShellWeights w;
    w.d = d;
    w.A = pot.A();
    w.ups = pot.piecewise() ? pot.ups() : 1.0;
    w.M = M;
    w.N = N;
    const auto shells = shell_decomposition(Site::origin(d), pot, N);
    for (std::int64_t n = M; n <= N; ++n) {
        const auto& s = shells[static_cast<std::size_t>(n - 1)];
        w.terms.push_back({n, s.count, s.weight});
    }
    return w;
}

inline cplx single_char_fun(const AmplitudeDistribution& dist, double t) { return dist.char_fun(t); }

struct CharFunGrid {
    std::vector<double> t;
    std::vector<cplx> values;
    std::vector<double> log_inv_modulus;
    /// Σ over shells beyond N of K_n σ̄² 𝔞_n² t²/2 at the largest |t| of the grid.
    double truncation_bound = 0;
};

/// ln |φ_S(t)|⁻¹ = Σ K_n ln |φ_X(𝔞_n t)|⁻¹.
inline double log_inv_modulus(const AmplitudeDistribution& dist, const ShellWeights& w, double t) {
    double s = 0;
    for (const auto& term : w.terms) {
        const double l = dist.log_inv_modulus(term.a * t);
        if (l == inf) return inf;
        s += term.K * l;
    }
    return s;
}

/// Bound on Σ_{n>N} K_n 𝔞_n², comparing shell weights with the potential of exponent 2A.
inline double dropped_square_weight(const ShellWeights& w) {
    if (!(2.0 * w.A > w.d)) return inf;
    return tail_bound(InteractionPotential::piecewise(2.0 * w.A, w.ups), w.d, w.r_of(w.N));
}

inline CharFunGrid shell_product(const AmplitudeDistribution& dist, const ShellWeights& w, const std::vector<double>& grid) {
    CharFunGrid out;
    out.t = grid;
    out.values.resize(grid.size());
    out.log_inv_modulus.resize(grid.size());
    double tmax = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        tmax = std::max(tmax, std::abs(t));
        double lim = 0, phase = 0;
        for (const auto& term : w.terms) {
            const double l = dist.log_inv_modulus(term.a * t);
            if (l == inf) {
                lim = inf;
                break;
            }
            lim += term.K * l;
            phase += term.K * std::arg(dist.char_fun(term.a * t));
        }
        out.log_inv_modulus[i] = lim;
        out.values[i] = lim == inf ? cplx(0, 0) : std::polar(std::exp(-lim), std::remainder(phase, 2 * std::numbers::pi));
    }
    out.truncation_bound = dist.second_moment() * tmax * tmax / 2.0 * dropped_square_weight(w);
    return out;
}

// ---------------------------------------------------------------------------
// Elementary inequalities

struct TaylorCheck {
    double lhs = 0;
    double rhs = 0;
    bool holds = true;
};

/// |e^{is} − Σ_{k≤n} (is)^k/k!| against |s|^{n+1}/(n+1)!.
inline TaylorCheck taylor_remainder_check(int n, double s) {
    if (n < 0) throw ConfigError("taylor_remainder_check needs n >= 0");
    TaylorCheck c;
    double fact = 1;
    for (int k = 2; k <= n + 1; ++k) fact *= k;
    c.rhs = std::pow(std::abs(s), n + 1) / fact;
    std::complex<long double> rem = 0;
    if (std::abs(s) <= 2.0) {
        // Sum the tail directly: avoids cancellation when the remainder is tiny.
        std::complex<long double> term = 1;
        for (int k = 1; k <= n; ++k) term *= std::complex<long double>(0, s) / static_cast<long double>(k);
        for (int k = n + 1; k < n + 80; ++k) {
            term *= std::complex<long double>(0, s) / static_cast<long double>(k);
            rem += term;
            if (std::abs(term) < 1e-40L) break;
        }
    } else {
        std::complex<long double> term = 1, partial = 1;
        for (int k = 1; k <= n; ++k) {
            term *= std::complex<long double>(0, s) / static_cast<long double>(k);
            partial += term;
        }
        rem = std::polar(1.0L, static_cast<long double>(s)) - partial;
    }
    c.lhs = static_cast<double>(std::abs(rem));
    c.holds = c.lhs <= c.rhs * (1 + 1e-12) + 1e-300;
    return c;
}

/// Certified quadratic regime: |t| ≤ min(σ²/m₃, (3/5)σ^{1/2}).
inline double quadratic_threshold(const AmplitudeDistribution& dist) {
    if (dist.degenerate()) throw ConfigError("degenerate amplitude distribution (zero variance)");
    const double s2 = dist.variance();
    return std::min(s2 / dist.centered_abs_third_moment(), 0.6 * std::pow(s2, 0.25));
}

struct QuadraticBound {
    bool bound_applies = false;
    double lower = 0;   ///< σ²t²/4
    double exact = 0;   ///< ln |φ(t)|⁻¹
    bool holds = true;  ///< exact ≥ lower whenever the bound applies
};

inline QuadraticBound quadratic_log_bound(const AmplitudeDistribution& dist, double t) {
    QuadraticBound q;
    const double thr = quadratic_threshold(dist);
    q.bound_applies = std::abs(t) <= thr;
    q.lower = dist.variance() * t * t / 4.0;
    q.exact = dist.log_inv_modulus(t);
    q.holds = !q.bound_applies || q.exact >= q.lower * (1 - 1e-12);
    return q;
}

// ---------------------------------------------------------------------------
// Main-lemma decomposition

/// Smallest n ≥ 1 with 𝔞_n|t| ≤ t₀, or 0 when already 𝔞_1|t| ≤ t₀.
inline std::int64_t head_size(const ShellWeights& w, double t, double t0) {
    const double at = std::abs(t);
    if (w.a_of(1) * at <= t0) return 0;
    // 𝔞_n = r_n^{-A} ≤ t₀/|t|  ⟺  r_n ≥ (|t|/t₀)^{1/A}.
    const double rmin = std::pow(at / t0, 1.0 / w.A);
    const auto pot = InteractionPotential::piecewise(w.A, w.ups);
    std::int64_t n = std::max<std::int64_t>(1, pot.plateau_index(std::floor(rmin)));
    while (n > 1 && w.a_of(n - 1) * at <= t0) --n;
    while (w.a_of(n) * at > t0) ++n;
    return n;
}

struct BoundReport {
    std::int64_t N_t = 0;
    double T_N = 0;       ///< t₀/𝔞_N
    double T_eps = 0;     ///< ε⁻¹ ln² ε⁻¹ (concentration only)
    double S1 = 0;        ///< head Σ_{n≤N_t}
    double S2 = 0;        ///< tail Σ_{n>N_t}
    double total = 0;
    double S2_quadratic_lower = 0;  ///< (σ²/4) Σ_{n>N_t} K_n 𝔞_n² t²
    double C5 = 0;        ///< S₂ / |t|^{d/A}
    bool tail_empty = false;
    bool holds = true;    ///< S₂ ≥ quadratic lower bound and S₁ + S₂ = total
};

inline BoundReport tail_bound_S2(const AmplitudeDistribution& dist, const ShellWeights& w, double t, double t0 = 0) {
    if (t0 <= 0) t0 = quadratic_threshold(dist);
    if (t0 > quadratic_threshold(dist) * (1 + 1e-12))
        throw ConfigError("t0 exceeds the certified quadratic regime of the distribution");
    BoundReport r;
    r.N_t = head_size(w, t, t0);
    r.T_N = t0 / w.a_of(w.N);
    const double c = dist.variance() / 4.0;
    for (const auto& term : w.terms) {
        const double l = term.K * dist.log_inv_modulus(term.a * t);
        if (term.n <= r.N_t) {
            r.S1 += l;
        } else {
            r.S2 += l;
            r.S2_quadratic_lower += c * term.K * term.a * term.a * t * t;
        }
    }
    r.total = log_inv_modulus(dist, w, t);
    r.tail_empty = r.N_t >= w.N;
    r.C5 = t != 0 ? r.S2 / std::pow(std::abs(t), w.d / w.A) : 0;
    r.holds = r.S2 >= r.S2_quadratic_lower * (1 - 1e-10) &&
              (r.total == inf || std::abs(r.S1 + r.S2 - r.total) <= 1e-10 * std::max(1.0, r.total));
    return r;
}

struct DecayFit {
    stats::LinearFit fit;
    std::vector<double> t;
    std::vector<double> log_inv_modulus;
    std::int64_t n_max = 0;
    double truncation_bound = 0;
};

/// Number of shells needed so that 𝔞_n t_max ≤ tol, capped.
inline std::int64_t shells_for(double A, double ups, double tmax, double tol = 1e-3, std::int64_t cap = 200000) {
    const double r = std::pow(tmax / tol, 1.0 / A);
    const auto k = InteractionPotential::piecewise(A, ups).plateau_index(std::min(r, 1e15));
    return std::clamp<std::int64_t>(k + 1, 1, cap);
}

/// Least-squares slope of ln ln|φ_S(t)|⁻¹ against ln t on a log-spaced grid.
/// Grid points where φ_S vanishes exactly are skipped.
inline DecayFit decay_fit(const AmplitudeDistribution& dist, const InteractionPotential& pot, int d, double tmin,
                          double tmax, int points, std::int64_t n_max = 0) {
    if (!(tmin > 0 && tmax > tmin) || points < 2) throw ConfigError("decay_fit needs 0 < tmin < tmax and >= 2 points");
    DecayFit out;
    out.n_max = n_max > 0 ? n_max : shells_for(pot.A(), pot.ups(), tmax);
    const auto w = make_shell_weights(pot, d, 1, out.n_max);
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] = tmin * std::pow(tmax / tmin, static_cast<double>(i) / (points - 1));
    const auto cf = shell_product(dist, w, grid);
    out.truncation_bound = cf.truncation_bound;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double l = cf.log_inv_modulus[i];
        if (!(l > 0) || l == inf) continue;
        x.push_back(std::log(grid[i]));
        y.push_back(std::log(l));
    }
    out.t = grid;
    out.log_inv_modulus = cf.log_inv_modulus;
    out.fit = stats::least_squares(x, y);
    return out;
}

struct PartialLogBound {
    double value = 0;             ///< Σ_{n=M}^{N} K_n ln|φ_X(𝔞_n t)|⁻¹
    double quadratic_lower = 0;   ///< (σ²/4) Σ K_n 𝔞_n² t² over factors in the quadratic regime
    double reference = 0;         ///< N^{-2A+d} t²
    bool all_in_regime = true;    ///< every factor argument 𝔞_n|t| is ≤ t₀
    double regime_limit = 0;      ///< t₀/𝔞_M, the largest |t| keeping every factor quadratic
    bool holds = true;
};

inline PartialLogBound partial_log_bound(const AmplitudeDistribution& dist, const ShellWeights& w, double t, double t0 = 0) {
    if (w.M > w.N) throw ConfigError("partial_log_bound needs M <= N");
    if (t0 <= 0) t0 = quadratic_threshold(dist);
    PartialLogBound p;
    const double c = dist.variance() / 4.0;
    for (const auto& term : w.terms) {
        p.value += term.K * dist.log_inv_modulus(term.a * t);
        if (term.a * std::abs(t) <= t0)
            p.quadratic_lower += c * term.K * term.a * term.a * t * t;
        else
            p.all_in_regime = false;
    }
    p.reference = std::pow(static_cast<double>(w.N), -2 * w.A + w.d) * t * t;
    p.regime_limit = t0 / w.a_of(w.M);
    p.holds = p.value >= p.quadratic_lower * (1 - 1e-10);
    return p;
}

// ---------------------------------------------------------------------------
// Concentration of S_{M,N}

/// χ_ε = (1/m_a)·(1_{[−4ε,4ε]} ∗ N(0, σ_ε²)), σ_ε = aε. Normalising by
/// m_a = Φ(3/a) − Φ(−5/a) makes χ_ε ≥ 1 on [−ε, ε].
struct SmoothedIndicator {
    double eps = 0.1;
    double a = 1.2;

    double sigma() const { return a * eps; }
    double mass_at_edge() const {
        return stats::normal_upper_tail(-3.0 / a) - stats::normal_upper_tail(5.0 / a);
    }
    double operator()(double x) const {
        const double s = sigma();
        const double v = stats::normal_upper_tail((-4 * eps - x) / s) - stats::normal_upper_tail((4 * eps - x) / s);
        return v / mass_at_edge();
    }
    /// ĥ(t) = sin(4εt)/t · exp(−σ_ε² t²/2), the transform up to the 2/m_a normalisation.
    double h_hat(double t) const {
        const double s = sigma();
        const double core = std::abs(t) < 1e-12 ? 4 * eps : std::sin(4 * eps * t) / t;
        return core * std::exp(-0.5 * s * s * t * t);
    }
    /// Factor turning ∫|ĥ φ| dt into the Fourier bound on E χ_ε(S − E): 1/(π m_a).
    double parseval_factor() const { return 1.0 / (std::numbers::pi * mass_at_edge()); }
};

struct ConcentrationOptions {
    double t0 = 0;           ///< 0: the distribution's certified quadratic threshold
    double theta = 0.1;      ///< validity threshold ε ≥ N^{-A/(1+θ)}
    double a = 1.2;
    bool enforce_threshold = true;
    int nodes_per_period = 4;  ///< Gauss–Legendre panels per shortest period of the integrand
};

struct ConcentrationReport {
    double eps = 0;
    double center = 0;
    double threshold = 0;
    double T_M = 0;
    double T_eps = 0;
    double J1_head = 0;   ///< ∫_{|t|≤T_M} |ĥ φ|
    double J1_mid = 0;    ///< ∫_{T_M<|t|≤𝒯_ε} |ĥ φ|
    double J1 = 0;
    double J2 = 0;        ///< Gaussian tail of ĥ beyond 𝒯_ε with |φ| ≤ 1
    double bound = 0;     ///< J₁ + J₂
    double fourier_bound = 0;  ///< (J₁ + J₂)/(π m_a), also an upper bound
    double fitted_C = 0;  ///< bound / (M^A |I|)
};

namespace detail {
/// ∫_lo^hi g over panels no wider than h, 10-point Gauss–Legendre on each.
template <class G>
double panel_integral(G&& g, double lo, double hi, double h) {
    if (!(hi > lo)) return 0;
    const auto panels = static_cast<std::int64_t>(std::ceil((hi - lo) / h));
    const double w = (hi - lo) / static_cast<double>(panels);
    double s = 0;
    for (std::int64_t i = 0; i < panels; ++i) {
        const double a = lo + static_cast<double>(i) * w;
        s += boost::math::quadrature::gauss<double, 10>::integrate(g, a, a + w);
    }
    return s;
}
} // namespace detail

/// Upper bound on P{S_{M,N} ∈ [E − ε, E + ε]} (and on P{Y + S_{M,N} ∈ ·} for any
/// independent Y) through the smoothed indicator χ_ε and the exact |φ_{S_{M,N}}|.
inline ConcentrationReport concentration_bound(const AmplitudeDistribution& dist, const ShellWeights& w, double E,
                                               double eps, const ConcentrationOptions& opt = {}) {
    if (dist.degenerate()) throw ConfigError("concentration bound refused: degenerate amplitude distribution");
    if (!(eps > 0)) throw ConfigError("interval half-width must be positive");
    ConcentrationReport r;
    r.eps = eps;
    r.center = E;
    r.threshold = std::pow(static_cast<double>(w.N), -w.A / (1 + opt.theta));
    if (opt.enforce_threshold && eps < r.threshold)
        throw ThresholdError("interval half-width " + std::to_string(eps) + " is below the validity threshold " +
                                 std::to_string(r.threshold),
                             r.threshold);
    const double t0 = opt.t0 > 0 ? opt.t0 : quadratic_threshold(dist);
    const SmoothedIndicator chi{eps, opt.a};
    const double sigma = chi.sigma();
    const double L = std::log(1.0 / eps);
    r.T_eps = L * L / eps;
    r.T_M = t0 / w.a_of(w.M);

    // Beyond 40/σ the Gaussian factor is below e^{-800}; that stretch joins J₂.
    const double t_int = std::min(r.T_eps, 40.0 / sigma);
    const double omega = w.max_frequency() + 4 * eps;
    const double h = std::min(2 * std::numbers::pi / (opt.nodes_per_period * std::max(omega, 1e-12)), 1.0 / sigma);
    auto g = [&](double t) {
        const double l = log_inv_modulus(dist, w, t);
        return l == inf ? 0.0 : std::abs(chi.h_hat(t)) * std::exp(-l);
    };
    const double split = std::min(r.T_M, t_int);
    r.J1_head = 2 * detail::panel_integral(g, 0, split, h);
    r.J1_mid = 2 * detail::panel_integral(g, split, t_int, h);
    r.J1 = r.J1_head + r.J1_mid;

    const double gauss_tail = std::sqrt(2 * std::numbers::pi) / sigma * stats::normal_upper_tail(sigma * t_int);
    r.J2 = 2 * std::min(4 * eps, t_int > 0 ? 1.0 / t_int : inf) * gauss_tail;
    r.bound = r.J1 + r.J2;
    r.fourier_bound = r.bound * chi.parseval_factor();
    r.fitted_C = r.bound / (std::pow(static_cast<double>(w.M), w.A) * 2 * eps);
    return r;
}

// ---------------------------------------------------------------------------
// Cramér-type ripple bound

struct CramerReport {
    bool applicable = false;
    double s_star = 0;          ///< |φ_X(s)| ≤ ζ for |s| ≥ s*
    std::int64_t N_t = 0;
    double head_count = 0;      ///< Σ_{n≤N_t} K_n
    double certified_count = 0; ///< head factors whose argument is ≥ s*
    double bound = 0;           ///< ln(ζ⁻¹)·certified_count
    double S1 = 0;              ///< exact head sum
    bool holds = true;
    std::string note;
};

/// Lower bound on the head sum 𝒮₁ from a Cramér condition sup_{|s|≥s*}|φ_X(s)| ≤ ζ.
inline CramerReport cramer_ripple_bound(const AmplitudeDistribution& dist, double zeta, const ShellWeights& w, double t,
                                        double t0 = 0) {
    if (!(zeta > 0 && zeta < 1)) throw ConfigError("Cramér level zeta must lie in (0, 1)");
    if (t0 <= 0) t0 = quadratic_threshold(dist);
    CramerReport c;
    c.N_t = head_size(w, t, t0);
    if (dist.kind() != DistKind::uniform01) {
        c.note = "Cramér condition fails: limsup |φ(s)| = 1 for lattice amplitudes";
        return c;
    }
    c.applicable = true;
    c.s_star = 2.0 / zeta;  // |(e^{is} − 1)/(is)| ≤ 2/|s|
    for (const auto& term : w.terms) {
        if (term.n > c.N_t) break;
        const double arg = std::abs(term.a * t);
        c.head_count += term.K;
        c.S1 += term.K * dist.log_inv_modulus(term.a * t);
        if (arg >= c.s_star) c.certified_count += term.K;
    }
    c.bound = std::log(1.0 / zeta) * c.certified_count;
    c.holds = c.S1 >= c.bound * (1 - 1e-12);
    return c;
}

// ---------------------------------------------------------------------------
// Pólya–Szegő limit

struct PolyaSzegoReport {
    std::vector<double> t;
    std::vector<double> lhs;
    double rhs = 0;
    double rhs_error = 0;       ///< quadrature error estimate plus the cut-off residual
    double diagnostic = 0;      ///< |lhs(t_max) − rhs|
};

struct PolyaSzegoOptions {
    double c = 1.0;
    double lambda = 1.0;
    double cutoff = 1e-3;       ///< ∫ over (0, cutoff) replaced by the bound sup|f|·cutoff^λ
    double f_sup = 0;           ///< bound on |f| near 0; estimated by sampling when 0
};

/// lhs(t) = N_t⁻¹ Σ_{r_n ≤ c t} f(r_n/t), N_t = #{n : r_n ≤ t};
/// rhs = ∫₀^{c^λ} f(s^{1/λ}) ds = ∫₀^c f(x) λ x^{λ−1} dx.
inline PolyaSzegoReport polya_szego_limit(const std::function<double(double)>& f,
                                          const std::function<double(std::int64_t)>& r_seq,
                                          const std::vector<double>& t_values, const PolyaSzegoOptions& opt = {}) {
    if (!(opt.c > 0) || !(opt.lambda > 0)) throw ConfigError("Pólya–Szegő limit needs c > 0 and lambda > 0");
    PolyaSzegoReport rep;
    for (int i = 1; i <= 1000; ++i) {
        const double x = opt.c * i / 1000.0;
        if (!std::isfinite(f(x))) throw ConfigError("f is not evaluable on (0, c]");
    }
    for (double t : t_values) {
        if (!(t > 0)) throw ConfigError("Pólya–Szegő limit needs t > 0");
        double sum = 0, count = 0;
        for (std::int64_t n = 1;; ++n) {
            const double r = r_seq(n);
            if (r > opt.c * t && r > t) break;
            if (r <= t) count += 1;
            if (r <= opt.c * t) sum += f(r / t);
        }
        rep.t.push_back(t);
        rep.lhs.push_back(count > 0 ? sum / count : 0.0);
    }
    auto g = [&](double x) { return f(x) * opt.lambda * std::pow(x, opt.lambda - 1); };
    double sup = opt.f_sup;
    if (sup <= 0)
        for (int i = 1; i <= 4096; ++i) sup = std::max(sup, std::abs(f(opt.cutoff * i / 4096.0)));
    double hi = opt.c, total = 0, err = 0;
    while (hi > opt.cutoff) {
        const double lo = std::max(hi / 2, opt.cutoff);
        double e = 0;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, lo, hi, 15, 1e-10, &e);
        err += e;
        hi = lo;
    }
    rep.rhs = total;
    rep.rhs_error = err + sup * std::pow(std::min(opt.cutoff, opt.c), opt.lambda);
    if (!rep.lhs.empty()) rep.diagnostic = std::abs(rep.lhs.back() - rep.rhs);
    return rep;
}

// ---------------------------------------------------------------------------
// Bernstein approximation for a dependent ±1 sequence

/// Stationary symmetric two-state chain on {−1, +1} that flips sign with
/// probability q at each step; q = 1/2 gives independent signs.
struct MarkovSigns {
    double q = 0.5;
    double rho() const { return 1 - 2 * q; }
    /// B_n = E S_n² = n + 2 Σ_{k=1}^{n−1} (n − k) ρ^k.
    double B(int n) const {
        double s = n;
        for (int k = 1; k < n; ++k) s += 2.0 * (n - k) * std::pow(rho(), k);
        return s;
    }
    /// E exp(iτ S_n) by the 2×2 transfer product.
    cplx char_fun(int n, double tau) const {
        cplx up = 0.5 * std::polar(1.0, tau), dn = 0.5 * std::polar(1.0, -tau);
        for (int k = 1; k < n; ++k) {
            const cplx nu = ((1 - q) * up + q * dn) * std::polar(1.0, tau);
            const cplx nd = (q * up + (1 - q) * dn) * std::polar(1.0, -tau);
            up = nu;
            dn = nd;
        }
        return up + dn;
    }
};

struct BernsteinReport {
    int n = 0;
    double B_n = 0;
    double C_T = 0;
    std::vector<double> t;
    std::vector<cplx> phi;
    std::vector<double> psi;
    std::vector<double> alpha, beta, c, eta;
    double sup_gap = 0;
    double eta_sum = 0;
    bool holds = true;
};

/// φ_n(t) = E e^{itS_n/√B_n} against Ψ_n(t) = Π_k (1 − σ_k² t²/B_n), with
/// η_k = C_T(α_k B^{-1/2} + β_k B^{-1} + c_k B^{-3/2}). C_T is the smallest constant
/// for which every conditional single-term defect
///   sup_x |E[e^{iτX_k} | X_{k−1} = x] − (1 − σ_k²τ²)|,  τ = t/√B_n,
/// is dominated by its η_k on the grid.
inline BernsteinReport bernstein_approximation(const MarkovSigns& chain, int n, double T, int grid_points = 2001) {
    if (n < 1) throw ConfigError("Bernstein approximation needs n >= 1");
    if (!(T > 0) || grid_points < 2) throw ConfigError("Bernstein approximation needs T > 0 and >= 2 grid points");
    BernsteinReport r;
    r.n = n;
    r.B_n = chain.B(n);
    const double B = r.B_n;
    if (T * T > 2 * B) throw ConfigError("T too large: factors of Ψ_n would leave the unit disc");
    const double rho = chain.rho();
    for (int k = 1; k <= n; ++k) {
        r.alpha.push_back(k == 1 ? 0.0 : std::abs(rho));
        r.beta.push_back(0.0);
        r.c.push_back(1.0);
    }
    for (int i = 0; i < grid_points; ++i) r.t.push_back(-T + 2 * T * i / (grid_points - 1));

    double CT = 0;
    for (int k = 1; k <= n; ++k) {
        const auto ku = static_cast<std::size_t>(k - 1);
        const double denom = r.alpha[ku] / std::sqrt(B) + r.beta[ku] / B + r.c[ku] / (B * std::sqrt(B));
        for (double t : r.t) {
            const double tau = t / std::sqrt(B);
            const double b = 1 - tau * tau;
            double defect;
            if (k == 1) {
                defect = std::abs(std::cos(tau) - b);
            } else {
                // Given X_{k−1} = x: E e^{iτX_k} = cos τ + iρx sin τ.
                defect = std::abs(cplx(std::cos(tau) - b, rho * std::sin(tau)));
            }
            CT = std::max(CT, defect / denom);
        }
    }
    r.C_T = CT;
    for (int k = 1; k <= n; ++k) {
        const auto ku = static_cast<std::size_t>(k - 1);
        r.eta.push_back(CT * (r.alpha[ku] / std::sqrt(B) + r.beta[ku] / B + r.c[ku] / (B * std::sqrt(B))));
        r.eta_sum += r.eta.back();
    }
    for (double t : r.t) {
        const double tau = t / std::sqrt(B);
        r.phi.push_back(chain.char_fun(n, tau));
        r.psi.push_back(std::pow(1 - tau * tau, n));
        r.sup_gap = std::max(r.sup_gap, std::abs(r.phi.back() - r.psi.back()));
    }
    r.holds = r.sup_gap <= r.eta_sum * (1 + 1e-12);
    return r;
}

} // namespace alloyloc::charfun
