#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "../charfun.hpp"
#include "common.hpp"
#include "wegner.hpp"

namespace alloyloc::experiments {

// ---------------------------------------------------------------------------
// Thin tails

struct ThinTailConfig {
    std::int64_t L0 = 4;
    double theta = 0.5;
    double kappa = 0.5;
    AmplitudeDistribution dist = AmplitudeDistribution::bernoulli_p(0.5);
    double A = 2;
    double ups = 1;
    int d = 1;
    double g = 1;
    std::uint64_t trials = 100000;
    std::int64_t r_max = 0;
    double level = 0.95;

    double R0() const { return std::pow(static_cast<double>(L0), theta); }
    std::int64_t q_inner() const { return static_cast<std::int64_t>(std::floor(R0() * (1 + 1e-12))); }
    std::int64_t q_outer() const { return static_cast<std::int64_t>(std::floor(2 * R0() * (1 + 1e-12))); }
    /// Radius of the random region; it contains every Q_x with x in the box.
    std::int64_t random_radius() const { return std::max<std::int64_t>(2 * L0, L0 + q_outer()); }
    double lambda() const { return std::pow(static_cast<double>(L0), -theta); }

    InteractionPotential potential() const {
        return r_max > 0 ? InteractionPotential::piecewise(A, ups, r_max) : InteractionPotential::piecewise(A, ups);
    }
    /// λ_κ = g·κ·u(⌊2R₀⌋): any amplitude above κ in Q_x pushes gV(x) above it.
    double lambda_kappa() const { return g * kappa * potential()(static_cast<double>(q_outer())); }

    /// ε_κ = P{ω ≤ κ}.
    double eps_kappa() const {
        if (dist.kind() == DistKind::uniform01) return std::clamp(kappa, 0.0, 1.0);
        double p = 0;
        for (const auto& [v, w] : dist.atoms())
            if (v <= kappa) p += w;
        return p;
    }

    void validate() const {
        if (L0 < 1) throw ConfigError("L0 must be >= 1");
        if (!(theta > 0 && theta < 1)) throw ConfigError("theta must lie in (0, 1)");
        if (!(A > d)) throw ConfigError("A must exceed d");
        if (!(g > 0)) throw ConfigError("thin-tail estimate needs g > 0");
        if (dist.support_min() < 0)
            throw ConfigError("thin-tail estimate refused: amplitude law has negative support, the lower bound on V fails");
        if (!(eps_kappa() < 1)) throw ConfigError("P{omega <= kappa} must be < 1");
        if (q_outer() <= q_inner()) throw ConfigError("annulus Q_x is empty");
        if (trials < 1) throw ConfigError("trials must be >= 1");
    }
};

struct ThinTailReport {
    ThinTailConfig config;
    std::size_t box_sites = 0;
    std::size_t random_sites = 0;
    std::size_t q_sites = 0;
    double lambda = 0;
    double lambda_kappa = 0;
    double eps_kappa = 0;
    bool chain_covers_target = false;  ///< λ_κ ≥ λ, so the chain bounds the target event
    double chain_bound = 0;            ///< |Λ|·ε_κ^{|Q|}
    double C_theta = 0;                ///< −ln(chain_bound)/L₀^d
    Estimate event;                    ///< E₀ ≤ λ
    Estimate min_potential_event;      ///< g·min V ≤ λ
    std::uint64_t rayleigh_violations = 0;
    std::uint64_t implication_violations = 0;
    double tail_error = 0;
};

/// Exact probabilities of every link of the chain
///   P{E₀ ≤ λ} ≤ P{g min V ≤ λ} ≤ Σ_x P{gV(x) ≤ λ} ≤ |Λ| max_x P{gV(x) ≤ λ}
/// and, per site, P{gV(x) ≤ λ_κ} ≤ P{ω ≤ κ on Q_x} = ε_κ^{|Q_x|}.
struct ThinTailExact {
    double event = 0;
    double min_potential = 0;
    double union_sum = 0;
    double union_max_bound = 0;
    std::vector<double> site_lambda;        ///< P{gV(x) ≤ λ}
    std::vector<double> site_lambda_kappa;  ///< P{gV(x) ≤ λ_κ}
    std::vector<double> site_q_small;       ///< P{max_{Q_x} ω ≤ κ}, enumerated
    double q_small_formula = 0;             ///< ε_κ^{|Q|}
    bool chain_holds = false;
};

namespace detail {

inline constexpr double chain_slack = 1e-12;

struct ThinTailSetup {
    RandomBox rb;
    std::vector<std::vector<std::size_t>> q_index;  ///< random-site indices of Q_x per box site
};

inline ThinTailSetup thin_tail_setup(const ThinTailConfig& cfg, const FieldSample& background) {
    if (background.dim != cfg.d) throw ConfigError("background dimension does not match d");
    const Site o = Site::origin(cfg.d);
    auto region = enumerate_ball(Ball(o, cfg.random_radius()));
    ThinTailSetup s{RandomBox(Ball(o, cfg.L0), cfg.g, cfg.potential(), background, region,
                              PotentialOptions{cfg.r_max, SelfTerm::include}),
                    {}};
    const auto& targets = s.rb.influence.targets;
    for (const auto& x : targets) {
        std::vector<std::size_t> q;
        for (std::size_t j = 0; j < region.size(); ++j) {
            const auto r = sup_dist(x, region[j]);
            if (r > cfg.q_inner() && r <= cfg.q_outer()) q.push_back(j);
        }
        s.q_index.push_back(std::move(q));
    }
    return s;
}

} // namespace detail

inline ThinTailExact ils_thin_exact(const ThinTailConfig& cfg, const FieldSample& background = FieldSample(1),
                                    unsigned threads = 0) {
    cfg.validate();
    const auto setup = detail::thin_tail_setup(cfg, background);
    const auto& rb = setup.rb;
    const std::size_t k = rb.random_count();
    if (k > max_enumerated_sites) throw ConfigError("random region too large for exhaustive enumeration");
    const std::size_t n = rb.box.size();
    const double lam = cfg.lambda(), lk = cfg.lambda_kappa();
    // layout: [event, min_potential, site_lambda(n), site_lambda_kappa(n), site_q_small(n)]
    const auto acc = chunked_sum(std::uint64_t{1} << k, 2 + 3 * n, threads, [&](std::uint64_t mask, std::vector<double>& a) {
        double p = 0;
        const auto omega = configuration(cfg.dist, mask, k, &p);
        const auto h = rb.hamiltonian(omega);
        const double E0 = spectral::eigenvalues(h)(0);
        const double vmin = *std::min_element(h.potential.begin(), h.potential.end());
        if (E0 <= lam) a[0] += p;
        if (cfg.g * vmin <= lam) a[1] += p;
        for (std::size_t x = 0; x < n; ++x) {
            if (cfg.g * h.potential[x] <= lam) a[2 + x] += p;
            if (cfg.g * h.potential[x] <= lk) a[2 + n + x] += p;
            bool small = true;
            for (auto j : setup.q_index[x]) small = small && omega[j] <= cfg.kappa;
            if (small) a[2 + 2 * n + x] += p;
        }
    });
    ThinTailExact ex;
    ex.event = acc[0];
    ex.min_potential = acc[1];
    ex.site_lambda.assign(acc.begin() + 2, acc.begin() + 2 + static_cast<std::ptrdiff_t>(n));
    ex.site_lambda_kappa.assign(acc.begin() + 2 + static_cast<std::ptrdiff_t>(n), acc.begin() + 2 + 2 * static_cast<std::ptrdiff_t>(n));
    ex.site_q_small.assign(acc.begin() + 2 + 2 * static_cast<std::ptrdiff_t>(n), acc.end());
    for (double v : ex.site_lambda) ex.union_sum += v;
    ex.union_max_bound = static_cast<double>(n) * *std::max_element(ex.site_lambda.begin(), ex.site_lambda.end());
    ex.q_small_formula = std::pow(cfg.eps_kappa(), static_cast<double>(setup.q_index.front().size()));
    const double s = detail::chain_slack;
    ex.chain_holds = ex.event <= ex.min_potential + s && ex.min_potential <= ex.union_sum + s &&
                     ex.union_sum <= ex.union_max_bound + s;
    for (std::size_t x = 0; x < n; ++x)
        ex.chain_holds = ex.chain_holds && ex.site_lambda_kappa[x] <= ex.site_q_small[x] + s &&
                         std::abs(ex.site_q_small[x] - ex.q_small_formula) <= 1e-12;
    return ex;
}

inline ThinTailReport ils_thin_tail(const ThinTailConfig& cfg, std::uint64_t seed,
                                    const FieldSample& background = FieldSample(1), unsigned threads = 0) {
    cfg.validate();
    const auto setup = detail::thin_tail_setup(cfg, background);
    const auto& rb = setup.rb;
    ThinTailReport rep;
    rep.config = cfg;
    rep.box_sites = rb.box.size();
    rep.random_sites = rb.random_count();
    rep.q_sites = setup.q_index.front().size();
    rep.lambda = cfg.lambda();
    rep.lambda_kappa = cfg.lambda_kappa();
    rep.eps_kappa = cfg.eps_kappa();
    rep.chain_covers_target = rep.lambda_kappa >= rep.lambda;
    rep.chain_bound = static_cast<double>(rep.box_sites) * std::pow(rep.eps_kappa, static_cast<double>(rep.q_sites));
    rep.C_theta = -std::log(rep.chain_bound) / ipow(static_cast<double>(cfg.L0), cfg.d);
    rep.tail_error = rb.influence.tail_error;

    struct Outcome {
        bool event = false, min_event = false;
        std::uint64_t rayleigh = 0, implication = 0;
    };
    const auto out = parallel_map<Outcome>(cfg.trials, threads, [&](std::size_t i) {
        Stream s(seed, "ils_thin.trial", i);
        const auto omega = rb.draw(cfg.dist, s);
        const auto h = rb.hamiltonian(omega);
        const double E0 = spectral::eigenvalues(h)(0);
        const double vmin = *std::min_element(h.potential.begin(), h.potential.end());
        Outcome o;
        o.event = E0 <= rep.lambda;
        o.min_event = cfg.g * vmin <= rep.lambda;
        if (E0 < cfg.g * vmin - 1e-9 * std::max(1.0, std::abs(E0))) ++o.rayleigh;
        for (std::size_t x = 0; x < h.potential.size(); ++x) {
            double qmax = -std::numeric_limits<double>::infinity();
            for (auto j : setup.q_index[x]) qmax = std::max(qmax, omega[j]);
            if (qmax > cfg.kappa && !(cfg.g * h.potential[x] >= rep.lambda_kappa * (1 - 1e-12))) ++o.implication;
        }
        return o;
    });
    std::uint64_t hits = 0, min_hits = 0;
    for (const auto& o : out) {
        hits += o.event;
        min_hits += o.min_event;
        rep.rayleigh_violations += o.rayleigh;
        rep.implication_violations += o.implication;
    }
    rep.event = make_estimate(hits, cfg.trials, cfg.level);
    rep.min_potential_event = make_estimate(min_hits, cfg.trials, cfg.level);
    return rep;
}

// ---------------------------------------------------------------------------
// Strong disorder

enum class IlsTheorem { scale_free, power_law };

struct StrongDisorderConfig {
    std::int64_t L0 = 4;
    int d = 1;
    double A = 2;
    double ups = 1;
    double eps = 1;
    double kappa = 0.5;        ///< κ ∈ (0, A − d)
    IlsTheorem theorem = IlsTheorem::scale_free;
    double b = 1;              ///< target exponent for the power-law form
    double tau = 2;            ///< conditioning radius R = L^τ for the power-law form
    std::int64_t random_radius = 0;  ///< scale-free form: radius of the random region, 0 = 2·L0
    AmplitudeDistribution dist = AmplitudeDistribution::uniform01();
    std::uint64_t trials = 2000;
    double g = 0;              ///< 0 = derived value
    double spacing = 0;        ///< E-grid spacing, 0 = ε/2
    std::int64_t r_max = 0;
    double level = 0.95;

    double theta_prime() const { return A - d - kappa; }
    std::int64_t R() const {
        if (theorem == IlsTheorem::power_law)
            return static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(L0), tau) * (1 + 1e-12)));
        return random_radius > 0 ? random_radius : 2 * L0;
    }
    /// δ = L^{−A+θ'} (scale-free) or R^{−A+θ'} (power-law).
    double delta_target() const {
        const double base = theorem == IlsTheorem::power_law ? static_cast<double>(R()) : static_cast<double>(L0);
        return std::pow(base, -A + theta_prime());
    }
    double derived_g() const { return (eps + 4.0 * d) / delta_target(); }
    double g_used() const { return g > 0 ? g : derived_g(); }
    /// δ(g) = (ε + 4d)/|g|.
    double delta() const { return (eps + 4.0 * d) / std::abs(g_used()); }
    double target() const {
        return std::pow(static_cast<double>(L0), theorem == IlsTheorem::power_law ? -b : -kappa);
    }

    InteractionPotential potential() const {
        return r_max > 0 ? InteractionPotential::piecewise(A, ups, r_max) : InteractionPotential::piecewise(A, ups);
    }

    void validate() const {
        if (L0 < 1) throw ConfigError("L0 must be >= 1");
        if (!(A > d)) throw ConfigError("A must exceed d");
        if (!(eps > 0)) throw ConfigError("eps must be positive");
        if (!(kappa > 0 && kappa < A - d)) throw ConfigError("kappa must lie in (0, A - d)");
        if (theorem == IlsTheorem::power_law && !(tau > (b + d) / A))
            throw ConfigError("power-law form needs tau > (b + d)/A");
        if (R() < L0) throw ConfigError("random region must contain the box");
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (spacing < 0 || spacing > eps / 2) throw ConfigError("E-grid spacing must lie in (0, eps/2]");
    }
};

struct StrongDisorderReport {
    StrongDisorderConfig config;
    double g = 0;
    double derived_g = 0;
    bool g_below_threshold = false;
    std::string warning;
    double delta = 0;
    std::int64_t R = 0;
    std::size_t box_sites = 0;
    std::size_t random_sites = 0;
    double grid_lo = 0, grid_hi = 0, grid_spacing = 0;
    std::size_t grid_points = 0;
    double sup_E = 0;
    Estimate sup_estimate;
    double target = 0;
    bool pass = false;                 ///< upper CI of the sup ≤ target
    std::uint64_t reduction_violations = 0;
    Estimate interval_event;           ///< P{∃x: V(x) ∈ I_δ(sup_E)}
    Estimate origin_interval;          ///< P{V(0) ∈ I_δ(sup_E)}
    double concentration_bound = 0;    ///< charfun bound for the same interval on (M=1, N) weights
    std::int64_t concentration_shells = 0;
    bool concentration_consistent = false;
    double tail_error = 0;
};

inline StrongDisorderReport ils_strong_disorder(const StrongDisorderConfig& cfg, std::uint64_t seed,
                                                const FieldSample& background = FieldSample(1), unsigned threads = 0) {
    cfg.validate();
    if (background.dim != cfg.d) throw ConfigError("background dimension does not match d");
    StrongDisorderReport rep;
    rep.config = cfg;
    rep.g = cfg.g_used();
    rep.derived_g = cfg.derived_g();
    rep.g_below_threshold = std::abs(rep.g) < rep.derived_g;
    if (rep.g_below_threshold)
        rep.warning = "|g| is below the derived value (eps + 4d)/delta; the hypothesis is unmet";
    rep.delta = cfg.delta();
    rep.R = cfg.R();
    rep.target = cfg.target();
    const auto pot = cfg.potential();
    const Site o = Site::origin(cfg.d);
    const RandomBox rb(Ball(o, cfg.L0), rep.g, pot, background, enumerate_ball(Ball(o, rep.R)),
                       PotentialOptions{cfg.r_max, SelfTerm::include});
    rep.box_sites = rb.box.size();
    rep.random_sites = rb.random_count();
    rep.tail_error = rb.influence.tail_error;
    const std::size_t origin_index = rb.box.index_of(o);

    struct Sample {
        std::vector<double> spectrum;
        std::vector<double> V;
    };
    const auto samples = parallel_map<Sample>(cfg.trials, threads, [&](std::size_t i) {
        Stream s(seed, "ils_strong.trial", i);
        const auto h = rb.hamiltonian(rb.draw(cfg.dist, s));
        const auto ev = spectral::eigenvalues(h);
        return Sample{std::vector<double>(ev.data(), ev.data() + ev.size()), h.potential};
    });

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : samples) {
        lo = std::min(lo, s.spectrum.front());
        hi = std::max(hi, s.spectrum.back());
    }
    rep.grid_lo = lo - 1;
    rep.grid_hi = hi + 1;
    rep.grid_spacing = cfg.spacing > 0 ? cfg.spacing : cfg.eps / 2;
    rep.grid_points = static_cast<std::size_t>(std::ceil((rep.grid_hi - rep.grid_lo) / rep.grid_spacing)) + 1;
    if (rep.grid_points == 0) throw ConfigError("E-grid is empty");

    // each sample marks the grid energies within ε of its spectrum
    std::vector<std::uint64_t> hits(rep.grid_points, 0);
    std::vector<std::uint8_t> mark(rep.grid_points);
    for (const auto& s : samples) {
        std::fill(mark.begin(), mark.end(), 0);
        for (double lam : s.spectrum) {
            const double a = (lam - cfg.eps - rep.grid_lo) / rep.grid_spacing;
            const double b = (lam + cfg.eps - rep.grid_lo) / rep.grid_spacing;
            const auto i0 = static_cast<std::int64_t>(std::max(0.0, std::floor(a) - 1));
            const auto i1 = std::min<std::int64_t>(static_cast<std::int64_t>(rep.grid_points) - 1, static_cast<std::int64_t>(std::ceil(b) + 1));
            for (std::int64_t i = i0; i <= i1; ++i) {
                const double E = rep.grid_lo + static_cast<double>(i) * rep.grid_spacing;
                if (std::abs(lam - E) <= cfg.eps) mark[static_cast<std::size_t>(i)] = 1;
            }
        }
        for (std::size_t i = 0; i < mark.size(); ++i) hits[i] += mark[i];
    }
    const auto best = static_cast<std::size_t>(std::max_element(hits.begin(), hits.end()) - hits.begin());
    rep.sup_E = rep.grid_lo + static_cast<double>(best) * rep.grid_spacing;
    rep.sup_estimate = make_estimate(hits[best], cfg.trials, cfg.level);
    rep.pass = rep.sup_estimate.ci.hi <= rep.target;

    // |V(x) − E/g| ≤ δ is the reduction's interval I_δ (half-width δ)
    const double centre = rep.sup_E / rep.g;
    std::uint64_t any = 0, at_origin = 0;
    for (const auto& s : samples) {
        bool hit_any = false;
        for (double v : s.V) hit_any = hit_any || std::abs(v - centre) <= rep.delta;
        any += hit_any;
        at_origin += std::abs(s.V[origin_index] - centre) <= rep.delta;
    }
    // per-sample deterministic reduction at every grid energy the sample hits
    for (const auto& s : samples) {
        const double smin = s.spectrum.front(), smax = s.spectrum.back();
        const auto i0 = static_cast<std::int64_t>(std::max(0.0, std::floor((smin - cfg.eps - rep.grid_lo) / rep.grid_spacing)));
        const auto i1 = std::min<std::int64_t>(static_cast<std::int64_t>(rep.grid_points) - 1,
                                               static_cast<std::int64_t>(std::ceil((smax + cfg.eps - rep.grid_lo) / rep.grid_spacing)));
        for (std::int64_t i = i0; i <= i1; ++i) {
            const double E = rep.grid_lo + static_cast<double>(i) * rep.grid_spacing;
            if (detail::sorted_distance(s.spectrum, E) > cfg.eps) continue;
            bool found = false;
            for (double v : s.V) found = found || std::abs(rep.g * v - E) <= (cfg.eps + 4.0 * cfg.d) * (1 + 1e-12);
            if (!found) {
                ++rep.reduction_violations;
                break;
            }
        }
    }
    rep.interval_event = make_estimate(any, cfg.trials, cfg.level);
    rep.origin_interval = make_estimate(at_origin, cfg.trials, cfg.level);

    // shells fully inside the random region around the origin
    std::int64_t N = 0;
    for (std::int64_t n = 1; pot.plateau_start(n) <= rep.R; ++n) N = n;
    rep.concentration_shells = N;
    if (N >= 1 && !cfg.dist.degenerate()) {
        charfun::ConcentrationOptions opt;
        opt.enforce_threshold = false;
        const auto w = charfun::make_shell_weights(pot, cfg.d, 1, N);
        rep.concentration_bound = charfun::concentration_bound(cfg.dist, w, centre, rep.delta, opt).bound;
        rep.concentration_consistent = rep.origin_interval.ci.lo <= rep.concentration_bound;
    }
    return rep;
}

} // namespace alloyloc::experiments
