#pragma once
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "charfun.hpp"
#include "errors.hpp"
#include "experiments/ensemble.hpp"
#include "experiments/ils.hpp"
#include "experiments/msa.hpp"
#include "experiments/wegner.hpp"
#include "io.hpp"
#include "oracles.hpp"
#include "spectral.hpp"

namespace alloyloc::cli {

using json = nlohmann::json;

/// Options that may also come from the --config file. A flag given on the
/// command line wins over the file; the resolved values are echoed in every report.
class ParamBlock {
public:
    explicit ParamBlock(CLI::App* app) : app_(app) {}

    template <class T>
    void add(const std::string& name, T& var, const std::string& help) {
        CLI::Option* opt = app_->add_option("--" + name, var, help)->capture_default_str();
        entries_.push_back(Entry{name, opt, [&var](const json& j) { var = j.get<T>(); }, [&var] { return json(var); }});
    }

    void apply(const json& cfg) const {
        if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
        for (const auto& [key, value] : cfg.items()) {
            const Entry* e = find(key);
            if (!e) throw ConfigError("unknown config key '" + key + "'");
            if (e->opt->count() > 0) continue;
            try {
                e->set(value);
            } catch (const json::exception& ex) {
                throw ConfigError("config key '" + key + "' has the wrong type: " + ex.what());
            }
        }
    }

    json resolved() const {
        json j = json::object();
        for (const auto& e : entries_) j[e.name] = e.get();
        return j;
    }

private:
    struct Entry {
        std::string name;
        CLI::Option* opt;
        std::function<void(const json&)> set;
        std::function<json()> get;
    };
    const Entry* find(const std::string& key) const {
        for (const auto& e : entries_)
            if (e.name == key) return &e;
        return nullptr;
    }

    CLI::App* app_;
    std::vector<Entry> entries_;
};

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out = "-";
    std::string format = "csv";
    unsigned threads = 0;
};

struct Subcommand {
    CLI::App* app = nullptr;
    std::unique_ptr<ParamBlock> params;
    std::function<io::Report(const Common&)> run;
};

namespace detail {

inline AmplitudeDistribution distribution(const std::string& name, double p) { return AmplitudeDistribution::parse(name, p); }

inline json estimate_json(const experiments::Estimate& e) {
    return {{"hits", e.hits}, {"trials", e.trials}, {"p_hat", io::number(e.p_hat)}, {"ci_lo", io::number(e.ci.lo)},
            {"ci_hi", io::number(e.ci.hi)}, {"level", e.level}};
}

inline std::string hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 15];
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Subcommand definitions

inline void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON file with parameter values (flags override it)");
    app->add_option("--seed", c.seed, "master seed (64-bit)")->capture_default_str();
    app->add_option("--out", c.out, "output path, '-' for stdout")->capture_default_str();
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app->add_option("--threads", c.threads, "worker threads (0 = ALLOYLOC_THREADS or hardware)");
}

inline Subcommand make_charfun(CLI::App& root) {
    struct P {
        std::string dist = "bernoulli-sym";
        double p = 0.5;
        int d = 1;
        double A = 2, ups = 1, tmin = 1e2, tmax = 1e6;
        int points = 60;
        std::int64_t nmax = 0;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("charfun", "decay of |phi_S(t)| for the shell product and its log-log slope");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("dist", s->dist, "bernoulli-sym | bernoulli-p | uniform01");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("d", s->d, "lattice dimension");
    b.add("A", s->A, "decay exponent");
    b.add("ups", s->ups, "plateau exponent");
    b.add("tmin", s->tmin, "smallest t");
    b.add("tmax", s->tmax, "largest t");
    b.add("points", s->points, "log-spaced grid points");
    b.add("nmax", s->nmax, "shells kept (0 = automatic)");
    sc.run = [s](const Common&) {
        const auto dist = detail::distribution(s->dist, s->p);
        const auto pot = InteractionPotential::piecewise(s->A, s->ups);
        const auto fit = charfun::decay_fit(dist, pot, s->d, s->tmin, s->tmax, s->points, s->nmax);
        io::Report r;
        r.results = {{"slope", fit.fit.slope},         {"intercept", fit.fit.intercept},
                     {"r2", fit.fit.r2},               {"rms_residual", fit.fit.rms_residual},
                     {"target_slope", s->d / s->A},    {"n_max", fit.n_max},
                     {"truncation_bound", io::number(fit.truncation_bound)}};
        r.table.columns = {"t", "log_inv_modulus"};
        for (std::size_t i = 0; i < fit.t.size(); ++i) r.table.add({fit.t[i], fit.log_inv_modulus[i]});
        return r;
    };
    return sc;
}

inline Subcommand make_concentration(CLI::App& root) {
    struct P {
        std::string dist = "bernoulli-sym";
        double p = 0.5;
        int d = 1;
        double A = 2, ups = 1;
        std::int64_t M = 1, N = 4;
        std::vector<double> E{0.0};
        double eps = 0.1, theta = 0.1, a = 1.2, t0 = 0;
        bool enforce = true;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("concentration", "upper bound on P{|S_{M,N} - E| <= eps}");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("dist", s->dist, "amplitude law");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("d", s->d, "lattice dimension");
    b.add("A", s->A, "decay exponent");
    b.add("ups", s->ups, "plateau exponent");
    b.add("M", s->M, "first shell");
    b.add("N", s->N, "last shell");
    b.add("E", s->E, "interval centres");
    b.add("eps", s->eps, "interval half-width");
    b.add("theta", s->theta, "threshold exponent");
    b.add("a", s->a, "smoothing ratio");
    b.add("t0", s->t0, "quadratic-regime threshold (0 = certified value)");
    b.add("enforce", s->enforce, "refuse half-widths below the validity threshold");
    sc.run = [s](const Common&) {
        const auto dist = detail::distribution(s->dist, s->p);
        const auto pot = InteractionPotential::piecewise(s->A, s->ups);
        const auto w = charfun::make_shell_weights(pot, s->d, s->M, s->N);
        charfun::ConcentrationOptions opt;
        opt.theta = s->theta;
        opt.a = s->a;
        opt.t0 = s->t0;
        opt.enforce_threshold = s->enforce;
        const bool exact_ok = dist.atoms().size() == 2 && w.total_sites() <= 24;
        std::vector<std::pair<double, double>> law;
        if (exact_ok) law = oracle::exact_law(dist, w);
        io::Report r;
        r.table.columns = {"E", "eps", "threshold", "T_M", "T_eps", "J1", "J2", "bound", "fourier_bound", "fitted_C", "exact"};
        bool all_hold = true;
        for (double E : s->E) {
            const auto c = charfun::concentration_bound(dist, w, E, s->eps, opt);
            const double exact = exact_ok ? oracle::interval_mass(law, E - s->eps, E + s->eps) : std::nan("");
            if (exact_ok) all_hold = all_hold && exact <= c.bound;
            r.table.add({E, c.eps, c.threshold, c.T_M, c.T_eps, c.J1, c.J2, c.bound, c.fourier_bound, c.fitted_C, exact});
        }
        r.results = {{"total_sites", w.total_sites()}, {"exact_available", exact_ok}, {"exact_below_bound", all_hold}};
        return r;
    };
    return sc;
}

inline Subcommand make_dos(CLI::App& root) {
    struct P {
        std::int64_t L = 6;
        int d = 1;
        double A = 2, ups = 1, g = 1;
        std::string dist = "uniform01";
        double p = 0.5;
        std::int64_t bath = 0;
        std::uint64_t samples = 2000;
        double lo = 0, hi = 0;
        int bins = 20;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("dos", "density-of-states histogram in a thermal bath with a smoothness diagnostic");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("L", s->L, "box radius");
    b.add("d", s->d, "lattice dimension");
    b.add("A", s->A, "decay exponent");
    b.add("ups", s->ups, "plateau exponent");
    b.add("g", s->g, "coupling");
    b.add("dist", s->dist, "amplitude law");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("bath", s->bath, "width of the random bath around the box (0 = 2L)");
    b.add("samples", s->samples, "number of samples");
    b.add("lo", s->lo, "histogram lower edge (lo >= hi: observed range)");
    b.add("hi", s->hi, "histogram upper edge");
    b.add("bins", s->bins, "number of bins");
    sc.run = [s](const Common& c) {
        experiments::EnsembleConfig e;
        e.L = s->L;
        e.d = s->d;
        e.A = s->A;
        e.ups = s->ups;
        e.g = s->g;
        e.dist = detail::distribution(s->dist, s->p);
        e.bath = s->bath;
        const auto spectra = experiments::sample_spectra(e, s->samples, c.seed, c.threads);
        double lo = s->lo, hi = s->hi;
        if (!(lo < hi)) {
            lo = std::numeric_limits<double>::infinity();
            hi = -lo;
            for (const auto& v : spectra) {
                lo = std::min(lo, v.front());
                hi = std::max(hi, v.back());
            }
            hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
        }
        const auto h = spectral::dos_histogram(spectra, lo, hi, s->bins);
        const auto diag = spectral::smoothness_diagnostic(spectra, lo, hi, s->bins);
        io::Report r;
        json ratio = json::array();
        for (double x : diag.ratio) ratio.push_back(io::number(x));
        r.results = {{"lo", lo}, {"hi", hi}, {"eigenvalues", h.eigenvalues}, {"outside", h.outside},
                     {"integral", h.integral}, {"variation_ratio", ratio}};
        r.table.columns = {"bin_lo", "bin_hi", "density"};
        for (std::size_t i = 0; i < h.density.size(); ++i) r.table.add({h.edges[i], h.edges[i + 1], h.density[i]});
        return r;
    };
    return sc;
}

inline Subcommand make_decompose(CLI::App& root) {
    struct P {
        std::int64_t L = 2;
        int d = 1;
        double A = 3, ups = 2, g = 1;
        std::string dist = "uniform01";
        double p = 0.5;
        std::int64_t width = 24;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("decompose", "split a box Hamiltonian into H~ plus the plateau shift xi");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("L", s->L, "box radius");
    b.add("d", s->d, "lattice dimension");
    b.add("A", s->A, "decay exponent");
    b.add("ups", s->ups, "plateau exponent");
    b.add("g", s->g, "coupling");
    b.add("dist", s->dist, "amplitude law");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("width", s->width, "random exterior extends to radius L + width");
    sc.run = [s](const Common& c) {
        const auto pot = InteractionPotential::piecewise(s->A, s->ups);
        const Site o = Site::origin(s->d);
        const Ball box(o, s->L);
        const auto region = enumerate_ball(Ball(o, s->L + s->width));
        const auto field = sample_field(detail::distribution(s->dist, s->p), region, Stream(c.seed, "decompose.field"));
        const auto dec = spectral::plateau_decompose(box, pot, field, s->g, region);
        const auto ev = spectral::eigenvalues(dec.H), ev_t = spectral::eigenvalues(dec.H_tilde);
        double shift_defect = 0;
        for (Eigen::Index j = 0; j < ev.size(); ++j) shift_defect = std::max(shift_defect, std::abs(ev(j) - ev_t(j) - dec.xi));
        io::Report r;
        r.results = {{"plateau_sites", dec.plateau_sites.size()}, {"xi", dec.xi},
                     {"reconstruction_defect", dec.reconstruction_defect}, {"eigenvalue_shift_defect", shift_defect},
                     {"H_tilde_checksum", detail::hex(dec.H_tilde_checksum)}};
        r.table.columns = {"site", "dist_lo", "dist_hi", "weight", "amplitude"};
        for (std::size_t i = 0; i < dec.plateau_sites.size(); ++i) {
            const auto& y = dec.plateau_sites[i];
            const auto dr = spectral::distance_range(box, y);
            r.table.add({y.str(), dr.lo, dr.hi, dec.plateau_weights[i], field.at(y)});
        }
        return r;
    };
    return sc;
}

inline Subcommand make_wegner(CLI::App& root) {
    struct P {
        std::int64_t L = 2;
        double tau = 3.33, theta = 0.5;
        std::vector<double> E{0.0};
        std::uint64_t trials = 10000;
        std::string dist = "bernoulli-sym";
        double p = 0.5, A = 2, ups = 1;
        int d = 1;
        double g = 1, level = 0.95, C = 0;
        std::uint64_t calibration_trials = 0;
        bool exact = false;
        double background = 0;
        std::int64_t r_max = 0;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("wegner", "frozen-bath eigenvalue concentration P{dist(spectrum, E) <= eps_L}");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("L", s->L, "box radius");
    b.add("tau", s->tau, "R_L = L^tau");
    b.add("theta", s->theta, "eps_L = R_L^(-A/(1+theta))");
    b.add("E", s->E, "energies");
    b.add("trials", s->trials, "Monte Carlo trials (>= 100)");
    b.add("dist", s->dist, "amplitude law");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("A", s->A, "decay exponent");
    b.add("ups", s->ups, "plateau exponent");
    b.add("d", s->d, "lattice dimension");
    b.add("g", s->g, "coupling");
    b.add("level", s->level, "Wilson confidence level");
    b.add("C", s->C, "absorbed constant (0 = fit on a calibration sample)");
    b.add("calibration_trials", s->calibration_trials, "calibration sample size (0 = trials)");
    b.add("exact", s->exact, "also enumerate the annulus exactly (two-point laws)");
    b.add("background", s->background, "frozen amplitude outside the annulus");
    b.add("r_max", s->r_max, "potential truncation radius (0 = default)");
    sc.run = [s](const Common& c) {
        experiments::WegnerConfig w;
        w.L = s->L;
        w.tau = s->tau;
        w.theta = s->theta;
        w.E = s->E.empty() ? 0.0 : s->E.front();
        w.trials = s->trials;
        w.dist = detail::distribution(s->dist, s->p);
        w.A = s->A;
        w.ups = s->ups;
        w.d = s->d;
        w.g = s->g;
        w.level = s->level;
        w.C = s->C;
        w.calibration_trials = s->calibration_trials;
        w.r_max = s->r_max;
        const FieldSample frozen(s->d, s->background == 0 ? Background::zero() : Background::frozen(s->background));
        const auto rep = experiments::wegner_scan(w, frozen, c.seed, s->E, s->exact, c.threads);
        io::Report r;
        r.results = {{"R_L", rep.R_L}, {"eps_L", rep.eps_L}, {"beta", rep.beta}, {"box_sites", rep.box_sites},
                     {"annulus_sites", rep.annulus_sites}, {"C", rep.C}, {"C_fitted", rep.C_fitted},
                     {"calibration_spacing", rep.calibration_spacing}, {"calibration_energies", rep.calibration_energies},
                     {"tail_error", rep.tail_error}, {"pass", rep.pass}};
        r.table.columns = {"E", "hits", "trials", "p_hat", "ci_lo", "ci_hi", "exact", "bound", "pass"};
        for (const auto& pt : rep.points)
            r.table.add({pt.E, pt.estimate.hits, pt.estimate.trials, pt.estimate.p_hat, pt.estimate.ci.lo, pt.estimate.ci.hi,
                         pt.exact ? *pt.exact : std::nan(""), pt.bound, pt.pass});
        return r;
    };
    return sc;
}

inline Subcommand make_ils_thin(CLI::App& root) {
    struct P {
        std::vector<std::int64_t> L0{4};
        double theta = 0.5, kappa = 0.5;
        std::string dist = "bernoulli-p";
        double p = 0.5, A = 2, ups = 1;
        int d = 1;
        double g = 1;
        std::uint64_t trials = 100000;
        double level = 0.95;
        bool exact = false;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("ils-thin", "initial-scale estimate P{E_0 <= L0^-theta} for thin-tailed amplitudes");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("L0", s->L0, "box radii");
    b.add("theta", s->theta, "exponent in (0,1)");
    b.add("kappa", s->kappa, "amplitude level");
    b.add("dist", s->dist, "amplitude law (nonnegative support)");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("A", s->A, "decay exponent");
    b.add("ups", s->ups, "plateau exponent");
    b.add("d", s->d, "lattice dimension");
    b.add("g", s->g, "coupling (> 0)");
    b.add("trials", s->trials, "Monte Carlo trials per L0");
    b.add("level", s->level, "Wilson confidence level");
    b.add("exact", s->exact, "also enumerate the random region exactly (two-point laws)");
    sc.run = [s](const Common& c) {
        io::Report r;
        r.table.columns = {"L0", "trials", "hits", "p_hat", "ci_lo", "ci_hi", "min_potential_p_hat", "chain_bound",
                           "C_theta", "chain_covers_target", "exact", "exact_chain_holds", "rayleigh_violations",
                           "implication_violations"};
        std::vector<double> x, y;
        bool monotone = true;
        double prev = std::numeric_limits<double>::infinity();
        for (auto L0 : s->L0) {
            experiments::ThinTailConfig t;
            t.L0 = L0;
            t.theta = s->theta;
            t.kappa = s->kappa;
            t.dist = detail::distribution(s->dist, s->p);
            t.A = s->A;
            t.ups = s->ups;
            t.d = s->d;
            t.g = s->g;
            t.trials = s->trials;
            t.level = s->level;
            const auto FS = FieldSample(s->d);
            const auto rep = experiments::ils_thin_tail(t, c.seed, FS, c.threads);
            double exact = std::nan("");
            bool chain = false;
            if (s->exact) {
                const auto ex = experiments::ils_thin_exact(t, FS, c.threads);
                exact = ex.event;
                chain = ex.chain_holds;
            }
            r.table.add({L0, rep.event.trials, rep.event.hits, rep.event.p_hat, rep.event.ci.lo, rep.event.ci.hi,
                         rep.min_potential_event.p_hat, rep.chain_bound, rep.C_theta, rep.chain_covers_target, exact, chain,
                         rep.rayleigh_violations, rep.implication_violations});
            if (rep.event.p_hat > 0) {
                x.push_back(ipow(static_cast<double>(L0), s->d));
                y.push_back(std::log(rep.event.p_hat));
            }
            monotone = monotone && rep.event.p_hat < prev;
            prev = rep.event.p_hat;
        }
        r.results = {{"log_p_strictly_decreasing", monotone}};
        if (x.size() >= 2) {
            const auto fit = stats::least_squares(x, y);
            r.results["log_p_slope"] = fit.slope;
            r.results["log_p_intercept"] = fit.intercept;
        }
        return r;
    };
    return sc;
}

inline Subcommand make_ils_strong(CLI::App& root) {
    struct P {
        std::int64_t L0 = 4;
        int d = 1;
        double A = 2, ups = 1, eps = 1, kappa = 0.5;
        std::string theorem = "scale-free";
        double b = 1, tau = 2;
        std::int64_t random_radius = 0;
        std::string dist = "uniform01";
        double p = 0.5;
        std::uint64_t trials = 2000;
        double g = 0, spacing = 0, level = 0.95;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("ils-strong", "initial-scale estimate under strong disorder, sup over an energy grid");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("L0", s->L0, "box radius");
    b.add("d", s->d, "lattice dimension");
    b.add("A", s->A, "decay exponent");
    b.add("ups", s->ups, "plateau exponent");
    b.add("eps", s->eps, "spectral distance");
    b.add("kappa", s->kappa, "exponent in (0, A - d)");
    b.add("theorem", s->theorem, "scale-free (target L0^-kappa) or power-law (target L0^-b, R = L0^tau)");
    b.add("b", s->b, "power-law target exponent");
    b.add("tau", s->tau, "conditioning radius exponent");
    b.add("random_radius", s->random_radius, "scale-free form: random region radius (0 = 2 L0)");
    b.add("dist", s->dist, "amplitude law");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("trials", s->trials, "Monte Carlo trials");
    b.add("g", s->g, "coupling (0 = derived value)");
    b.add("spacing", s->spacing, "energy grid spacing (0 = eps/2)");
    b.add("level", s->level, "Wilson confidence level");
    sc.run = [s](const Common& c) {
        experiments::StrongDisorderConfig t;
        t.L0 = s->L0;
        t.d = s->d;
        t.A = s->A;
        t.ups = s->ups;
        t.eps = s->eps;
        t.kappa = s->kappa;
        if (s->theorem == "scale-free")
            t.theorem = experiments::IlsTheorem::scale_free;
        else if (s->theorem == "power-law")
            t.theorem = experiments::IlsTheorem::power_law;
        else
            throw ConfigError("theorem must be scale-free or power-law");
        t.b = s->b;
        t.tau = s->tau;
        t.random_radius = s->random_radius;
        t.dist = detail::distribution(s->dist, s->p);
        t.trials = s->trials;
        t.g = s->g;
        t.spacing = s->spacing;
        t.level = s->level;
        const auto rep = experiments::ils_strong_disorder(t, c.seed, FieldSample(s->d), c.threads);
        if (!rep.warning.empty()) std::cerr << "warning: " << rep.warning << '\n';
        io::Report r;
        r.results = {{"g", rep.g}, {"derived_g", rep.derived_g}, {"g_below_threshold", rep.g_below_threshold},
                     {"warning", rep.warning}, {"delta", rep.delta}, {"R", rep.R}, {"box_sites", rep.box_sites},
                     {"random_sites", rep.random_sites}, {"grid_lo", rep.grid_lo}, {"grid_hi", rep.grid_hi},
                     {"grid_spacing", rep.grid_spacing}, {"grid_points", rep.grid_points}, {"sup_E", rep.sup_E},
                     {"sup_estimate", detail::estimate_json(rep.sup_estimate)}, {"target", rep.target}, {"pass", rep.pass},
                     {"reduction_violations", rep.reduction_violations},
                     {"interval_event", detail::estimate_json(rep.interval_event)},
                     {"origin_interval", detail::estimate_json(rep.origin_interval)},
                     {"concentration_bound", rep.concentration_bound}, {"concentration_shells", rep.concentration_shells},
                     {"concentration_consistent", rep.concentration_consistent}, {"tail_error", rep.tail_error}};
        r.table.columns = {"sup_E", "eps", "hits", "trials", "p_hat", "ci_lo", "ci_hi", "target", "pass"};
        r.table.add({rep.sup_E, s->eps, rep.sup_estimate.hits, rep.sup_estimate.trials, rep.sup_estimate.p_hat,
                     rep.sup_estimate.ci.lo, rep.sup_estimate.ci.hi, rep.target, rep.pass});
        return r;
    };
    return sc;
}

inline Subcommand make_msa(CLI::App& root) {
    struct P {
        double A = 6;
        int d = 1;
        double b = 2, tau = 1.5, alpha = 1.8;
        std::int64_t S = 19;
        double theta = 0.5, m = 1;
        std::int64_t L0 = 6;
        double ups = 1, g = 50;
        std::string dist = "uniform01";
        double p = 0.5;
        std::size_t M_ext = 2;
        std::int64_t width = 0;
        double level = 0.95;
        int kmax = 1;
        std::uint64_t trials = 2000;
        double E = 20;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("msa", "fixed-energy multiscale recursion: p_k per scale and the scale-step lemma");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("A", s->A, "decay exponent");
    b.add("d", s->d, "lattice dimension");
    b.add("b", s->b, "target exponent (> d)");
    b.add("tau", s->tau, "conditioning exponent");
    b.add("alpha", s->alpha, "scale exponent");
    b.add("S", s->S, "tolerated bad balls");
    b.add("theta", s->theta, "exponent in eps_k");
    b.add("m", s->m, "mass (>= 1)");
    b.add("L0", s->L0, "initial scale");
    b.add("ups", s->ups, "plateau exponent");
    b.add("g", s->g, "coupling");
    b.add("dist", s->dist, "amplitude law");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("M_ext", s->M_ext, "random exterior probes per SNS test");
    b.add("width", s->width, "exterior probe ring width (0 = L_k)");
    b.add("level", s->level, "Wilson confidence level");
    b.add("kmax", s->kmax, "largest scale index");
    b.add("trials", s->trials, "trials per scale");
    b.add("E", s->E, "energy");
    sc.run = [s](const Common& c) {
        experiments::MSAParams mp;
        mp.A = s->A;
        mp.d = s->d;
        mp.b = s->b;
        mp.tau = s->tau;
        mp.alpha = s->alpha;
        mp.S = s->S;
        mp.theta = s->theta;
        mp.m = s->m;
        mp.L0 = s->L0;
        mp.ups = s->ups;
        mp.g = s->g;
        mp.dist = detail::distribution(s->dist, s->p);
        mp.M_ext = s->M_ext;
        mp.exterior_width = s->width;
        mp.level = s->level;
        const auto reps = experiments::msa_run(mp, s->kmax, s->trials, s->E, c.seed, c.threads);
        io::Report r;
        json scales = json::array();
        r.table.columns = {"k", "L", "R", "trials", "hits", "p_hat", "ci_lo", "ci_hi", "target", "pass", "ns_failures",
                           "resonant_failures", "nr_failures", "bound_count", "bound_factorial", "lemma_pass",
                           "counterexamples"};
        for (const auto& sr : reps) {
            json j = {{"k", sr.k}, {"L", sr.L}, {"R", sr.R}, {"m_k", sr.m_k}, {"eps_k", sr.eps_k},
                      {"ns_threshold", sr.ns_threshold}, {"target", sr.target}, {"p", detail::estimate_json(sr.p)},
                      {"ci_method", sr.ci_method}, {"pass", sr.pass}, {"certificate_note", sr.certificate_note}};
            double bc = std::nan(""), bf = std::nan("");
            bool lemma = false;
            std::uint64_t cex = 0;
            if (sr.cluster) {
                const auto& cl = *sr.cluster;
                bc = cl.bound_count;
                bf = cl.bound_factorial;
                lemma = cl.lemma_pass;
                cex = cl.counterexamples;
                j["cluster"] = {{"admissible_centres", cl.admissible_centres}, {"distance", cl.distance},
                                {"collection_count", cl.collection_count}, {"histogram", cl.histogram},
                                {"samples_with_hypotheses", cl.samples_with_hypotheses},
                                {"counterexamples", cl.counterexamples}, {"p_prev_upper", cl.p_prev_upper},
                                {"bound_count", cl.bound_count}, {"bound_factorial", cl.bound_factorial},
                                {"lemma_pass", cl.lemma_pass}};
            }
            scales.push_back(j);
            r.table.add({static_cast<std::int64_t>(sr.k), sr.L, sr.R, sr.trials, sr.p.hits, sr.p.p_hat, sr.p.ci.lo,
                         sr.p.ci.hi, sr.target, sr.pass, sr.ns_failures, sr.resonant_failures, sr.nr_failures, bc, bf,
                         lemma, cex});
        }
        r.results = {{"scales", scales}};
        return r;
    };
    return sc;
}

inline Subcommand make_efc(CLI::App& root) {
    struct P {
        std::int64_t L = 12;
        int d = 1;
        double A = 2, ups = 1, g = 50;
        std::string dist = "uniform01";
        double p = 0.5;
        std::int64_t bath = 0;
        std::uint64_t samples = 1000;
        std::vector<std::int64_t> r{2, 6, 10};
        double lo = -1e308, hi = 1e308;
    };
    auto s = std::make_shared<P>();
    Subcommand sc;
    sc.app = root.add_subcommand("efc", "ensemble-averaged eigenfunction correlator EFC(0, r)");
    sc.params = std::make_unique<ParamBlock>(sc.app);
    auto& b = *sc.params;
    b.add("L", s->L, "box radius");
    b.add("d", s->d, "lattice dimension");
    b.add("A", s->A, "decay exponent");
    b.add("ups", s->ups, "plateau exponent");
    b.add("g", s->g, "coupling");
    b.add("dist", s->dist, "amplitude law");
    b.add("p", s->p, "success probability for bernoulli-p");
    b.add("bath", s->bath, "width of the random bath (0 = 2L)");
    b.add("samples", s->samples, "number of samples");
    b.add("r", s->r, "distances along the first axis");
    b.add("lo", s->lo, "energy window lower edge");
    b.add("hi", s->hi, "energy window upper edge");
    sc.run = [s](const Common& c) {
        experiments::EnsembleConfig e;
        e.L = s->L;
        e.d = s->d;
        e.A = s->A;
        e.ups = s->ups;
        e.g = s->g;
        e.dist = detail::distribution(s->dist, s->p);
        e.bath = s->bath;
        const auto prof = experiments::efc_profile(e, s->r, s->samples, c.seed, s->lo, s->hi, c.threads);
        io::Report r;
        bool nonincreasing = true;
        for (std::size_t i = 1; i < prof.mean.size(); ++i) nonincreasing = nonincreasing && prof.mean[i] <= prof.mean[i - 1];
        r.results = {{"nonincreasing", nonincreasing}};
        if (prof.mean.size() >= 2 && prof.mean.front() > 0) r.results["ratio_last_first"] = prof.mean.back() / prof.mean.front();
        r.table.columns = {"r", "mean", "std_error", "samples"};
        for (std::size_t i = 0; i < prof.mean.size(); ++i)
            r.table.add({prof.distances[i], prof.mean[i], prof.std_error[i], prof.samples});
        return r;
    };
    return sc;
}

/// Brute-force oracle suite; every check compares a module result with an
/// independent enumeration or closed form.
inline io::Report selftest_report(std::uint64_t seed, unsigned threads) {
    io::Report r;
    r.table.columns = {"check", "value", "reference", "pass"};
    bool all = true;
    const auto record = [&](const std::string& name, double value, double reference, bool pass) {
        r.table.add({name, value, reference, pass});
        all = all && pass;
    };

    // Taylor remainder on random (n, s)
    {
        Stream rng(seed, "selftest.taylor");
        std::uint64_t bad = 0;
        for (int i = 0; i < 2000; ++i) {
            const int n = 1 + static_cast<int>(rng() % 8);
            const double sv = 40 * rng.uniform() - 20;
            bad += charfun::taylor_remainder_check(n, sv).holds ? 0 : 1;
        }
        record("taylor_remainder_violations", static_cast<double>(bad), 0, bad == 0);
    }
    // enumerated law against the concentration bound
    {
        const auto dist = AmplitudeDistribution::bernoulli_sym();
        const auto w = charfun::make_shell_weights(InteractionPotential::piecewise(2, 1), 1, 1, 4);
        const auto law = oracle::exact_law(dist, w);
        double worst = -1;
        for (double E : {-0.5, 0.0, 0.3, 1.1}) {
            const auto c = charfun::concentration_bound(dist, w, E, 0.1);
            worst = std::max(worst, oracle::interval_mass(law, E - 0.1, E + 0.1) - c.bound);
        }
        record("concentration_exact_minus_bound", worst, 0, worst <= 0);
    }
    // two-state Markov characteristic function, transfer matrix vs enumeration
    {
        const charfun::MarkovSigns chain{0.4};
        double worst = 0;
        for (double tau : {0.1, 0.7, 1.9})
            worst = std::max(worst, std::abs(chain.char_fun(9, tau) - oracle::markov_char_fun_enumerated(0.4, 9, tau)));
        record("markov_transfer_vs_enumeration", worst, 0, worst < 1e-12);
    }
    // closed-form spectrum of the three-site free Laplacian
    {
        const auto h = spectral::hamiltonian_from_potential(Ball(Site::origin(1), 1), {0, 0, 0}, 1);
        const double dist = spectral::spectral_distance(spectral::eigenvalues(h), 0);
        record("free_laplacian_gap", dist, 2 - std::sqrt(2.0), std::abs(dist - (2 - std::sqrt(2.0))) < 1e-12);
    }
    // Wegner: enumeration against Monte Carlo on a four-site annulus
    {
        experiments::WegnerConfig w;
        w.L = 2;
        w.tau = 2;
        w.theta = 0.5;
        w.trials = 4000;
        w.C = 1;
        const auto rep = experiments::wegner_scan(w, FieldSample(1), seed, {0.2, 1.5, 2.8}, true, threads);
        bool inside = true;
        double gap = 0;
        for (const auto& pt : rep.points) {
            inside = inside && stats::wilson(pt.estimate.hits, pt.estimate.trials, 0.999).contains(*pt.exact);
            gap = std::max(gap, std::abs(pt.estimate.p_hat - *pt.exact));
        }
        record("wegner_mc_vs_exact_max_gap", gap, 0, inside);
    }
    // thin-tail chain, exact
    {
        experiments::ThinTailConfig t;
        const auto ex = experiments::ils_thin_exact(t, FieldSample(1), threads);
        record("thin_tail_exact_event", ex.event, ex.union_max_bound, ex.chain_holds);
    }
    // ball enumeration against the closed-form count
    {
        bool ok = true;
        for (int d = 1; d <= 3; ++d)
            for (std::int64_t L = 0; L <= 3; ++L)
                ok = ok && static_cast<double>(enumerate_ball(Ball(Site::origin(d), L)).size()) == ball_count(d, L);
        record("ball_enumeration_count", ok ? 1 : 0, 1, ok);
    }
    r.results = {{"all_pass", all}};
    return r;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
    CLI::App app{"alloyloc: numerical laboratory for long-range alloy-type Anderson models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(io::tool_version));
    Common common;
    std::vector<Subcommand> subs;
    subs.push_back(make_charfun(app));
    subs.push_back(make_concentration(app));
    subs.push_back(make_dos(app));
    subs.push_back(make_decompose(app));
    subs.push_back(make_wegner(app));
    subs.push_back(make_ils_thin(app));
    subs.push_back(make_ils_strong(app));
    subs.push_back(make_msa(app));
    subs.push_back(make_efc(app));
    {
        Subcommand st;
        st.app = app.add_subcommand("selftest", "brute-force oracle suite");
        st.params = std::make_unique<ParamBlock>(st.app);
        subs.push_back(std::move(st));
    }
    for (auto& s : subs) add_common(s.app, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (auto& s : subs) {
            if (!s.app->parsed()) continue;
            if (!common.config.empty()) {
                std::ifstream in(common.config);
                if (!in) throw ConfigError("cannot read config file: " + common.config);
                json cfg;
                try {
                    cfg = json::parse(in);
                } catch (const json::parse_error& e) {
                    throw ConfigError(std::string("malformed config file: ") + e.what());
                }
                if (cfg.is_object() && cfg.contains("seed")) {
                    if (s.app->get_option("--seed")->count() == 0) common.seed = cfg.at("seed").get<std::uint64_t>();
                    cfg.erase("seed");
                }
                s.params->apply(cfg);
            }
            const auto format = io::parse_format(common.format);
            io::check_output_path(common.out);
            const std::string name = s.app->get_name();
            io::Report rep;
            bool ok = true;
            if (name == "selftest") {
                rep = selftest_report(common.seed, common.threads);
                ok = rep.results.at("all_pass").get<bool>();
            } else {
                rep = s.run(common);
            }
            rep.subcommand = name;
            rep.master_seed = common.seed;
            rep.config = s.params->resolved();
            io::emit(rep, format, common.out);
            return ok ? 0 : 3;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

} // namespace alloyloc::cli
