#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"

namespace alloyloc::experiments {

// ---------------------------------------------------------------------------
// Predicates on a single box

struct NsResult {
    bool holds = false;
    bool resonant = false;
    double max_green = 0;  ///< max |G(x,y;E)| over x ∈ B_{⌊L/3⌋}(u), y ∈ ∂⁻B_L(u); +inf at resonance
};

/// Rows of the inner ball B_{⌊L/3⌋}(u) and the inner boundary of the box.
struct NsGeometry {
    std::vector<Eigen::Index> centre_rows;
    std::vector<Site> boundary;

    explicit NsGeometry(const Ball& box) {
        const Ball inner(box.center, box.radius / 3);
        for (std::size_t i = 0; i < box.size(); ++i)
            if (inner.contains(box.site_at(i))) centre_rows.push_back(static_cast<Eigen::Index>(i));
        boundary = inner_boundary(box);
    }
};

inline NsResult ns_check(const spectral::HamiltonianMatrix& h, double E, const NsGeometry& geo) {
    NsResult r;
    const auto n = static_cast<Eigen::Index>(h.size());
    const Eigen::MatrixXd A = h.matrix - E * Eigen::MatrixXd::Identity(n, n);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() <= 1e-14 * scale) {
        r.resonant = true;
        r.max_green = std::numeric_limits<double>::infinity();
        return r;
    }
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(geo.boundary.size()));
    for (std::size_t k = 0; k < geo.boundary.size(); ++k)
        rhs(static_cast<Eigen::Index>(h.box.index_of(geo.boundary[k])), static_cast<Eigen::Index>(k)) = 1.0;
    const Eigen::MatrixXd G = lu.solve(rhs);
    double worst = 0;
    for (auto i : geo.centre_rows) worst = std::max(worst, G.row(i).cwiseAbs().maxCoeff());
    if (!std::isfinite(worst)) {
        r.resonant = true;
        r.max_green = std::numeric_limits<double>::infinity();
        return r;
    }
    r.max_green = worst;
    return r;
}

/// (E, ε)-NS: the resolvent exists and max_{x ∈ B_{⌊L/3⌋}, y ∈ ∂⁻B_L} |G(x,y;E)| ≤ ε.
/// A resonant energy counts as singular.
inline bool ns_predicate(const spectral::HamiltonianMatrix& h, double E, double eps) {
    const auto r = ns_check(h, E, NsGeometry(h.box));
    return !r.resonant && r.max_green <= eps;
}

/// (E, γ)-NR: dist(Σ(H_B), E) ≥ γ.
inline bool nr_predicate(const Eigen::VectorXd& values, double E, double gamma) {
    return spectral::spectral_distance(values, E) >= gamma;
}

inline bool nr_predicate(const spectral::HamiltonianMatrix& h, double E, double gamma) {
    return nr_predicate(spectral::eigenvalues(h), E, gamma);
}

// ---------------------------------------------------------------------------
// Stable predicates: the configuration on B_{L^τ}(u) is fixed, the exterior varies

enum class ProbeMode { SNS, SNR };

inline std::int64_t tau_radius(std::int64_t L, double tau) {
    return static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(L), tau) * (1 + 1e-12)));
}

/// A box B_L(0) with its conditioning ball B_{⌊L^τ⌋}(0) and an exterior ring
/// of width W; amplitudes beyond the ring are frozen at zero.
struct ProbeGeometry {
    std::int64_t L = 0, R = 0, W = 0;
    std::vector<Site> interior;
    std::vector<Site> ring;
    RandomBox rb;
    NsGeometry ns;

    ProbeGeometry(int d, std::int64_t L_, double tau, std::int64_t width, double g, const InteractionPotential& pot)
        : L(L_), R(tau_radius(L_, tau)), W(width > 0 ? width : L_), interior(enumerate_ball(Ball(Site::origin(d), R))),
          ring(Annulus(Site::origin(d), R, R + W).sites()),
          rb(Ball(Site::origin(d), L), g, pot, FieldSample(d), joined(interior, ring)), ns(rb.box) {}

    static std::vector<Site> joined(const std::vector<Site>& a, const std::vector<Site>& b) {
        std::vector<Site> out = a;
        out.insert(out.end(), b.begin(), b.end());
        return out;
    }
};

struct ProbeCertificate {
    std::string exterior;  ///< "zero", "all_min", "all_max" or "random_<i>"
    bool holds = false;
    double value = 0;      ///< max |G| (SNS) or spectral distance (SNR)
};

struct SnsProbeResult {
    ProbeMode mode = ProbeMode::SNS;
    bool holds_on_probes = false;
    bool exact = false;  ///< SNR is decided exactly; SNS only on the listed probes
    double worst = 0;    ///< max over probes of max |G| (SNS) or the spectral distance (SNR)
    std::vector<ProbeCertificate> certificates;
    std::string note;
};

namespace detail {

inline SnsProbeResult probe_interior(const ProbeGeometry& geo, const std::vector<double>& interior_values,
                                     const AmplitudeDistribution& dist, double E, double threshold, std::size_t M_ext,
                                     ProbeMode mode, const Stream& exterior_stream, bool stop_early = false) {
    SnsProbeResult res;
    res.mode = mode;
    std::vector<double> omega(interior_values);
    omega.resize(geo.interior.size() + geo.ring.size(), 0.0);
    const auto fill_ring = [&](auto&& value) {
        for (std::size_t j = geo.interior.size(); j < omega.size(); ++j) omega[j] = value();
    };
    if (mode == ProbeMode::SNR) {
        res.exact = true;
        const double dist_E = spectral::spectral_distance(spectral::eigenvalues(geo.rb.hamiltonian(omega)), E);
        res.worst = dist_E;
        res.holds_on_probes = dist_E >= threshold;
        res.certificates.push_back({"zero", res.holds_on_probes, dist_E});
        res.note = "exterior fixed at zero as the definition prescribes";
        return res;
    }
    res.holds_on_probes = true;
    const auto run = [&](const std::string& label) {
        const auto r = ns_check(geo.rb.hamiltonian(omega), E, geo.ns);
        const bool ok = !r.resonant && r.max_green <= threshold;
        res.worst = std::max(res.worst, r.max_green);
        res.holds_on_probes = res.holds_on_probes && ok;
        res.certificates.push_back({label, ok, r.max_green});
    };
    fill_ring([&] { return dist.support_min(); });
    run("all_min");
    if (!(stop_early && !res.holds_on_probes)) {
        fill_ring([&] { return dist.support_max(); });
        run("all_max");
    }
    for (std::size_t i = 0; i < M_ext && !(stop_early && !res.holds_on_probes); ++i) {
        Stream s = exterior_stream.child("exterior", i);
        fill_ring([&] { return dist.sample(s); });
        run("random_" + std::to_string(i));
    }
    res.note = "probe certificate over " + std::to_string(res.certificates.size()) +
               " exterior configurations on a ring of width " + std::to_string(geo.W) +
               " (zero beyond); not a proof over all exteriors";
    return res;
}

} // namespace detail

/// Evaluates the stable predicate for B_L(u). `interior` must be explicit on
/// B_{⌊L^τ⌋}(u); SNS probes the exterior with all-min, all-max and M_ext random
/// draws on a ring of width `width` (0 = L), SNR fixes the exterior at zero.
inline SnsProbeResult sns_probe(const InteractionPotential& pot, const Ball& box, double g, double E, double threshold,
                                const FieldSample& interior, double tau, std::size_t M_ext, ProbeMode mode,
                                const AmplitudeDistribution& dist, std::uint64_t seed = 0, std::int64_t width = 0) {
    const ProbeGeometry geo(box.dim(), box.radius, tau, width, g, pot);
    std::vector<double> values(geo.interior.size());
    for (std::size_t i = 0; i < geo.interior.size(); ++i) {
        const Site x = geo.interior[i] + box.center;
        if (!interior.in_domain(x)) throw ConfigError("interior field does not cover B_{L^tau}: missing " + x.str());
        values[i] = interior.at(x);
    }
    return detail::probe_interior(geo, values, dist, E, threshold, M_ext, mode, Stream(seed, "sns_probe", 0));
}

// ---------------------------------------------------------------------------
// Scale recursion

struct MSAParams {
    double A = 6;
    int d = 1;
    double b = 2;
    double tau = 1.5;
    double alpha = 1.8;
    std::int64_t S = 19;
    double theta = 0.5;
    double m = 1;
    std::int64_t L0 = 6;
    double ups = 1;
    double g = 50;
    AmplitudeDistribution dist = AmplitudeDistribution::uniform01();
    std::size_t M_ext = 2;
    std::int64_t exterior_width = 0;  ///< 0 = L_k
    double level = 0.95;

    std::int64_t L(int k) const {
        std::int64_t l = L0;
        for (int j = 0; j < k; ++j) l = static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(l), alpha) * (1 + 1e-12)));
        return l;
    }
    double m_k(int k) const { return (1 + std::pow(static_cast<double>(L(k)), -0.125)) * m; }
    double eps_k(int k) const { return 4 * std::pow(static_cast<double>(L(k)), -tau * A + theta); }
    /// Y_{k+1} = L_k^{α−1}.
    double Y(int k_plus_1) const { return std::pow(static_cast<double>(L(k_plus_1 - 1)), alpha - 1); }
    double S_lower() const { return b * alpha / (b - alpha * d); }

    InteractionPotential potential() const { return InteractionPotential::piecewise(A, ups); }

    /// Empty when valid, otherwise the violated inequality.
    std::string violation() const {
        std::ostringstream os;
        if (d < 1) return "d >= 1 violated";
        if (!(A > d)) { os << "A > d violated (A=" << A << ", d=" << d << ")"; return os.str(); }
        if (!(b > d)) { os << "b > d violated (b=" << b << ", d=" << d << ")"; return os.str(); }
        if (!(tau > 1)) { os << "tau > 1 violated (tau=" << tau << ")"; return os.str(); }
        if (!(alpha > tau)) { os << "alpha > tau violated (alpha=" << alpha << ", tau=" << tau << ")"; return os.str(); }
        if (!(tau > b / (A - d))) {
            os << "tau > b/(A-d) violated (tau=" << tau << ", b/(A-d)=" << b / (A - d) << ")";
            return os.str();
        }
        if (!(b - alpha * d > 0)) {
            os << "b - alpha*d > 0 violated (b - alpha*d = " << b - alpha * d << "), so b*alpha/(b - alpha*d) > 0 fails";
            return os.str();
        }
        if (!(static_cast<double>(S) > S_lower())) {
            os << "S > b*alpha/(b - alpha*d) violated (S=" << S << ", bound=" << S_lower() << ")";
            return os.str();
        }
        if (!(theta > 0 && theta < 1)) { os << "theta in (0,1) violated (theta=" << theta << ")"; return os.str(); }
        if (!(m >= 1)) { os << "m >= 1 violated (m=" << m << ")"; return os.str(); }
        if (L0 < 2) { os << "L0 >= 2 violated (L0=" << L0 << ")"; return os.str(); }
        if (!(L(1) > L0)) { os << "L_1 > L_0 violated (L_1=" << L(1) << ")"; return os.str(); }
        return {};
    }

    void validate() const {
        if (auto v = violation(); !v.empty()) throw ConfigError("MSA parameters rejected: " + v);
    }
};

struct ClusterSummary {
    std::size_t admissible_centres = 0;
    double distance = 0;               ///< 2 L_{k-1}^τ
    double collection_count = 0;       ///< pairwise-distant (S+1)-collections of admissible centres
    std::vector<std::uint64_t> histogram;  ///< samples with S_k = j
    std::uint64_t samples_with_hypotheses = 0;
    std::uint64_t counterexamples = 0;  ///< (i) and (ii) hold but the conclusion fails
    double p_prev_upper = 0;            ///< upper CI of p_{k-1}
    double bound_count = 0;             ///< ½L_k^{-b} + count·p^{S+1}
    double bound_factorial = 0;         ///< ½L_k^{-b} + Y^{S+1}/(S+1)!·p^{S+1}
    bool lemma_pass = false;            ///< upper CI of p_k ≤ bound_count
};

struct ScaleReport {
    int k = 0;
    std::int64_t L = 0;
    std::int64_t R = 0;
    double m_k = 0;
    double eps_k = 0;
    double ns_threshold = 0;  ///< e^{−m L_k}
    double target = 0;        ///< L_k^{−b}
    std::uint64_t trials = 0;
    Estimate p;               ///< P{B_{L_k} is not (E,m)-SNS}
    std::string ci_method = "wilson";
    std::uint64_t ns_failures = 0;
    std::uint64_t resonant_failures = 0;
    std::uint64_t nr_failures = 0;  ///< not (E, ε_k)-SNR
    bool pass = false;              ///< upper CI ≤ target
    std::string certificate_note;
    std::optional<ClusterSummary> cluster;
};

namespace detail {

inline std::vector<Site> admissible_centres(int d, std::int64_t L_small, std::int64_t L_big) {
    const std::int64_t reach = (L_big - L_small) / L_small;
    std::vector<Site> out;
    for (const auto& z : enumerate_ball(Ball(Site::origin(d), reach))) {
        Site c = z;
        for (auto& v : c.coords) v *= L_small;
        out.push_back(c);
    }
    return out;
}

/// Largest subset of `pts` whose members are pairwise at sup-distance ≥ dist.
inline std::size_t max_distant_subset(const std::vector<Site>& pts, double dist) {
    std::size_t best = 0;
    std::vector<std::size_t> chosen;
    std::function<void(std::size_t)> go = [&](std::size_t i) {
        best = std::max(best, chosen.size());
        if (chosen.size() + (pts.size() - i) <= best) return;
        for (std::size_t j = i; j < pts.size(); ++j) {
            bool ok = true;
            for (auto c : chosen) ok = ok && static_cast<double>(sup_dist(pts[c], pts[j])) >= dist;
            if (!ok) continue;
            chosen.push_back(j);
            go(j + 1);
            chosen.pop_back();
        }
    };
    go(0);
    return best;
}

/// Number of size-`size` subsets of `pts` that are pairwise at sup-distance ≥ dist.
inline double count_distant_collections(const std::vector<Site>& pts, double dist, std::size_t size) {
    double count = 0;
    std::vector<std::size_t> chosen;
    std::function<void(std::size_t)> go = [&](std::size_t i) {
        if (chosen.size() == size) {
            count += 1;
            return;
        }
        if (chosen.size() + (pts.size() - i) < size) return;
        for (std::size_t j = i; j < pts.size(); ++j) {
            bool ok = true;
            for (auto c : chosen) ok = ok && static_cast<double>(sup_dist(pts[c], pts[j])) >= dist;
            if (!ok) continue;
            chosen.push_back(j);
            go(j + 1);
            chosen.pop_back();
        }
    };
    go(0);
    return count;
}

inline double log_factorial(double n) { return std::lgamma(n + 1); }

} // namespace detail

/// Monte Carlo estimates of p_k for k = 0..k_max. For k ≥ 1 every sample of the
/// large ball also evaluates the scale-(k−1) balls at the admissible centres,
/// which yields the cluster statistic and the per-sample test of the
/// conditions for strong non-singularity.
inline std::vector<ScaleReport> msa_run(const MSAParams& params, int k_max, std::uint64_t trials, double E,
                                        std::uint64_t seed, unsigned threads = 0) {
    params.validate();
    if (k_max < 0) throw ConfigError("k_max must be >= 0");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    const auto pot = params.potential();
    const int d = params.d;
    std::vector<ScaleReport> reports;

    for (int k = 0; k <= k_max; ++k) {
        const std::int64_t L = params.L(k);
        const ProbeGeometry big(d, L, params.tau, params.exterior_width, params.g, pot);
        ScaleReport rep;
        rep.k = k;
        rep.L = L;
        rep.R = big.R;
        rep.m_k = params.m_k(k);
        rep.eps_k = params.eps_k(k);
        rep.ns_threshold = std::exp(-params.m * static_cast<double>(L));
        rep.target = std::pow(static_cast<double>(L), -params.b);
        rep.trials = trials;
        rep.ci_method = "wilson-" + std::to_string(static_cast<int>(std::lround(params.level * 100)));

        std::optional<ProbeGeometry> small;
        std::vector<Site> centres;
        double small_threshold_m = 0, small_threshold_mk = 0, eps_prev = 0, distance = 0;
        std::vector<std::vector<std::size_t>> small_lookup;  // per centre: index in big.interior of each small interior site
        if (k >= 1) {
            const std::int64_t Ls = params.L(k - 1);
            small.emplace(d, Ls, params.tau, params.exterior_width, params.g, pot);
            centres = detail::admissible_centres(d, Ls, L);
            small_threshold_m = std::exp(-params.m * static_cast<double>(Ls));
            small_threshold_mk = std::exp(-params.m_k(k - 1) * static_cast<double>(Ls));
            eps_prev = params.eps_k(k - 1);
            distance = 2 * std::pow(static_cast<double>(Ls), params.tau);
            const Ball interior_ball(Site::origin(d), big.R);
            for (const auto& c : centres) {
                std::vector<std::size_t> idx;
                for (const auto& s : small->interior) {
                    const Site x = s + c;
                    if (!interior_ball.contains(x))
                        throw ConfigError("scale-" + std::to_string(k - 1) + " conditioning ball leaves B_{L^tau} of scale " +
                                          std::to_string(k));
                    idx.push_back(interior_ball.index_of(x));
                }
                small_lookup.push_back(std::move(idx));
            }
        }

        struct Outcome {
            bool sns_fail = false, resonant = false, nr_fail = false;
            std::size_t cluster = 0;
            bool hypotheses = false, counterexample = false;
        };
        const double gamma = k >= 1 ? eps_prev : rep.eps_k;
        const auto outcomes = parallel_map<Outcome>(trials, threads, [&](std::size_t t) {
            Stream s = Stream(seed, "msa.scale", static_cast<std::uint64_t>(k)).child("trial", t);
            std::vector<double> interior(big.interior.size());
            for (auto& w : interior) w = params.dist.sample(s);
            Outcome o;
            const auto sns = detail::probe_interior(big, interior, params.dist, E, rep.ns_threshold, params.M_ext,
                                                    ProbeMode::SNS, s.child("big", 0));
            o.sns_fail = !sns.holds_on_probes;
            for (const auto& c : sns.certificates) o.resonant = o.resonant || std::isinf(c.value);
            const auto snr = detail::probe_interior(big, interior, params.dist, E, gamma, 0, ProbeMode::SNR, s);
            o.nr_fail = !snr.holds_on_probes;
            if (k >= 1) {
                std::vector<Site> bad_m, bad_mk;
                for (std::size_t ci = 0; ci < centres.size(); ++ci) {
                    std::vector<double> vals(small_lookup[ci].size());
                    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = interior[small_lookup[ci][j]];
                    // the stricter threshold decides both verdicts from one probe set
                    const auto r = detail::probe_interior(*small, vals, params.dist, E, small_threshold_mk, params.M_ext,
                                                          ProbeMode::SNS, s.child("small", ci));
                    if (r.worst > small_threshold_m) bad_m.push_back(centres[ci]);
                    if (r.worst > small_threshold_mk) bad_mk.push_back(centres[ci]);
                }
                o.cluster = detail::max_distant_subset(bad_m, distance);
                const bool hyp_ii = detail::max_distant_subset(bad_mk, distance) <= static_cast<std::size_t>(params.S);
                o.hypotheses = !o.nr_fail && hyp_ii;
                o.counterexample = o.hypotheses && o.sns_fail;
            }
            return o;
        });

        std::uint64_t fails = 0;
        ClusterSummary cl;
        for (const auto& o : outcomes) {
            fails += o.sns_fail;
            rep.resonant_failures += o.sns_fail && o.resonant;
            rep.ns_failures += o.sns_fail && !o.resonant;
            rep.nr_failures += o.nr_fail;
            if (k >= 1) {
                if (cl.histogram.size() <= o.cluster) cl.histogram.resize(o.cluster + 1, 0);
                ++cl.histogram[o.cluster];
                cl.samples_with_hypotheses += o.hypotheses;
                cl.counterexamples += o.counterexample;
            }
        }
        rep.p = make_estimate(fails, trials, params.level);
        rep.pass = rep.p.ci.hi <= rep.target;
        rep.certificate_note = "SNS decided on probe certificates (all-min, all-max, " + std::to_string(params.M_ext) +
                               " random exteriors on a ring of width " + std::to_string(big.W) + ", zero beyond)";
        if (k >= 1) {
            cl.admissible_centres = centres.size();
            cl.distance = distance;
            const auto S1 = static_cast<std::size_t>(params.S + 1);
            cl.collection_count = detail::count_distant_collections(centres, distance, S1);
            cl.p_prev_upper = reports.back().p.ci.hi;
            const double half = 0.5 * std::pow(static_cast<double>(L), -params.b);
            const double pS = std::pow(cl.p_prev_upper, static_cast<double>(S1));
            cl.bound_count = half + cl.collection_count * pS;
            const double log_term = static_cast<double>(S1) * std::log(params.Y(k)) - detail::log_factorial(static_cast<double>(S1));
            cl.bound_factorial = half + std::exp(log_term) * pS;
            cl.lemma_pass = rep.p.ci.hi <= cl.bound_count;
            rep.cluster = cl;
        }
        reports.push_back(rep);
    }
    return reports;
}

} // namespace alloyloc::experiments
