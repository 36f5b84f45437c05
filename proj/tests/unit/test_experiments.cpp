#include <gtest/gtest.h>

#include <cmath>

#include "alloyloc/experiments/ils.hpp"
#include "alloyloc/experiments/msa.hpp"
#include "alloyloc/experiments/wegner.hpp"

using namespace alloyloc;
using namespace alloyloc::experiments;

namespace {

WegnerConfig tiny_wegner() {
    WegnerConfig c;
    c.L = 2;
    c.tau = 2;
    c.theta = 0.5;
    c.A = 2;
    c.g = 1;
    c.trials = 4000;
    c.level = 0.99;
    return c;
}

// Brute force through the plain cumulative-potential path, no influence matrix.
double wegner_oracle(const WegnerConfig& c, const FieldSample& frozen, double E) {
    const Site o = Site::origin(c.d);
    const auto ann = Annulus(o, c.L, c.R_L()).sites();
    const auto pot = c.potential();
    const auto atoms = c.dist.atoms();
    double total = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << ann.size()); ++mask) {
        FieldSample f = frozen;
        double p = 1;
        for (std::size_t j = 0; j < ann.size(); ++j) {
            const auto& a = atoms[(mask >> j) & 1];
            f.set(ann[j], a.first);
            p *= a.second;
        }
        const auto h = spectral::assemble_hamiltonian(Ball(o, c.L), pot, f, c.g);
        if (spectral::spectral_distance(spectral::eigenvalues(h), E) <= c.eps_L()) total += p;
    }
    return total;
}

} // namespace

// ---------------------------------------------------------------------------
// Wegner

TEST(Wegner, DerivedQuantities) {
    WegnerConfig c;
    c.L = 3;
    c.tau = 4;
    c.theta = 0.2;
    EXPECT_NEAR(c.beta(), 0.7, 1e-12);
    EXPECT_EQ(c.R_L(), 81);
    EXPECT_NEAR(c.eps_L(), std::pow(81.0, -2.0 / 1.2), 1e-15);
}

TEST(Wegner, RejectsBadConfigs) {
    auto c = tiny_wegner();
    c.trials = 99;
    EXPECT_THROW(wegner_experiment(c, FieldSample(1), 1), ConfigError);
    c = tiny_wegner();
    c.tau = 1.1;  // ⌊2^1.1⌋ = 2 = L
    c.theta = 0.05;
    EXPECT_THROW(wegner_experiment(c, FieldSample(1), 1), ConfigError);
    c = tiny_wegner();
    c.theta = 1.5;
    EXPECT_THROW(wegner_experiment(c, FieldSample(1), 1), ConfigError);
}

TEST(Wegner, ZeroCouplingIsDeterministic) {
    auto c = tiny_wegner();
    c.g = 0;
    c.trials = 200;
    c.C = 1;
    const auto free = spectral::eigenvalues(spectral::hamiltonian_from_potential(Ball(Site::origin(1), 2), std::vector<double>(5, 0.0), 0));
    std::vector<double> energies{free(0), free(0) + 0.5 * c.eps_L(), free(0) - 2 * c.eps_L(), 1.0, 10.0};
    const auto r = wegner_scan(c, FieldSample(1), 3, energies);
    for (const auto& p : r.points) {
        const bool expect = spectral::spectral_distance(free, p.E) <= c.eps_L();
        EXPECT_EQ(p.estimate.p_hat, expect ? 1.0 : 0.0) << p.E;
    }
}

TEST(Wegner, ExactEnumerationMatchesOracle) {
    const auto c = tiny_wegner();
    FieldSample frozen(1, Background::frozen(0.25));
    frozen.set(Site::axis(1, 0), -1.0);
    std::vector<double> energies{0.0, 0.7, 1.9, 3.1, 4.2};
    const auto exact = wegner_exact(c, frozen, energies);
    for (std::size_t i = 0; i < energies.size(); ++i) EXPECT_NEAR(exact[i], wegner_oracle(c, frozen, energies[i]), 1e-12);
}

TEST(Wegner, MonteCarloAgreesWithEnumeration) {
    const auto c = tiny_wegner();
    std::vector<double> energies{0.1, 1.0, 2.0, 3.0};
    const auto r = wegner_scan(c, FieldSample(1), 17, energies, true);
    EXPECT_EQ(r.annulus_sites, 4u);
    for (const auto& p : r.points) {
        ASSERT_TRUE(p.exact.has_value());
        EXPECT_TRUE(p.estimate.ci.contains(*p.exact)) << p.E;
    }
}

TEST(Wegner, FittedConstantBoundsCalibrationEnergies) {
    auto c = tiny_wegner();
    c.trials = 2000;
    const auto r = wegner_experiment(c, FieldSample(1), 5);
    EXPECT_TRUE(r.C_fitted);
    EXPECT_GT(r.C, 0);
    EXPECT_NEAR(r.calibration_spacing, r.eps_L / 4, 1e-15);
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_NEAR(r.points[0].bound, r.C * 5 * std::pow(r.eps_L, r.beta), 1e-12);
}

TEST(Wegner, FarExteriorBeyondTruncationIsIrrelevant) {
    auto c = tiny_wegner();
    c.r_max = 64;
    c.trials = 500;
    FieldSample a(1);
    FieldSample b = a;
    b.set(Site::axis(1, 200), 1.0);
    b.set(Site::axis(1, -300), -1.0);
    const auto ra = wegner_scan(c, a, 9, {0.5, 2.5});
    const auto rb = wegner_scan(c, b, 9, {0.5, 2.5});
    ASSERT_EQ(ra.points.size(), rb.points.size());
    for (std::size_t i = 0; i < ra.points.size(); ++i) {
        EXPECT_EQ(ra.points[i].estimate.hits, rb.points[i].estimate.hits);
        EXPECT_EQ(ra.points[i].pass, rb.points[i].pass);
    }
    EXPECT_EQ(ra.C, rb.C);
}

TEST(Wegner, ThreadCountDoesNotChangeResults) {
    auto c = tiny_wegner();
    c.trials = 600;
    const auto r1 = wegner_scan(c, FieldSample(1), 21, {0.3, 1.7}, true, 1);
    const auto r4 = wegner_scan(c, FieldSample(1), 21, {0.3, 1.7}, true, 4);
    EXPECT_EQ(r1.C, r4.C);
    for (std::size_t i = 0; i < r1.points.size(); ++i) {
        EXPECT_EQ(r1.points[i].estimate.hits, r4.points[i].estimate.hits);
        EXPECT_EQ(*r1.points[i].exact, *r4.points[i].exact);
    }
}

// ---------------------------------------------------------------------------
// Thin tails

TEST(ThinTail, RefusesSignedAmplitudes) {
    ThinTailConfig c;
    c.dist = AmplitudeDistribution::bernoulli_sym();
    EXPECT_THROW(ils_thin_tail(c, 1), ConfigError);
}

TEST(ThinTail, RejectsCertainSmallAmplitudes) {
    ThinTailConfig c;
    c.kappa = 1.5;  // P{ω ≤ κ} = 1
    EXPECT_THROW(ils_thin_tail(c, 1), ConfigError);
}

TEST(ThinTail, GeometryAndThresholds) {
    ThinTailConfig c;
    EXPECT_EQ(c.q_inner(), 2);
    EXPECT_EQ(c.q_outer(), 4);
    EXPECT_EQ(c.random_radius(), 8);
    EXPECT_DOUBLE_EQ(c.lambda(), 0.5);
    EXPECT_DOUBLE_EQ(c.lambda_kappa(), 0.5 / 16);
    EXPECT_DOUBLE_EQ(c.eps_kappa(), 0.5);
}

TEST(ThinTail, ConstantUnitAmplitudesNeverTrigger) {
    ThinTailConfig c;
    c.dist = AmplitudeDistribution::bernoulli_p(1.0);
    c.trials = 300;
    const auto r = ils_thin_tail(c, 4);
    EXPECT_EQ(r.event.hits, 0u);
    EXPECT_EQ(r.min_potential_event.hits, 0u);
    EXPECT_EQ(r.rayleigh_violations, 0u);
}

TEST(ThinTail, ExactChainOnSmallestBox) {
    ThinTailConfig c;
    const auto ex = ils_thin_exact(c);
    EXPECT_TRUE(ex.chain_holds);
    EXPECT_DOUBLE_EQ(ex.q_small_formula, 1.0 / 16);
    for (double q : ex.site_q_small) EXPECT_NEAR(q, 1.0 / 16, 1e-14);

    // independent brute force of P{E₀ ≤ λ}
    const Site o = Site::origin(1);
    const auto region = enumerate_ball(Ball(o, 8));
    const auto pot = c.potential();
    double p_event = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << region.size()); mask += 1) {
        FieldSample f(1);
        for (std::size_t j = 0; j < region.size(); ++j) f.set(region[j], static_cast<double>((mask >> j) & 1));
        const auto h = spectral::assemble_hamiltonian(Ball(o, 4), pot, f, 1.0);
        if (spectral::eigenvalues(h)(0) <= c.lambda()) p_event += std::ldexp(1.0, -static_cast<int>(region.size()));
    }
    EXPECT_NEAR(ex.event, p_event, 1e-12);
}

TEST(ThinTail, MonteCarloChecksHoldPerSample) {
    ThinTailConfig c;
    c.trials = 5000;
    const auto r = ils_thin_tail(c, 8);
    EXPECT_EQ(r.rayleigh_violations, 0u);
    EXPECT_EQ(r.implication_violations, 0u);
    EXPECT_LE(r.event.hits, r.min_potential_event.hits);
    const auto ex = ils_thin_exact(c);
    EXPECT_TRUE(stats::wilson(r.event.hits, r.event.trials, 0.999).contains(ex.event));
}

TEST(ThinTail, UniformAmplitudes) {
    ThinTailConfig c;
    c.dist = AmplitudeDistribution::uniform01();
    c.kappa = 0.3;
    c.trials = 500;
    EXPECT_DOUBLE_EQ(c.eps_kappa(), 0.3);
    const auto r = ils_thin_tail(c, 2);
    EXPECT_EQ(r.implication_violations, 0u);
    EXPECT_NEAR(r.chain_bound, 9 * std::pow(0.3, 4), 1e-15);
}

// ---------------------------------------------------------------------------
// Strong disorder

TEST(StrongDisorder, DeltaFormula) {
    StrongDisorderConfig c;
    c.eps = 1;
    c.d = 1;
    c.g = 10;
    EXPECT_DOUBLE_EQ(c.delta(), 0.5);
    c.g = 0;
    EXPECT_NEAR(c.delta(), c.delta_target(), 1e-15);
    EXPECT_NEAR(c.derived_g(), 5 * std::pow(4.0, 1.5), 1e-9);
}

TEST(StrongDisorder, RejectsBadParameters) {
    StrongDisorderConfig c;
    c.kappa = 1.0;  // must lie in (0, A − d)
    EXPECT_THROW(ils_strong_disorder(c, 1), ConfigError);
    c = StrongDisorderConfig{};
    c.spacing = 0.9;
    EXPECT_THROW(ils_strong_disorder(c, 1), ConfigError);
    c = StrongDisorderConfig{};
    c.theorem = IlsTheorem::power_law;
    c.b = 3;
    c.tau = 1.5;
    EXPECT_THROW(ils_strong_disorder(c, 1), ConfigError);
}

TEST(StrongDisorder, ReductionHoldsOnEverySample) {
    StrongDisorderConfig c;
    c.trials = 400;
    const auto r = ils_strong_disorder(c, 12);
    EXPECT_EQ(r.reduction_violations, 0u);
    EXPECT_FALSE(r.g_below_threshold);
    EXPECT_LE(r.grid_spacing, c.eps / 2);
    EXPECT_GT(r.grid_points, 0u);
    EXPECT_GE(r.sup_estimate.p_hat, 0.0);
    EXPECT_LE(r.sup_estimate.p_hat, 1.0);
    // the event {dist ≤ ε} at the argmax is contained in {∃x: V(x) ∈ I_δ}
    EXPECT_LE(r.sup_estimate.hits, r.interval_event.hits);
    EXPECT_TRUE(r.concentration_consistent);
    EXPECT_EQ(r.concentration_shells, 8);
}

TEST(StrongDisorder, WeakCouplingWarns) {
    StrongDisorderConfig c;
    c.trials = 50;
    c.g = 1;
    const auto r = ils_strong_disorder(c, 3);
    EXPECT_TRUE(r.g_below_threshold);
    EXPECT_FALSE(r.warning.empty());
    EXPECT_EQ(r.reduction_violations, 0u);
}

TEST(StrongDisorder, PowerLawFormUsesConditioningRadius) {
    StrongDisorderConfig c;
    c.theorem = IlsTheorem::power_law;
    c.L0 = 3;
    c.b = 1;
    c.tau = 1.5;
    c.trials = 100;
    EXPECT_EQ(c.R(), 5);
    EXPECT_NEAR(c.target(), 1.0 / 3, 1e-15);
    const auto r = ils_strong_disorder(c, 6);
    EXPECT_EQ(r.random_sites, 11u);
    EXPECT_EQ(r.reduction_violations, 0u);
}

// ---------------------------------------------------------------------------
// NS / NR predicates

TEST(Predicates, NonResonanceClosedForm) {
    const auto h = spectral::hamiltonian_from_potential(Ball(Site::origin(1), 1), {0, 0, 0}, 1);
    EXPECT_TRUE(nr_predicate(h, 0.0, 0.5));
    EXPECT_NEAR(spectral::spectral_distance(spectral::eigenvalues(h), 0.0), 2 - std::sqrt(2.0), 1e-12);
    EXPECT_FALSE(nr_predicate(h, 0.0, 0.6));
    EXPECT_TRUE(nr_predicate(h, 2.0, 0.0));
    EXPECT_FALSE(nr_predicate(h, 2.0, 1e-9));
}

TEST(Predicates, NonSingularBelowSpectrum) {
    const Ball box(Site::origin(1), 9);
    const auto field = sample_field(AmplitudeDistribution::uniform01(), enumerate_ball(Ball(Site::origin(1), 30)), Stream(3, "ns"));
    const auto h = spectral::assemble_hamiltonian(box, InteractionPotential::piecewise(2, 1), field, 10);
    const auto ev = spectral::eigenvalues(h);
    EXPECT_TRUE(ns_predicate(h, ev(0) - 10, 1e-4));
    EXPECT_FALSE(ns_predicate(h, ev(3), 1e-4));
    EXPECT_FALSE(ns_predicate(h, ev(3), 1e6));
}

TEST(Predicates, CentreBallRadiusIsFloorOfThird) {
    const NsGeometry g3(Ball(Site::origin(1), 3));
    EXPECT_EQ(g3.centre_rows.size(), 3u);  // ⌊3/3⌋ = 1
    const NsGeometry g2(Ball(Site::origin(1), 2));
    EXPECT_EQ(g2.centre_rows.size(), 1u);
    EXPECT_EQ(g3.boundary.size(), 2u);
}

TEST(Predicates, MonotoneInThresholds) {
    const Ball box(Site::origin(1), 6);
    const auto field = sample_field(AmplitudeDistribution::uniform01(), enumerate_ball(Ball(Site::origin(1), 20)), Stream(5, "mono"));
    const auto h = spectral::assemble_hamiltonian(box, InteractionPotential::piecewise(3, 1), field, 20);
    for (double E : {-3.0, 5.0, 12.0, 21.0}) {
        bool prev = false;
        for (double eps : {1e-12, 1e-8, 1e-5, 1e-3, 1e-1, 10.0}) {
            const bool now = ns_predicate(h, E, eps);
            EXPECT_TRUE(!prev || now);
            prev = now;
        }
        bool prev_nr = true;
        for (double gamma : {0.0, 0.01, 0.1, 1.0, 5.0}) {
            const bool now = nr_predicate(h, E, gamma);
            EXPECT_TRUE(prev_nr || !now);
            prev_nr = now;
        }
    }
}

// ---------------------------------------------------------------------------
// Stable predicates

TEST(SnsProbe, SnrWithZeroFieldIsFreeLaplacianTest) {
    const auto pot = InteractionPotential::piecewise(2, 1);
    const Ball box(Site::origin(1), 2);
    FieldSample interior(1);
    for (const auto& x : enumerate_ball(Ball(Site::origin(1), 4))) interior.set(x, 0.0);
    const auto free = spectral::eigenvalues(spectral::hamiltonian_from_potential(box, std::vector<double>(5, 0.0), 1));
    for (double E : {0.0, 1.0, 2.5}) {
        const auto r = sns_probe(pot, box, 7.0, E, 0.2, interior, 2.0, 3, ProbeMode::SNR, AmplitudeDistribution::uniform01());
        EXPECT_TRUE(r.exact);
        EXPECT_EQ(r.certificates.size(), 1u);
        EXPECT_EQ(r.holds_on_probes, spectral::spectral_distance(free, E) >= 0.2);
    }
}

TEST(SnsProbe, BudgetSemantics) {
    const auto pot = InteractionPotential::piecewise(4, 1);
    const Ball box(Site::origin(1), 3);
    const auto interior = sample_field(AmplitudeDistribution::uniform01(), enumerate_ball(Ball(Site::origin(1), 5)), Stream(2, "i"));
    const auto r0 = sns_probe(pot, box, 30, 15, 1e-3, interior, 1.5, 0, ProbeMode::SNS, AmplitudeDistribution::uniform01());
    EXPECT_EQ(r0.certificates.size(), 2u);
    EXPECT_FALSE(r0.exact);
    EXPECT_FALSE(r0.note.empty());
    const auto r3 = sns_probe(pot, box, 30, 15, 1e-3, interior, 1.5, 3, ProbeMode::SNS, AmplitudeDistribution::uniform01());
    EXPECT_EQ(r3.certificates.size(), 5u);
    bool all = true;
    for (const auto& c : r3.certificates) all = all && c.holds;
    EXPECT_EQ(all, r3.holds_on_probes);
}

TEST(SnsProbe, InteriorMustCoverConditioningBall) {
    const auto pot = InteractionPotential::piecewise(4, 1);
    FieldSample interior(1);
    for (const auto& x : enumerate_ball(Ball(Site::origin(1), 3))) interior.set(x, 0.5);
    EXPECT_THROW(sns_probe(pot, Ball(Site::origin(1), 3), 1, 0, 1, interior, 1.5, 0, ProbeMode::SNS,
                           AmplitudeDistribution::uniform01()),
                 ConfigError);
}

TEST(SnsProbe, PlateauExteriorShiftsByMultipleOfIdentity) {
    // with υ = 2, the sites at distance 5..8 from a radius-1 box all sit in plateau 2 (r ∈ [4, 9))
    const auto pot = InteractionPotential::piecewise(3, 2);
    const Ball box(Site::origin(1), 1);
    FieldSample a(1), b(1);
    for (std::int64_t x : {6, 7, -6, -7}) {
        ASSERT_TRUE(spectral::is_plateau_site(box, pot, Site::axis(1, x)));
        a.set(Site::axis(1, x), 0.0);
        b.set(Site::axis(1, x), 1.0);
    }
    const auto ha = spectral::assemble_hamiltonian(box, pot, a, 3.0);
    const auto hb = spectral::assemble_hamiltonian(box, pot, b, 3.0);
    const Eigen::MatrixXd diff = hb.matrix - ha.matrix;
    const double c = diff(0, 0);
    EXPECT_GT(c, 0);
    EXPECT_LT((diff - c * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
}

// ---------------------------------------------------------------------------
// MSA

TEST(MsaParams, ValidatorNamesViolatedInequality) {
    MSAParams p;
    p.A = 3;
    p.b = 1.2;
    p.alpha = 2;
    p.tau = 1.5;
    EXPECT_NE(p.violation().find("b - alpha*d > 0"), std::string::npos) << p.violation();
    EXPECT_THROW(p.validate(), ConfigError);

    p = MSAParams{};
    p.tau = 0.5;
    EXPECT_NE(p.violation().find("tau > 1"), std::string::npos);
    p = MSAParams{};
    p.alpha = 2;
    EXPECT_NE(p.violation().find("b - alpha*d > 0"), std::string::npos);
    p = MSAParams{};
    EXPECT_TRUE(p.violation().empty()) << p.violation();
    EXPECT_NEAR(p.S_lower(), 18, 1e-9);
    p.S = 18;
    EXPECT_NE(p.violation().find("S > b*alpha/(b - alpha*d)"), std::string::npos);
    p = MSAParams{};
    p.tau = 0.39;
    EXPECT_FALSE(p.violation().empty());
}

TEST(MsaParams, DerivedSequences) {
    MSAParams p;
    EXPECT_EQ(p.L(0), 6);
    EXPECT_EQ(p.L(1), 25);
    EXPECT_NEAR(p.m_k(0), 1 + std::pow(6.0, -0.125), 1e-15);
    EXPECT_NEAR(p.eps_k(0), 4 * std::pow(6.0, -8.5), 1e-18);
    EXPECT_NEAR(p.Y(1), std::pow(6.0, 0.8), 1e-12);
}

TEST(MsaCluster, AdmissibleCentresAndDistantSubsets) {
    const auto c = experiments::detail::admissible_centres(1, 6, 25);
    ASSERT_EQ(c.size(), 7u);
    EXPECT_EQ(c.front()[0], -18);
    EXPECT_EQ(c.back()[0], 18);
    EXPECT_EQ(experiments::detail::max_distant_subset(c, 29.4), 2u);
    EXPECT_EQ(experiments::detail::max_distant_subset(c, 12), 4u);
    EXPECT_EQ(experiments::detail::count_distant_collections(c, 29.4, 2), 3.0);  // (−18,12) (−18,18) (−12,18)
    EXPECT_EQ(experiments::detail::count_distant_collections(c, 29.4, 3), 0.0);
    EXPECT_EQ(experiments::detail::count_distant_collections(c, 0, 3), 35.0);
}

TEST(Msa, ScaleZeroRunIsDeterministic) {
    MSAParams p;
    const auto a = msa_run(p, 0, 300, 50, 7, 1);
    const auto b = msa_run(p, 0, 300, 50, 7, 3);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].p.hits, b[0].p.hits);
    EXPECT_GE(a[0].p.p_hat, 0);
    EXPECT_LE(a[0].p.p_hat, 1);
    EXPECT_EQ(a[0].ci_method, "wilson-95");
    EXPECT_FALSE(a[0].cluster.has_value());
    EXPECT_EQ(a[0].ns_failures + a[0].resonant_failures, a[0].p.hits);
}

TEST(Msa, ScaleStepReportsLemmaQuantities) {
    MSAParams p;
    const auto r = msa_run(p, 1, 200, 50, 11);
    ASSERT_EQ(r.size(), 2u);
    ASSERT_TRUE(r[1].cluster.has_value());
    const auto& cl = *r[1].cluster;
    EXPECT_EQ(cl.admissible_centres, 7u);
    EXPECT_EQ(cl.collection_count, 0.0);
    EXPECT_NEAR(cl.bound_count, 0.5 / 625, 1e-15);
    EXPECT_GE(cl.bound_factorial, cl.bound_count);
    EXPECT_EQ(cl.p_prev_upper, r[0].p.ci.hi);
    std::uint64_t total = 0;
    for (auto h : cl.histogram) total += h;
    EXPECT_EQ(total, 200u);
    EXPECT_EQ(cl.counterexamples, 0u);
}

TEST(Msa, RejectsInvalidParameters) {
    MSAParams p;
    p.S = 3;
    EXPECT_THROW(msa_run(p, 0, 10, 1, 1), ConfigError);
}
