#include <gtest/gtest.h>

#include <numbers>

#include "alloyloc/charfun.hpp"
#include "alloyloc/oracles.hpp"

using namespace alloyloc;
using namespace alloyloc::charfun;

namespace {
const auto sym = AmplitudeDistribution::bernoulli_sym();
const auto half = AmplitudeDistribution::bernoulli_p(0.5);
const auto uni = AmplitudeDistribution::uniform01();
const auto pot21 = InteractionPotential::piecewise(2, 1);
constexpr double pi = std::numbers::pi;
} // namespace

TEST(SingleCharFun, ClosedForms) {
    EXPECT_NEAR(single_char_fun(sym, pi).real(), -1.0, 1e-15);
    EXPECT_EQ(single_char_fun(uni, 0.0), cplx(1.0, 0.0));
    EXPECT_NEAR(std::abs(single_char_fun(half, pi)), 0.0, 1e-15);
    // uniform01 against direct (e^{it} − 1)/(it).
    for (double t : {0.3, 1.0, 7.5, -12.0}) {
        const cplx direct = (std::polar(1.0, t) - 1.0) / cplx(0, t);
        EXPECT_NEAR(std::abs(single_char_fun(uni, t) - direct), 0.0, 1e-14);
    }
    // Log-inverse modulus agrees with the modulus wherever both are well conditioned.
    for (const auto& dist : {sym, half, AmplitudeDistribution::bernoulli_p(0.2), uni})
        for (double t = -20; t <= 20; t += 0.37) {
            const double m = std::abs(dist.char_fun(t));
            if (m > 1e-6) EXPECT_NEAR(dist.log_inv_modulus(t), -std::log(m), 1e-9 * std::max(1.0, -std::log(m)));
        }
    EXPECT_GT(half.log_inv_modulus(pi), 30.0);
    EXPECT_EQ(AmplitudeDistribution::bernoulli_sym().log_inv_modulus(pi / 2 + 1e-17 * 0), std::log(1 / std::abs(std::cos(pi / 2))));
}

TEST(ShellProduct, Examples) {
    auto w1 = make_shell_weights(pot21, 1, 1, 1);
    const auto g = shell_product(sym, w1, {0.0, 0.7, 2.0});
    EXPECT_EQ(g.values[0], cplx(1.0, 0.0));
    for (std::size_t i = 1; i < 3; ++i) EXPECT_NEAR(g.values[i].real(), std::pow(std::cos(g.t[i]), 2), 1e-14);
    auto w3 = make_shell_weights(pot21, 1, 1, 3);
    const double expect = std::pow(std::cos(1.0) * std::cos(0.25) * std::cos(1.0 / 9), 2);
    EXPECT_NEAR(shell_product(sym, w3, {1.0}).values[0].real(), expect, 1e-14);
}

TEST(ShellProduct, InvariantsAndPhase) {
    std::vector<double> grid;
    for (double t = -30; t <= 30; t += 0.5) grid.push_back(t);
    for (const auto& dist : {sym, AmplitudeDistribution::bernoulli_p(0.3), uni}) {
        std::vector<double> prev(grid.size(), 1.0);
        for (std::int64_t n = 1; n <= 6; ++n) {
            const auto w = make_shell_weights(InteractionPotential::piecewise(2.5, 1.5), 2, 1, n);
            const auto g = shell_product(dist, w, grid);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double m = std::abs(g.values[i]);
                EXPECT_LE(m, 1 + 1e-12);
                EXPECT_LE(m, prev[i] + 1e-12);
                prev[i] = m;
                // φ(−t) = conj φ(t) on the symmetric grid.
                EXPECT_NEAR(std::abs(g.values[i] - std::conj(g.values[grid.size() - 1 - i])), 0, 1e-12);
                // Direct complex product.
                cplx direct = 1;
                for (const auto& term : w.terms) direct *= std::pow(dist.char_fun(term.a * grid[i]), term.K);
                EXPECT_NEAR(std::abs(direct - g.values[i]), 0, 1e-10);
                double sum = 0;
                for (const auto& term : w.terms) sum += term.K * dist.log_inv_modulus(term.a * grid[i]);
                if (std::isfinite(sum)) EXPECT_NEAR(g.log_inv_modulus[i], sum, 1e-10 * std::max(1.0, sum));
            }
        }
    }
}

TEST(ShellProduct, TruncationBoundCoversDroppedShells) {
    const auto w = make_shell_weights(pot21, 1, 1, 10);
    const double t = 5;
    const auto g = shell_product(sym, w, {t});
    const auto wide = make_shell_weights(pot21, 1, 1, 5000);
    const double full = shell_product(sym, wide, {t}).values[0].real();
    EXPECT_LE(std::abs(full - g.values[0].real()), g.truncation_bound);
}

TEST(Taylor, Examples) {
    const auto c0 = taylor_remainder_check(1, 0);
    EXPECT_EQ(c0.lhs, 0);
    EXPECT_EQ(c0.rhs, 0);
    EXPECT_TRUE(c0.holds);
    const auto c1 = taylor_remainder_check(1, pi);
    EXPECT_NEAR(c1.lhs, std::sqrt(4 + pi * pi), 1e-12);
    EXPECT_NEAR(c1.rhs, pi * pi / 2, 1e-12);
    EXPECT_TRUE(c1.holds);
    Stream s(1, "taylor");
    for (int i = 0; i < 1000; ++i) EXPECT_TRUE(taylor_remainder_check(4, -10 + 20 * s.uniform()).holds);
}

TEST(QuadraticBound, Examples) {
    const auto q = quadratic_log_bound(sym, 0.5);
    EXPECT_TRUE(q.bound_applies);
    EXPECT_DOUBLE_EQ(q.lower, 0.0625);
    EXPECT_NEAR(q.exact, -std::log(std::cos(0.5)), 1e-14);
    EXPECT_NEAR(q.exact, 0.130584, 1e-6);
    EXPECT_TRUE(q.holds);
    EXPECT_EQ(quadratic_log_bound(uni, 0).lower, 0);
    EXPECT_NEAR(quadratic_threshold(uni), 0.6 * std::pow(1.0 / 12, 0.25), 1e-15);
    EXPECT_NEAR(quadratic_threshold(uni), 0.3224, 1e-4);
    EXPECT_THROW(quadratic_log_bound(AmplitudeDistribution::bernoulli_p(1.0), 0.1), ConfigError);
}

TEST(TailS2, Examples) {
    const auto w = make_shell_weights(pot21, 1, 1, 200);
    const auto r = tail_bound_S2(sym, w, 100, 0.5);
    EXPECT_EQ(r.N_t, 15);
    EXPECT_TRUE(r.holds);
    EXPECT_GT(r.S2, 0);
    const auto r0 = tail_bound_S2(sym, w, 0.3, 0.5);
    EXPECT_EQ(r0.N_t, 0);
    EXPECT_NEAR(r0.S2, log_inv_modulus(sym, w, 0.3), 1e-14);
    EXPECT_DOUBLE_EQ(r.T_N, 0.5 * 200.0 * 200.0);
    const auto small = make_shell_weights(pot21, 1, 1, 5);
    const auto e = tail_bound_S2(sym, small, 100, 0.5);
    EXPECT_TRUE(e.tail_empty);
    EXPECT_EQ(e.S2, 0);
    EXPECT_THROW(tail_bound_S2(sym, w, 1, 5.0), ConfigError);
}

TEST(TailS2, HeadSizeMatchesLinearScan) {
    for (double ups : {1.0, 1.5, 2.0}) {
        const auto w = make_shell_weights(InteractionPotential::piecewise(3, ups), 1, 1, 3);
        for (double t : {0.1, 1.0, 3.7, 100.0, 1e4, 1e7}) {
            std::int64_t n = 0;
            if (w.a_of(1) * t > 0.5) {
                n = 1;
                while (w.a_of(n) * t > 0.5) ++n;
            }
            EXPECT_EQ(head_size(w, t, 0.5), n);
        }
    }
}

TEST(DecayFit, SlopeNearDOverA) {
    const auto f = decay_fit(sym, pot21, 1, 1e2, 1e5, 60);
    EXPECT_NEAR(f.fit.slope, 0.5, 0.05);
}

TEST(PartialLogBound, Examples) {
    const auto w = make_shell_weights(pot21, 1, 2, 4);
    const auto p = partial_log_bound(sym, w, 1);
    const double expect = 2 * (-std::log(std::cos(0.25)) - std::log(std::cos(1.0 / 9)) - std::log(std::cos(1.0 / 16)));
    EXPECT_NEAR(p.value, expect, 1e-14);
    EXPECT_TRUE(p.holds);
    const auto single = partial_log_bound(sym, make_shell_weights(pot21, 1, 3, 3), 2);
    EXPECT_NEAR(single.value, -2 * std::log(std::cos(2.0 / 9)), 1e-14);
    EXPECT_THROW(make_shell_weights(pot21, 1, 4, 3), ConfigError);
}

TEST(PartialLogBound, DoublingScales) {
    const double t = 3;
    for (std::int64_t N : {8, 16, 32, 64}) {
        const auto p = partial_log_bound(sym, make_shell_weights(pot21, 1, N / 2, N), t);
        const double ratio = p.value / p.reference;
        EXPECT_GT(ratio, 0.25);
        EXPECT_LT(ratio, 4 * 8.0);  // Σ_{n=N/2}^{N} 2n^{-4}t²/2 ≈ (7/3)·N^{-3}t²
        const auto q = partial_log_bound(sym, make_shell_weights(pot21, 1, N, 2 * N), t);
        EXPECT_NEAR(q.value / p.value, std::pow(2.0, -3.0), std::pow(2.0, -3.0) * 0.5);
    }
}

TEST(SmoothedIndicator, DominatesIndicatorAndTransform) {
    for (double eps : {0.01, 0.1, 0.5}) {
        const SmoothedIndicator chi{eps};
        for (int i = 0; i <= 2000; ++i) {
            const double x = -eps + 2 * eps * i / 2000.0;
            EXPECT_GE(chi(x), 1.0 - 1e-12);
        }
        for (int i = 0; i <= 200; ++i) EXPECT_GE(chi(-10 * eps + 0.1 * eps * i), 0.0);
        // ĥ against ∫ χ(x) cos(tx) dx by quadrature: ∫χ e^{itx} = 2 ĥ(t)/m_a.
        for (double t : {0.0, 1.0 / eps, 3.0 / eps}) {
            const double num = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                [&](double x) { return chi(x) * std::cos(t * x); }, -20 * eps, 20 * eps, 10, 1e-13);
            EXPECT_NEAR(num, 2 * chi.h_hat(t) / chi.mass_at_edge(), 1e-9);
        }
    }
}

TEST(Concentration, BoundDominatesExactMeasure) {
    const auto w = make_shell_weights(pot21, 1, 1, 4);
    const auto law = oracle::exact_law(sym, w);
    ASSERT_EQ(law.size(), 256u);
    Stream s(2, "conc");
    for (int i = 0; i < 50; ++i) {
        const double eps = std::max(0.09, 0.5 * s.uniform());
        const double E = -3 + 6 * s.uniform();
        const auto r = concentration_bound(sym, w, E, eps);
        const double mu = oracle::interval_mass(law, E - eps, E + eps);
        EXPECT_LE(mu, r.fourier_bound + 1e-12) << "E=" << E << " eps=" << eps;
        EXPECT_LE(r.fourier_bound, r.bound);
        EXPECT_GE(r.J1, 0);
        EXPECT_GE(r.J2, 0);
    }
}

TEST(Concentration, DoublingEps) {
    const auto w = make_shell_weights(pot21, 1, 1, 50);
    const auto a = concentration_bound(sym, w, 0.3, 0.001);
    const auto b = concentration_bound(sym, w, 0.3, 0.002);
    const double ratio = b.bound / a.bound;
    EXPECT_GE(ratio, 1.5);
    EXPECT_LE(ratio, 2.5);
}

TEST(Concentration, Refusals) {
    const auto w = make_shell_weights(pot21, 1, 1, 4);
    EXPECT_THROW(concentration_bound(AmplitudeDistribution::bernoulli_p(1.0), w, 0, 0.3), ConfigError);
    try {
        concentration_bound(sym, w, 0, 1e-4);
        FAIL() << "expected refusal";
    } catch (const ThresholdError& e) {
        EXPECT_NEAR(e.threshold, std::pow(4.0, -2 / 1.1), 1e-12);
    }
}

TEST(Cramer, Examples) {
    const auto w = make_shell_weights(pot21, 1, 1, 200);
    const auto c = cramer_ripple_bound(uni, 0.5, w, 1000);
    EXPECT_TRUE(c.applicable);
    EXPECT_DOUBLE_EQ(c.s_star, 4);
    EXPECT_GT(c.certified_count, 0);
    EXPECT_TRUE(c.holds);
    for (double s = 4; s < 400; s += 0.1) EXPECT_LE(std::abs(uni.char_fun(s)), 0.5 + 1e-15);
    EXPECT_FALSE(cramer_ripple_bound(sym, 0.5, w, 1000).applicable);
    const auto z = cramer_ripple_bound(uni, 0.5, w, 0.1);
    EXPECT_EQ(z.N_t, 0);
    EXPECT_EQ(z.bound, 0);
    EXPECT_THROW(cramer_ripple_bound(uni, 1.0, w, 1), ConfigError);
}

TEST(PolyaSzego, Examples) {
    auto id = [](std::int64_t n) { return static_cast<double>(n); };
    const auto one = polya_szego_limit([](double) { return 1.0; }, id, {10, 100});
    EXPECT_DOUBLE_EQ(one.lhs[0], 1.0);
    EXPECT_NEAR(one.rhs, 1.0, 1e-3 + one.rhs_error);
    const auto lin = polya_szego_limit([](double s) { return s; }, id, {1e4}, {.cutoff = 1e-6});
    EXPECT_NEAR(lin.rhs, 0.5, 1e-6);
    EXPECT_NEAR(lin.lhs[0], 0.5, 1e-3);
    // r_n = n², λ = 1/2: ∫₀¹ f(s²) ds with f(x) = x gives 1/3.
    const auto sq = polya_szego_limit([](double s) { return s; }, [](std::int64_t n) { return double(n * n); }, {1e6},
                                      {.lambda = 0.5, .cutoff = 1e-8});
    EXPECT_NEAR(sq.rhs, 1.0 / 3, 1e-6);
    EXPECT_NEAR(sq.lhs[0], 1.0 / 3, 2e-3);
    EXPECT_THROW(polya_szego_limit([](double s) { return 1 / (s - 0.5); }, id, {10}), ConfigError);
}

TEST(Bernstein, TransferMatchesEnumeration) {
    for (double q : {0.5, 0.4, 0.1})
        for (int n : {1, 5, 12})
            for (double tau : {0.0, 0.3, 1.1})
                EXPECT_NEAR(std::abs(MarkovSigns{q}.char_fun(n, tau) - oracle::markov_char_fun_enumerated(q, n, tau)), 0, 1e-12);
}

TEST(Bernstein, Examples) {
    const auto one = bernstein_approximation(MarkovSigns{0.5}, 1, 1.0);
    EXPECT_DOUBLE_EQ(one.B_n, 1.0);
    for (std::size_t i = 0; i < one.t.size(); ++i) {
        EXPECT_NEAR(one.phi[i].real(), std::cos(one.t[i]), 1e-14);
        EXPECT_NEAR(one.psi[i], 1 - one.t[i] * one.t[i], 1e-14);
    }
    for (int n : {4, 8, 12}) {
        const auto ind = bernstein_approximation(MarkovSigns{0.5}, n, 1.0);
        EXPECT_DOUBLE_EQ(ind.B_n, n);
        EXPECT_TRUE(ind.holds);
        for (double a : ind.alpha) EXPECT_EQ(a, 0.0);
        const auto mk = bernstein_approximation(MarkovSigns{0.4}, n, 1.0);
        EXPECT_TRUE(mk.holds) << mk.sup_gap << " vs " << mk.eta_sum;
    }
    EXPECT_THROW(bernstein_approximation(MarkovSigns{0.5}, 0, 1.0), ConfigError);
}
