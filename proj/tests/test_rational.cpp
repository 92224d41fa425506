#include <gtest/gtest.h>

#include <random>

#include "parareal/propagators.hpp"
#include "parareal/rational.hpp"

using namespace parareal;

TEST(Polynomial, TrimsTrailingZeros) {
    Polynomial p({1.0, 2.0, 0.0, 0.0});
    EXPECT_EQ(p.degree(), 1);
    EXPECT_EQ(p.coeffs().size(), 2u);
    Polynomial z({0.0, 0.0});
    EXPECT_TRUE(z.is_zero());
}

TEST(Polynomial, EvaluatesAscendingCoefficients) {
    Polynomial p({1.0, -2.0, 3.0});
    EXPECT_DOUBLE_EQ(p(2.0), 1.0 - 4.0 + 12.0);
    const Complex z(0.0, 1.0);
    const Complex v = p(z);
    EXPECT_NEAR(v.real(), 1.0 - 3.0, 1e-15);
    EXPECT_NEAR(v.imag(), -2.0, 1e-15);
}

TEST(Polynomial, DerivativeAndProduct) {
    Polynomial p({1.0, 2.0, 3.0});
    const auto d = p.derivative();
    EXPECT_EQ(d.degree(), 1);
    EXPECT_DOUBLE_EQ(d.coeff(0), 2.0);
    EXPECT_DOUBLE_EQ(d.coeff(1), 6.0);
    const auto q = p * Polynomial({1.0, 1.0});
    EXPECT_EQ(q.degree(), 3);
    EXPECT_DOUBLE_EQ(q(1.5), p(1.5) * 2.5);
}

TEST(RationalFunction, NormalizesDenominatorAtZero) {
    RationalFunction r(Polynomial({2.0, 4.0}), Polynomial({2.0, 1.0}));
    EXPECT_DOUBLE_EQ(r.den().coeff(0), 1.0);
    EXPECT_DOUBLE_EQ(r.eval(1.0), 6.0 / 3.0);
}

TEST(RationalFunction, ZeroDenominatorRejected) {
    EXPECT_THROW(RationalFunction(Polynomial({1.0}), Polynomial({0.0})), Error);
}

TEST(RationalFunction, PoleRaises) {
    RationalFunction r(Polynomial({1.0}), Polynomial({1.0, -1.0}));
    EXPECT_THROW((void)eval_real(r, 1.0), PoleError);
    EXPECT_THROW((void)eval_complex(r, Complex(1.0, 0.0)), PoleError);
}

TEST(RationalFunction, Bdf2R2AtZero) {
    const auto bdf2 = two_step("bdf2");
    EXPECT_NEAR(eval_real(bdf2.r2, 0.0), 4.0 / 3.0, 1e-15);
    const Complex v = eval_complex(bdf2.r2, Complex(0.0, 0.0));
    EXPECT_NEAR(v.real(), 4.0 / 3.0, 1e-15);
    EXPECT_EQ(v.imag(), 0.0);
}

TEST(RationalFunction, RadauIIA3Values) {
    const auto r = single_step("radau_iia_3").stability;
    EXPECT_NEAR(eval_real(r, 0.0), 1.0, 1e-14);
    EXPECT_NEAR(eval_real(r, 1.0), 0.65 / (1.0 + 0.6 + 0.15 + 1.0 / 60.0), 1e-12);
    EXPECT_NEAR(eval_real(r, 1.0), 0.3679245, 1e-7);
}

TEST(RationalFunction, ComplexIdentityAndO2cp) {
    RationalFunction one;
    const Complex v = eval_complex(one, Complex(0.0, 1.0));
    EXPECT_EQ(v, Complex(1.0, 0.0));
    const auto o2cp = two_step("o2cp");
    EXPECT_LT(std::abs(eval_complex(o2cp.r1, Complex(0.0, 2.0))), 1.0);
}

TEST(RationalFunction, ComplexAgreesWithRealOnAxis) {
    for (const auto& name : catalog_names()) {
        const auto s = catalog(name);
        std::vector<RationalFunction> fns;
        if (const auto* ss = std::get_if<SingleStepScheme>(&s)) fns.push_back(ss->stability);
        else {
            fns.push_back(std::get<TwoStepScheme>(s).r1);
            fns.push_back(std::get<TwoStepScheme>(s).r2);
        }
        for (const auto& f : fns) {
            for (double x : {0.0, 0.3, 1.7, 12.0, 400.0}) {
                const double a = eval_real(f, x);
                const Complex b = eval_complex(f, Complex(x, 0.0));
                EXPECT_LE(std::abs(b.real() - a), 1e-14 * std::max(1.0, std::abs(a))) << name << " at " << x;
                EXPECT_LE(std::abs(b.imag()), 1e-14) << name;
            }
        }
    }
}

TEST(QuadraticRoots, Examples) {
    auto [a, b] = quadratic_roots(4.0 / 3.0, -1.0 / 3.0);
    EXPECT_NEAR(a.real(), 1.0, 1e-14);
    EXPECT_NEAR(b.real(), 1.0 / 3.0, 1e-14);
    auto [c, d] = quadratic_roots(0.97822, 0.02178);
    EXPECT_NEAR(c.real(), 1.0, 1e-14);
    EXPECT_NEAR(d.real(), -0.02178, 1e-14);
    auto [e, f] = quadratic_roots(0.0, 0.0);
    EXPECT_EQ(std::abs(e), 0.0);
    EXPECT_EQ(std::abs(f), 0.0);
}

TEST(QuadraticRoots, ResidualOrderingAndDeterminism) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 2000; ++i) {
        const Complex b(u(rng), i % 2 ? u(rng) : 0.0), c(u(rng), i % 3 ? u(rng) : 0.0);
        const auto roots = quadratic_roots(b, c);
        for (const Complex& z : {roots.first, roots.second})
            EXPECT_LE(std::abs(z * z - b * z - c), 1e-10 * (1.0 + std::abs(b) + std::abs(c)));
        EXPECT_GE(std::abs(roots.first), std::abs(roots.second));
        const auto again = quadratic_roots(b, c);
        EXPECT_EQ(roots.first, again.first);
        EXPECT_EQ(roots.second, again.second);
    }
}

TEST(QuadraticRoots, TieBrokenByRealThenImaginaryPart) {
    // z^2 + 1 = 0: roots +i and -i share modulus and real part.
    const auto [a, b] = quadratic_roots(0.0, -1.0);
    EXPECT_NEAR(a.imag(), 1.0, 1e-15);
    EXPECT_NEAR(b.imag(), -1.0, 1e-15);
    // z^2 - 1 = 0: roots 1 and -1.
    const auto [c, d] = quadratic_roots(0.0, 1.0);
    EXPECT_NEAR(c.real(), 1.0, 1e-15);
    EXPECT_NEAR(d.real(), -1.0, 1e-15);
}

TEST(QuadraticRoots, ConsistencyRootAtZero) {
    std::vector<TwoStepScheme> schemes{two_step("bdf2"), two_step("o2cp")};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) schemes.push_back(two_step_from_theta({u(rng), u(rng), u(rng), u(rng)}));
    for (const auto& ts : schemes) {
        const auto [a, b] = quadratic_roots(ts.r2(0.0), ts.r1(0.0));
        EXPECT_LE(std::min(std::abs(a - 1.0), std::abs(b - 1.0)), 1e-12) << ts.name;
    }
}
