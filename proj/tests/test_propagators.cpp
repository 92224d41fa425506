#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "parareal/propagators.hpp"

using namespace parareal;

namespace {

void expect_same_rational(const RationalFunction& a, const RationalFunction& b, double tol) {
    const auto& an = a.num().coeffs();
    const auto& ad = a.den().coeffs();
    ASSERT_EQ(an.size(), b.num().coeffs().size());
    ASSERT_EQ(ad.size(), b.den().coeffs().size());
    for (std::size_t i = 0; i < an.size(); ++i) EXPECT_NEAR(an[i], b.num().coeff(i), tol) << "num " << i;
    for (std::size_t i = 0; i < ad.size(); ++i) EXPECT_NEAR(ad[i], b.den().coeff(i), tol) << "den " << i;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= x.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

} // namespace

TEST(Catalog, AllNamesResolve) {
    for (const auto& name : catalog_names()) EXPECT_EQ(scheme_name(catalog(name)), name);
    EXPECT_THROW(catalog("rk4"), UnknownScheme);
}

TEST(Catalog, Bdf2Coefficients) {
    const auto bdf2 = two_step("bdf2");
    EXPECT_NEAR(bdf2.alpha[0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(bdf2.alpha[1], -4.0 / 3.0, 1e-15);
    EXPECT_EQ(bdf2.alpha[2], 1.0);
    EXPECT_EQ(bdf2.beta[0], 0.0);
    EXPECT_EQ(bdf2.beta[1], 0.0);
    EXPECT_NEAR(bdf2.beta[2], 2.0 / 3.0, 1e-15);
}

TEST(Catalog, O2cpRationalFunctions) {
    const auto o2cp = two_step("o2cp");
    EXPECT_NEAR(o2cp.r1(0.0) + o2cp.r2(0.0), 1.0, 1e-15);
    expect_same_rational(o2cp.r1, RationalFunction(Polynomial({0.02178, -0.00047}), Polynomial({1.0, 0.56380})), 1e-15);
    expect_same_rational(o2cp.r2, RationalFunction(Polynomial({0.97822, -0.46300}), Polynomial({1.0, 0.56380})), 1e-15);
}

TEST(Catalog, SingleStepConsistency) {
    for (const auto& name : catalog_names()) {
        const auto s = catalog(name);
        if (const auto* ss = std::get_if<SingleStepScheme>(&s)) EXPECT_NEAR(ss->stability(0.0), 1.0, 1e-12) << name;
    }
}

TEST(Catalog, TableausAreConsistent) {
    for (const auto& name : catalog_names()) {
        const auto s = catalog(name);
        const auto* ss = std::get_if<SingleStepScheme>(&s);
        if (!ss || !ss->tableau) continue;
        double sum = 0.0;
        for (double b : ss->tableau->b) sum += b;
        EXPECT_NEAR(sum, 1.0, 1e-12) << name;
        expect_same_rational(stability_from_tableau(*ss->tableau), ss->stability, 1e-10);
    }
}

TEST(StabilityFromTableau, RadauIIA3MatchesPrinted) {
    const auto r = stability_from_tableau(tableaus::radau_iia_3());
    expect_same_rational(r, RationalFunction(Polynomial({1.0, -0.4, 0.05}), Polynomial({1.0, 0.6, 0.15, 1.0 / 60.0})),
                         1e-10);
}

TEST(StabilityFromTableau, BackwardEuler) {
    expect_same_rational(stability_from_tableau(tableaus::backward_euler()),
                         RationalFunction(Polynomial({1.0}), Polynomial({1.0, 1.0})), 1e-14);
}

TEST(StabilityFromTableau, Sdirk2MatchesPrinted) {
    const double g = (2.0 - std::sqrt(2.0)) / 2.0;
    const RationalFunction printed(Polynomial({1.0, 2.0 * g - 1.0}), Polynomial({1.0, 2.0 * g, g * g}));
    expect_same_rational(stability_from_tableau(tableaus::sdirk2()), printed, 1e-12);
}

TEST(StabilityFromTableau, RadauIIA2IsLStable) {
    const auto r = stability_from_tableau(tableaus::radau_iia_2());
    EXPECT_EQ(r.num().degree(), 1);
    EXPECT_EQ(r.den().degree(), 2);
    EXPECT_NEAR(r(0.0), 1.0, 1e-14);
    EXPECT_LT(std::abs(r(1e12)), 1e-10);
}

TEST(StabilityFromTableau, FinePropagatorsDampStiffModes) {
    for (const char* name : {"radau_iia_2", "radau_iia_3", "lobatto_iiic_3"}) {
        const auto r = single_step(name).stability;
        EXPECT_LT(r.num().degree(), r.den().degree()) << name;
        for (int i = 0; i <= 90; ++i) {
            const double s = std::pow(10.0, -3.0 + 9.0 * i / 90.0);
            EXPECT_LT(std::abs(r(s)), 1.0) << name << " s=" << s;
        }
    }
}

TEST(StabilityFromTableau, AccuracyOrderSlopes) {
    // Local error |r(s) - e^{-s}| ~ C s^{q+1}; halve s while the error stays well above roundoff.
    const std::vector<std::pair<std::string, int>> cases{
        {"backward_euler", 1}, {"sdirk2", 2}, {"radau_iia_2", 3}, {"lobatto_iiic_3", 4}, {"radau_iia_3", 5}};
    for (const auto& [name, q] : cases) {
        const auto r = single_step(name).stability;
        const auto err = [&](double x) { return std::abs(r(x) - std::exp(-x)); };
        double x = 0.4;
        while (err(x / 4) >= 1e-12) x /= 2;
        EXPECT_GE(log_slope({x, x / 2}, {err(x), err(x / 2)}), q + 1 - 0.1) << name << " s=" << x;
    }
}

TEST(Theta, PublishedParametersGiveCatalogO2cp) {
    const auto a = two_step_from_theta(o2cp_theta());
    const auto b = two_step("o2cp");
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(a.alpha[i], b.alpha[i], 1e-14);
        EXPECT_NEAR(a.beta[i], b.beta[i], 1e-14);
    }
}

TEST(Theta, ZeroParametersGiveBackwardEulerR2) {
    const auto ts = two_step_from_theta({0.0, 0.0, 0.0, 0.0});
    for (double s : {0.0, 0.5, 3.0}) {
        EXPECT_EQ(ts.r1(s), 0.0);
        EXPECT_NEAR(ts.r2(s), 1.0 / (1.0 + s), 1e-15);
    }
}

TEST(Theta, RoundTripAndConsistency) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 100; ++i) {
        const ThetaParams th{u(rng), u(rng), u(rng), u(rng)};
        const auto ts = two_step_from_theta(th);
        EXPECT_NEAR(ts.r1(0.0) + ts.r2(0.0), 1.0, 1e-14);
        const auto back = theta_from_two_step(ts);
        EXPECT_NEAR(back.a1, th.a1, 1e-14);
        EXPECT_NEAR(back.a2, th.a2, 1e-14);
        EXPECT_NEAR(back.b1, th.b1, 1e-14);
        EXPECT_NEAR(back.c2, th.c2, 1e-14);
    }
}

TEST(ConsistencyOrder, Examples) {
    EXPECT_EQ(consistency_order(two_step("bdf2"), 3), 2);
    EXPECT_EQ(consistency_order(two_step("o2cp"), 2), 0);
    EXPECT_EQ(consistency_order(two_step_from_theta({0.5, 0.0, 0.0, -0.5}), 1), 1);
    EXPECT_THROW(consistency_order(make_two_step("bad", {0.0, -0.5, 1.0}, {0.0, 0.0, 1.0}), 1), NotConsistent);
}

TEST(ExactPhi, Examples) {
    EXPECT_NEAR(exact_phi(0.0, 1.0, 3.0, [](double) { return 0.0; }), 3.0, 1e-14);
    EXPECT_NEAR(exact_phi(1.0, 1.0, 1.0, [](double) { return 0.0; }), std::exp(-1.0), 1e-14);
    EXPECT_NEAR(exact_phi(1.0, 1.0, 0.0, [](double) { return 1.0; }), 1.0 - std::exp(-1.0), 1e-12);
    // f(s) = s: integral of e^{-(1-s)} s over [0,1] is e^{-1}.
    EXPECT_NEAR(exact_phi(1.0, 1.0, 0.0, [](double s) { return s; }), std::exp(-1.0), 1e-12);
}
