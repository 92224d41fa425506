#include <gtest/gtest.h>

#include <cmath>

#include "parareal/optimizer.hpp"

using namespace parareal;

namespace {

const SpectralGrid& grid() {
    static const SpectralGrid g = SpectralGrid::default_grid();
    return g;
}

// Thinner grid for optimizer runs inside unit tests.
const SpectralGrid& small_grid() {
    static const SpectralGrid g = [] {
        SpectralGrid s;
        for (std::size_t i = 0; i < grid().size(); i += 10) s.samples.push_back(grid().samples[i]);
        s.samples.push_back(grid().samples.back());
        s.s_min = s.samples.front();
        s.s_max = s.samples.back();
        s.spacing = "composite";
        return s;
    }();
    return g;
}

double max_root_modulus(const ThetaParams& th, const SpectralGrid& g) {
    const auto ts = two_step_from_theta(th);
    double out = 0.0;
    for (double s : g.samples) {
        const auto [a, b] = quadratic_roots(ts.r2(s), ts.r1(s));
        out = std::max({out, std::abs(a), std::abs(b)});
    }
    return out;
}

} // namespace

TEST(Loss, PublishedParameters) {
    EXPECT_NEAR(loss_s(o2cp_theta(), grid()), 0.0064, 0.0005);
    EXPECT_LT(max_root_modulus(o2cp_theta(), grid()), 1.0);
    EXPECT_TRUE(is_feasible(o2cp_theta(), grid()));
}

TEST(Loss, ZeroParametersMatchClosedForm) {
    // R1 = 0, R2 = 1/(1+s): rho = {1/(1+s), 0} and the factor is e^{-s}|e^{-s} - 1/(1+s)| (1+s)/s.
    double expected = 0.0;
    for (double s : grid().samples)
        expected = std::max(expected, std::exp(-s) * std::abs(std::exp(-s) - 1.0 / (1.0 + s)) * (1.0 + s) / s);
    EXPECT_NEAR(loss_s({0, 0, 0, 0}, grid()), expected, 1e-14);
    EXPECT_NEAR(expected, 0.111525, 5e-6);
}

TEST(Loss, NonNegative) {
    for (const ThetaParams& th : {ThetaParams{0.1, 0.0, -0.5, -0.3}, o2cp_theta(), ThetaParams{0, 0, 0, 0}})
        EXPECT_GE(loss_s(th, grid()), 0.0);
}

TEST(Loss, BarrierIndependentSummation) {
    const auto ts = two_step_from_theta(o2cp_theta());
    double acc = 0.0;
    for (auto it = grid().samples.rbegin(); it != grid().samples.rend(); ++it) {
        const auto [a, b] = quadratic_roots(ts.r2(*it), ts.r1(*it));
        acc += std::log(1.0 - std::norm(a)) + std::log(1.0 - std::norm(b));
    }
    acc /= grid().size();
    const double lb = loss_b(o2cp_theta(), grid());
    EXPECT_LT(lb, 0.0);
    EXPECT_TRUE(std::isfinite(lb));
    EXPECT_NEAR(lb, acc, 1e-12 * std::abs(acc));
}

TEST(Loss, InfeasibleNamesSample) {
    const ThetaParams bad{2.0, 0.0, 0.0, 0.0};
    EXPECT_FALSE(is_feasible(bad, grid()));
    try {
        (void)loss_b(bad, grid());
        FAIL() << "expected Infeasible";
    } catch (const Infeasible& e) {
        EXPECT_EQ(e.sample, grid().samples.front());
    }
    EXPECT_THROW((void)loss_s(bad, grid()), Infeasible);
}

TEST(TotalLoss, CompositionAndMonotoneInMu) {
    const ThetaParams th{0.1, 0.0, -0.5, -0.3};
    EXPECT_EQ(total_loss(th, grid(), 0.0), loss_s(th, grid()));
    EXPECT_NEAR(total_loss(th, grid(), 1.0), loss_s(th, grid()) - loss_b(th, grid()), 1e-15);
    EXPECT_LE(total_loss(th, grid(), 0.1), total_loss(th, grid(), 0.2));
}

TEST(Subgradient, DescentDirection) {
    const ThetaParams th{0.1, 0.0, -0.5, -0.3};
    const double mu = 1e-2;
    const auto g = subgradient(th, grid(), mu);
    const double base = total_loss(th, grid(), mu);
    for (double eta : {1e-4, 1e-5}) {
        auto p = th.as_array();
        for (int i = 0; i < 4; ++i) p[i] -= eta * g[i];
        EXPECT_LT(total_loss(ThetaParams::from_array(p), grid(), mu), base) << eta;
    }
}

TEST(Subgradient, BarrierPartScalesWithMu) {
    const ThetaParams th{0.1, 0.0, -0.5, -0.3};
    const auto g1 = subgradient(th, grid(), 0.1);
    const auto g0 = subgradient(th, grid(), 0.0);
    const auto base = th.as_array();
    for (int i = 0; i < 4; ++i) {
        const double h = 1e-6 * (1.0 + std::abs(base[i]));
        auto p = base, m = base;
        p[i] += h;
        m[i] -= h;
        const double db = (loss_b(ThetaParams::from_array(p), grid()) - loss_b(ThetaParams::from_array(m), grid())) / (2 * h);
        const double got = g1[i] - g0[i];
        EXPECT_NEAR(got, -0.1 * db, 1e-4 * std::max(1e-3, std::abs(0.1 * db))) << i;
    }
}

TEST(Optimize, DoesNotWorsenPublishedPoint) {
    OptimizerConfig cfg;
    cfg.grid = small_grid();
    cfg.outer_iters = 3;
    cfg.inner_iters = 30;
    cfg.init = o2cp_theta();
    const auto res = optimize(cfg);
    EXPECT_LE(loss_s(res.theta, cfg.grid), loss_s(o2cp_theta(), cfg.grid));
    EXPECT_LE(loss_s(res.theta, grid()), 0.0064 + 1e-4);
}

TEST(Optimize, TraceBookkeepingFeasibilityAndDeterminism) {
    OptimizerConfig cfg;
    cfg.grid = small_grid();
    cfg.outer_iters = 2;
    cfg.inner_iters = 25;
    cfg.seed = 5;
    const auto a = optimize(cfg);
    const auto b = optimize(cfg);
    if (!a.trace.early_stopped) EXPECT_EQ(a.trace.steps.size(), 50u);
    ASSERT_EQ(a.trace.steps.size(), b.trace.steps.size());
    for (std::size_t i = 0; i < a.trace.steps.size(); ++i) {
        const auto& x = a.trace.steps[i];
        const auto& y = b.trace.steps[i];
        EXPECT_EQ(x.theta.as_array(), y.theta.as_array());
        EXPECT_EQ(x.loss_s, y.loss_s);
        if (x.feasible) EXPECT_LT(max_root_modulus(x.theta, cfg.grid), 1.0);
    }
    EXPECT_LE(loss_s(a.theta, cfg.grid), loss_s(a.trace.init, cfg.grid));
    EXPECT_TRUE(is_feasible(a.theta, cfg.grid));
}

TEST(Optimize, SeedChangesRandomStart) {
    OptimizerConfig cfg;
    cfg.grid = small_grid();
    cfg.outer_iters = 1;
    cfg.inner_iters = 2;
    cfg.seed = 1;
    const auto a = optimize(cfg);
    cfg.seed = 2;
    const auto b = optimize(cfg);
    EXPECT_NE(a.trace.init.as_array(), b.trace.init.as_array());
}

TEST(Optimize, InfeasibleInitAndBadConfig) {
    OptimizerConfig cfg;
    cfg.grid = small_grid();
    cfg.init = ThetaParams{2.0, 0.0, 0.0, 0.0};
    EXPECT_THROW(optimize(cfg), NoFeasibleInit);
    cfg.init.reset();
    cfg.sigma = 1.5;
    EXPECT_THROW(optimize(cfg), ConfigError);
}
