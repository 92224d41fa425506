#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "parareal/analysis.hpp"
#include "parareal/errors.hpp"
#include "parareal/propagators.hpp"

namespace parareal {

struct OptimizerConfig {
    SpectralGrid grid = SpectralGrid::default_grid();
    double mu0 = 1e-2;
    double sigma = 0.5;
    int outer_iters = 20;
    int inner_iters = 200;
    /// Inner step k of outer loop i has length step0 * step_decay^i / sqrt(k + 1) along the
    /// normalized subgradient. Each outer loop restarts from the best point found so far.
    double step0 = 0.3;
    double step_decay = 0.8;
    double grad_tolerance = 1e-6;
    std::uint64_t seed = 0;
    std::optional<ThetaParams> init;  ///< empty means random

    void validate() const {
        grid.check();
        if (!(mu0 > 0.0)) throw ConfigError("optimizer: mu0 must be positive");
        if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("optimizer: sigma must lie in (0, 1)");
        if (outer_iters < 1 || inner_iters < 1) throw ConfigError("optimizer: iteration counts must be positive");
        if (!(step0 > 0.0)) throw ConfigError("optimizer: step size must be positive");
        if (!(step_decay > 0.0 && step_decay <= 1.0)) throw ConfigError("optimizer: step_decay must lie in (0, 1]");
    }
};

struct OptimizerStep {
    int outer = 0;
    int inner = 0;
    double mu = 0.0;
    ThetaParams theta;
    double loss_s = 0.0;
    double loss_b = 0.0;
    double loss_mu = 0.0;
    double grad_norm = 0.0;
    bool feasible = false;
};

struct OptimizerTrace {
    std::vector<OptimizerStep> steps;
    ThetaParams init;
    ThetaParams best;
    double best_loss_s = 0.0;
    bool early_stopped = false;
};

struct OptimizerResult {
    ThetaParams theta;
    OptimizerTrace trace;
};

namespace detail {

constexpr double kRootLimit = 1.0 - 1e-12;

struct LossPair {
    double sup = 0.0;      ///< L_s
    double barrier = 0.0;  ///< L_b
};

/// One pass over the grid producing both loss terms; throws Infeasible at the first violating sample.
inline LossPair evaluate_losses(const ThetaParams& th, const SpectralGrid& grid) {
    const TwoStepScheme ts = two_step_from_theta(th);
    LossPair out;
    for (double s : grid.samples) {
        const double r1 = ts.r1(s), r2 = ts.r2(s);
        const auto [z1, z2] = quadratic_roots(r2, r1);
        const double m1 = std::abs(z1), m2 = std::abs(z2);
        if (m1 >= kRootLimit || m2 >= kRootLimit)
            throw Infeasible("|rho| >= 1 at s = " + std::to_string(s), s);
        const double e = std::exp(-s);
        const double d = std::abs(e * e - r2 * e - r1);
        out.sup = std::max(out.sup, d / ((1.0 - m1) * (1.0 - m2)));
        out.barrier += std::log1p(-m1 * m1) + std::log1p(-m2 * m2);
    }
    out.barrier /= static_cast<double>(grid.size());
    return out;
}

} // namespace detail

/// Sampled reduced convergence factor sup_{s in grid} gamma_e(R1(theta), R2(theta), s).
inline double loss_s(const ThetaParams& th, const SpectralGrid& grid) {
    return detail::evaluate_losses(th, grid).sup;
}

/// Barrier term (1/N) sum_s [log(1 - |rho_1|^2) + log(1 - |rho_2|^2)], always <= 0.
inline double loss_b(const ThetaParams& th, const SpectralGrid& grid) {
    return detail::evaluate_losses(th, grid).barrier;
}

inline double total_loss(const ThetaParams& th, const SpectralGrid& grid, double mu) {
    const auto l = detail::evaluate_losses(th, grid);
    return l.sup - mu * l.barrier;
}

inline bool is_feasible(const ThetaParams& th, const SpectralGrid& grid) {
    try {
        detail::evaluate_losses(th, grid);
        return true;
    } catch (const Infeasible&) {
        return false;
    }
}

/// Central finite-difference gradient of total_loss. At a kink of the sampled sup this
/// picks up the slope of the active sample, which is a valid subgradient.
inline std::array<double, 4> subgradient(const ThetaParams& th, const SpectralGrid& grid, double mu) {
    const auto base = th.as_array();
    std::array<double, 4> g{};
    for (std::size_t i = 0; i < 4; ++i) {
        double h = 1e-6 * (1.0 + std::abs(base[i]));
        for (int attempt = 0;; ++attempt) {
            auto plus = base, minus = base;
            plus[i] += h;
            minus[i] -= h;
            try {
                const double fp = total_loss(ThetaParams::from_array(plus), grid, mu);
                const double fm = total_loss(ThetaParams::from_array(minus), grid, mu);
                g[i] = (fp - fm) / (2.0 * h);
                break;
            } catch (const Infeasible&) {
                if (attempt == 3) throw;
                h *= 0.1;
            }
        }
    }
    return g;
}

namespace detail {
inline ThetaParams random_theta(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a1(0.0, 0.5), a2(-0.1, 0.1), b1(-1.0, 0.0), c2(-1.0, 0.0);
    ThetaParams th;
    th.a1 = a1(rng);
    th.a2 = a2(rng);
    th.b1 = b1(rng);
    th.c2 = c2(rng);
    return th;
}
} // namespace detail

/// Barrier-method subgradient descent on L_mu = L_s - mu L_b with mu shrinking
/// geometrically between outer iterations. Returns the best feasible point visited.
inline OptimizerResult optimize(const OptimizerConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    ThetaParams theta;
    if (cfg.init) {
        theta = *cfg.init;
        if (!is_feasible(theta, cfg.grid)) throw NoFeasibleInit("initial parameters are infeasible");
    } else {
        bool found = false;
        for (int attempt = 0; attempt < 100 && !found; ++attempt) {
            theta = detail::random_theta(rng);
            found = is_feasible(theta, cfg.grid);
        }
        if (!found) throw NoFeasibleInit("no feasible random initial point after 100 draws");
    }

    OptimizerTrace trace;
    trace.init = theta;
    trace.best = theta;
    trace.best_loss_s = loss_s(theta, cfg.grid);

    double mu = cfg.mu0;
    double step = cfg.step0;
    for (int outer = 0; outer < cfg.outer_iters && !trace.early_stopped;
         ++outer, mu *= cfg.sigma, step *= cfg.step_decay) {
        theta = trace.best;
        for (int inner = 0; inner < cfg.inner_iters; ++inner) {
            const auto g = subgradient(theta, cfg.grid, mu);
            const double gnorm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
            if (gnorm < cfg.grad_tolerance) {
                trace.early_stopped = true;
                break;
            }
            double eta = step / std::sqrt(static_cast<double>(inner + 1));
            std::optional<detail::LossPair> moved;
            for (int halving = 0; halving < 30 && !moved; ++halving, eta *= 0.5) {
                auto trial = theta.as_array();
                for (std::size_t i = 0; i < 4; ++i) trial[i] -= eta * g[i] / gnorm;
                try {
                    moved = detail::evaluate_losses(ThetaParams::from_array(trial), cfg.grid);
                    theta = ThetaParams::from_array(trial);
                } catch (const Infeasible&) {
                }
            }
            const detail::LossPair here = moved ? *moved : detail::evaluate_losses(theta, cfg.grid);

            OptimizerStep st;
            st.outer = outer;
            st.inner = inner;
            st.mu = mu;
            st.theta = theta;
            st.loss_s = here.sup;
            st.loss_b = here.barrier;
            st.loss_mu = st.loss_s - mu * st.loss_b;
            st.grad_norm = gnorm;
            st.feasible = true;
            trace.steps.push_back(st);
            if (st.loss_s < trace.best_loss_s) {
                trace.best_loss_s = st.loss_s;
                trace.best = theta;
            }
        }
    }
    return {trace.best, std::move(trace)};
}

} // namespace parareal
