#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "parareal/errors.hpp"
#include "parareal/fem.hpp"
#include "parareal/parallel.hpp"
#include "parareal/propagators.hpp"

namespace parareal {

enum class InitMode { CoarseSweep, Random };

inline InitMode parse_init_mode(std::string_view s) {
    if (s == "random") return InitMode::Random;
    if (s == "coarse_sweep" || s == "coarse") return InitMode::CoarseSweep;
    throw ConfigError("unknown init mode '" + std::string(s) + "'");
}

struct PararealConfig {
    double T = 10.0;
    int J = 50;
    double dt = 0.01;
    std::string cp = "o2cp";            ///< catalog name, optionally with suffix "-e" for extrapolated nonlinearity
    std::string fp = "radau_iia_3";
    std::optional<Scheme> cp_scheme;  ///< overrides the catalog lookup of cp
    int K_max = 30;
    double tol = 1e-9;
    std::uint64_t seed = 0;
    InitMode init_mode = InitMode::Random;
    unsigned threads = 1;
    bool record_lattice = false;

    int coarse_intervals() const { return static_cast<int>(std::lround(T / (J * dt))); }
    double coarse_step() const { return J * dt; }

    void validate() const {
        if (!(T > 0.0) || !(dt > 0.0)) throw ConfigError("T and dt must be positive");
        if (J < 2 || J % 2 != 0) throw ConfigError("J must be a positive even integer");
        const double nc = T / (J * dt);
        if (std::abs(nc - std::round(nc)) > 1e-9 * std::max(1.0, nc) || std::round(nc) < 1)
            throw ConfigError("T must be an integer multiple of J*dt");
        if (K_max < 0) throw ConfigError("K_max must be nonnegative");
        if (!(tol >= 0.0)) throw ConfigError("tol must be nonnegative");
        if (threads < 1) throw ConfigError("threads must be at least 1");
    }
};

/// Values at the half-integer coarse lattice T_{m/2}, m = 0 .. 2 N_c.
struct SolutionLattice {
    int n_coarse = 0;
    std::vector<StateVector> values;
    long long fine_steps = 0;
    double wall_time = 0.0;

    const StateVector& at_half(int m) const { return values.at(static_cast<std::size_t>(m)); }
    const StateVector& at_coarse(int n) const { return values.at(static_cast<std::size_t>(2 * n)); }
};

struct IterationRecord {
    int k = 0;
    double error = 0.0;        ///< max over integer coarse indices n >= 1 of the L2 error
    double cp_cost = 0.0;      ///< wall time of the sequential coarse correction sweep producing this iterate
    double fp_cost = 0.0;      ///< largest wall time of one fine subinterval sweep producing this iterate
    double max_update = 0.0;   ///< max over the lattice of the L2 change from the previous iterate
    std::vector<double> lattice_errors;  ///< per lattice index (half-indexed for two-step runs)
};

struct IterationTrace {
    std::string cp;
    std::string fp;
    bool two_step = false;
    double tol = 0.0;
    std::vector<IterationRecord> iterations;
    std::optional<int> iterations_to_tol;
    std::vector<std::vector<StateVector>> lattices;  ///< per iteration, when recorded

    int iterations_used() const {
        return iterations_to_tol ? *iterations_to_tol : static_cast<int>(iterations.size()) - 1;
    }

    double mean_cp_cost() const { return mean_of(&IterationRecord::cp_cost); }
    double mean_fp_cost() const { return mean_of(&IterationRecord::fp_cost); }

private:
    double mean_of(double IterationRecord::*field) const {
        double acc = 0.0;
        int count = 0;
        for (const auto& r : iterations)
            if (r.k >= 1) {
                acc += r.*field;
                ++count;
            }
        return count ? acc / count : 0.0;
    }
};

/// Lattice of `count` states where slot 0 is u0 and all others are uniform [0,1] nodal values.
inline std::vector<StateVector> random_init(std::uint64_t seed, std::size_t count, const StateVector& u0) {
    if (count == 0) throw ConfigError("random_init needs at least one slot");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<StateVector> out(count, StateVector(u0.size()));
    out[0] = u0;
    for (std::size_t m = 1; m < count; ++m)
        for (auto& v : out[m]) v = dist(rng);
    return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline bool has_extrapolation_suffix(std::string_view name) {
    return name.size() > 2 && name.substr(name.size() - 2) == "-e";
}

inline std::string_view base_name(std::string_view name) {
    return has_extrapolation_suffix(name) ? name.substr(0, name.size() - 2) : name;
}

/// Runs `steps` fine steps from u at t0; optionally stores the state after `mid_steps` steps.
inline StateVector fine_sweep(const SingleStepStepper& fine, double t0, StateVector u, int steps, int mid_steps,
                              StateVector* mid) {
    const double dt = fine.dt();
    for (int j = 0; j < steps; ++j) {
        u = fine.step(t0 + j * dt, u);
        if (mid && j + 1 == mid_steps) *mid = u;
    }
    return u;
}

} // namespace detail

/// Resolves the coarse propagator named in the config.
inline Scheme coarse_scheme(const PararealConfig& cfg) {
    if (cfg.cp_scheme) return *cfg.cp_scheme;
    return catalog(detail::base_name(cfg.cp));
}

inline bool coarse_is_two_step(const PararealConfig& cfg) {
    return std::holds_alternative<TwoStepScheme>(coarse_scheme(cfg));
}

inline SingleStepStepper make_fine_stepper(const PararealConfig& cfg, const FemSystem& sys) {
    return SingleStepStepper(sys, single_step(cfg.fp), cfg.dt);
}

/// Sequential fine solve recording every half coarse interval.
inline SolutionLattice fine_reference(const PararealConfig& cfg, const FemSystem& sys, const StateVector& u0) {
    cfg.validate();
    if (u0.size() != sys.dofs()) throw DimensionMismatch("initial state does not match mesh");
    const auto fine = make_fine_stepper(cfg, sys);
    const int nc = cfg.coarse_intervals();
    const int half = cfg.J / 2;
    SolutionLattice lat;
    lat.n_coarse = nc;
    lat.values.reserve(static_cast<std::size_t>(2 * nc + 1));
    lat.values.push_back(u0);
    const auto t0 = detail::Clock::now();
    StateVector u = u0;
    for (int m = 0; m < 2 * nc; ++m) {
        u = detail::fine_sweep(fine, m * half * cfg.dt, std::move(u), half, 0, nullptr);
        lat.fine_steps += half;
        lat.values.push_back(u);
    }
    lat.wall_time = detail::seconds_since(t0);
    return lat;
}

namespace detail {

inline void record_iteration(IterationTrace& trace, const PararealConfig& cfg, const FemSystem& sys,
                             const std::vector<StateVector>& lattice, const SolutionLattice& ref, int k,
                             double cp_cost, double fp_cost, double max_update) {
    IterationRecord rec;
    rec.k = k;
    rec.cp_cost = cp_cost;
    rec.fp_cost = fp_cost;
    rec.max_update = max_update;
    const int stride = trace.two_step ? 1 : 2;
    rec.lattice_errors.resize(lattice.size());
    for (std::size_t m = 0; m < lattice.size(); ++m) {
        rec.lattice_errors[m] = l2_distance(lattice[m], ref.at_half(static_cast<int>(m) * stride), sys);
        const bool integer_index = trace.two_step ? m % 2 == 0 : true;
        if (m >= 1 && integer_index) rec.error = std::max(rec.error, rec.lattice_errors[m]);
    }
    trace.iterations.push_back(std::move(rec));
    if (cfg.record_lattice) trace.lattices.push_back(lattice);
}

inline double max_change(const std::vector<StateVector>& a, const std::vector<StateVector>& b, const FemSystem& sys) {
    double out = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) out = std::max(out, l2_distance(a[m], b[m], sys));
    return out;
}

inline bool should_stop(IterationTrace& trace, const PararealConfig& cfg) {
    const auto& last = trace.iterations.back();
    if (last.error < cfg.tol) {
        trace.iterations_to_tol = last.k;
        return true;
    }
    return last.k >= cfg.K_max;
}

} // namespace detail

/// Classical parareal with a single-step coarse propagator. `initial`, when given, replaces the
/// configured initialization (N_c + 1 states, slot 0 must be u0).
inline IterationTrace run_single_step(const PararealConfig& cfg, const FemSystem& sys, const StateVector& u0,
                                      const SolutionLattice& ref,
                                      const std::optional<std::vector<StateVector>>& initial = std::nullopt) {
    cfg.validate();
    const Scheme scheme = coarse_scheme(cfg);
    const auto* ss = std::get_if<SingleStepScheme>(&scheme);
    if (!ss) throw ConfigError(cfg.cp + " is not a single-step coarse propagator");
    const int nc = cfg.coarse_intervals();
    if (ref.n_coarse != nc) throw DimensionMismatch("reference lattice does not match the configuration");
    const double big_dt = cfg.coarse_step();
    const ReactionMode mode = detail::has_extrapolation_suffix(cfg.cp) ? ReactionMode::Frozen : ReactionMode::Implicit;
    const SingleStepStepper coarse(sys, *ss, big_dt, mode);
    const auto fine = make_fine_stepper(cfg, sys);

    IterationTrace trace;
    trace.cp = cfg.cp;
    trace.fp = cfg.fp;
    trace.two_step = false;
    trace.tol = cfg.tol;

    std::vector<StateVector> u;
    if (initial) {
        if (initial->size() != static_cast<std::size_t>(nc + 1)) throw DimensionMismatch("initial lattice has wrong size");
        u = *initial;
    } else if (cfg.init_mode == InitMode::Random) {
        u = random_init(cfg.seed, static_cast<std::size_t>(nc + 1), u0);
    } else {
        u.assign(static_cast<std::size_t>(nc + 1), u0);
        for (int n = 0; n < nc; ++n) u[n + 1] = coarse.step(n * big_dt, u[n]);
    }
    u[0] = u0;
    detail::record_iteration(trace, cfg, sys, u, ref, 0, 0.0, 0.0, 0.0);

    std::vector<StateVector> fine_end(static_cast<std::size_t>(nc)), coarse_old(static_cast<std::size_t>(nc));
    std::vector<double> task_time(static_cast<std::size_t>(nc));
    for (int k = 0; !detail::should_stop(trace, cfg); ++k) {
        parallel_for(static_cast<std::size_t>(nc), cfg.threads, [&](std::size_t n) {
            const double tn = static_cast<double>(n) * big_dt;
            const auto t0 = detail::Clock::now();
            fine_end[n] = detail::fine_sweep(fine, tn, u[n], cfg.J, 0, nullptr);
            task_time[n] = detail::seconds_since(t0);
            coarse_old[n] = coarse.step(tn, u[n]);
        });
        std::vector<StateVector> next(u.size());
        next[0] = u0;
        const auto t0 = detail::Clock::now();
        for (int n = 0; n < nc; ++n) {
            auto g = coarse.step(n * big_dt, next[n]);
            for (std::size_t p = 0; p < g.size(); ++p) g[p] += fine_end[n][p] - coarse_old[n][p];
            next[n + 1] = std::move(g);
        }
        const double cp_cost = detail::seconds_since(t0);
        const double fp_cost = *std::max_element(task_time.begin(), task_time.end());
        const double change = detail::max_change(next, u, sys);
        u = std::move(next);
        detail::record_iteration(trace, cfg, sys, u, ref, k + 1, cp_cost, fp_cost, change);
    }
    return trace;
}

/// Two-step parareal over the half-integer lattice U_{m/2}, m = 0 .. 2 N_c. The coarse map
/// G*(t, tau, v1, v2) takes t as the time of v2 and tau = Delta T / 2. `initial`, when given,
/// replaces the configured initialization (2 N_c + 1 states, slot 0 must be u0).
inline IterationTrace run_two_step(const PararealConfig& cfg, const FemSystem& sys, const StateVector& u0,
                                   const SolutionLattice& ref,
                                   const std::optional<std::vector<StateVector>>& initial = std::nullopt) {
    cfg.validate();
    const Scheme scheme = coarse_scheme(cfg);
    const auto* ts = std::get_if<TwoStepScheme>(&scheme);
    if (!ts) throw ConfigError(cfg.cp + " is not a two-step coarse propagator");
    const int nc = cfg.coarse_intervals();
    if (ref.n_coarse != nc) throw DimensionMismatch("reference lattice does not match the configuration");
    const int half = cfg.J / 2;
    const double tau = half * cfg.dt;
    const TwoStepMode mode = detail::has_extrapolation_suffix(cfg.cp) ? TwoStepMode::Extrapolated : TwoStepMode::Implicit;
    const TwoStepStepper coarse(sys, *ts, tau, mode);
    const auto fine = make_fine_stepper(cfg, sys);
    const std::size_t slots = static_cast<std::size_t>(2 * nc + 1);

    IterationTrace trace;
    trace.cp = cfg.cp;
    trace.fp = cfg.fp;
    trace.two_step = true;
    trace.tol = cfg.tol;

    std::vector<StateVector> u;
    if (initial) {
        if (initial->size() != slots) throw DimensionMismatch("initial lattice has wrong size");
        u = *initial;
    } else if (cfg.init_mode == InitMode::Random) {
        u = random_init(cfg.seed, slots, u0);
    } else {
        u.assign(slots, u0);
        const SingleStepStepper bootstrap(sys, single_step("backward_euler"), tau);
        u[1] = bootstrap.step(0.0, u0);
        for (std::size_t m = 0; m + 2 < slots; ++m) u[m + 2] = coarse.step((m + 1) * tau, u[m], u[m + 1]);
    }
    u[0] = u0;
    detail::record_iteration(trace, cfg, sys, u, ref, 0, 0.0, 0.0, 0.0);

    // Subintervals [T_{m/2}, T_{m/2+1}] for m = 0 .. 2 N_c - 2.
    const std::size_t sweeps = slots - 2;
    std::vector<StateVector> fine_end(sweeps), fine_mid(sweeps), coarse_old(sweeps);
    std::vector<double> task_time(sweeps);
    for (int k = 0; !detail::should_stop(trace, cfg); ++k) {
        parallel_for(sweeps, cfg.threads, [&](std::size_t m) {
            const double tm = static_cast<double>(m) * tau;
            const auto t0 = detail::Clock::now();
            fine_end[m] = detail::fine_sweep(fine, tm, u[m], cfg.J, half, &fine_mid[m]);
            task_time[m] = detail::seconds_since(t0);
        });
        std::vector<StateVector> next(slots);
        if (k == 0) {
            u[1] = fine_mid[0];
            u[2] = fine_end[0];
        }
        // Coarse values of the previous iterate; independent across m.
        parallel_for(sweeps, cfg.threads, [&](std::size_t m) {
            if (m >= 1) coarse_old[m] = coarse.step((m + 1) * tau, u[m], fine_mid[m]);
        });
        next[0] = u0;
        next[1] = u[1];
        next[2] = u[2];
        const auto t0 = detail::Clock::now();
        for (std::size_t m = 1; m < sweeps; ++m) {
            auto g = coarse.step((m + 1) * tau, next[m], next[m + 1]);
            for (std::size_t p = 0; p < g.size(); ++p) g[p] += fine_end[m][p] - coarse_old[m][p];
            next[m + 2] = std::move(g);
        }
        const double cp_cost = detail::seconds_since(t0);
        const double fp_cost = *std::max_element(task_time.begin(), task_time.end());
        const double change = detail::max_change(next, u, sys);
        u = std::move(next);
        detail::record_iteration(trace, cfg, sys, u, ref, k + 1, cp_cost, fp_cost, change);
    }
    return trace;
}

/// Dispatches on the kind of coarse propagator.
inline IterationTrace run_parareal(const PararealConfig& cfg, const FemSystem& sys, const StateVector& u0,
                                   const SolutionLattice& ref) {
    return coarse_is_two_step(cfg) ? run_two_step(cfg, sys, u0, ref) : run_single_step(cfg, sys, u0, ref);
}

/// Median wall time of one sequential coarse sweep over [0, T], fed with reference lattice values.
inline double coarse_sweep_cost(const PararealConfig& cfg, const FemSystem& sys, const SolutionLattice& ref,
                                int repetitions = 3) {
    cfg.validate();
    if (repetitions < 1) throw ConfigError("repetitions must be positive");
    const Scheme scheme = coarse_scheme(cfg);
    const int nc = cfg.coarse_intervals();
    std::vector<double> times;
    if (const auto* ts = std::get_if<TwoStepScheme>(&scheme)) {
        const double tau = cfg.coarse_step() / 2.0;
        const TwoStepMode mode =
            detail::has_extrapolation_suffix(cfg.cp) ? TwoStepMode::Extrapolated : TwoStepMode::Implicit;
        const TwoStepStepper coarse(sys, *ts, tau, mode);
        for (int r = 0; r < repetitions; ++r) {
            const auto t0 = detail::Clock::now();
            for (int m = 1; m + 2 <= 2 * nc; ++m) (void)coarse.step((m + 1) * tau, ref.at_half(m), ref.at_half(m + 1));
            times.push_back(detail::seconds_since(t0));
        }
    } else {
        const auto& ss = std::get<SingleStepScheme>(scheme);
        const ReactionMode mode =
            detail::has_extrapolation_suffix(cfg.cp) ? ReactionMode::Frozen : ReactionMode::Implicit;
        const SingleStepStepper coarse(sys, ss, cfg.coarse_step(), mode);
        for (int r = 0; r < repetitions; ++r) {
            const auto t0 = detail::Clock::now();
            for (int n = 0; n < nc; ++n) (void)coarse.step(n * cfg.coarse_step(), ref.at_coarse(n));
            times.push_back(detail::seconds_since(t0));
        }
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

/// True when every lattice entry that the finite-termination property fixes after k iterations
/// (m <= 2k for two-step runs, n <= k for single-step runs) is within `tol` of the reference.
inline bool finite_convergence_holds(const IterationTrace& trace, double tol = 1e-11) {
    for (const auto& rec : trace.iterations) {
        const std::size_t limit = static_cast<std::size_t>(trace.two_step ? 2 * rec.k : rec.k);
        for (std::size_t m = 0; m < rec.lattice_errors.size() && m <= limit; ++m)
            if (!(rec.lattice_errors[m] <= tol)) return false;
    }
    return true;
}

/// Geometric mean of e_{k+1}/e_k over k >= 1 while e_k stays above 100 times the stagnation
/// floor (the final error when tol was reached, 1e-11 otherwise).
inline double empirical_factor(const std::vector<double>& errors, bool tol_reached) {
    if (errors.size() < 3) throw InsufficientTrace("empirical factor needs at least three iterates");
    const double floor = tol_reached ? errors.back() : 1e-11;
    double log_sum = 0.0;
    int count = 0;
    for (std::size_t k = 1; k + 1 < errors.size(); ++k) {
        if (!(errors[k] >= 100.0 * floor)) break;
        if (!(errors[k] > 0.0) || !(errors[k + 1] > 0.0)) break;
        log_sum += std::log(errors[k + 1] / errors[k]);
        ++count;
    }
    if (count == 0) throw InsufficientTrace("no iterations before stagnation");
    return std::exp(log_sum / count);
}

inline double empirical_factor(const IterationTrace& trace) {
    std::vector<double> e;
    for (const auto& r : trace.iterations) e.push_back(r.error);
    return empirical_factor(e, trace.iterations_to_tol.has_value());
}

/// S = cost_seq / (Iter (cost_CP + cost_FP)), communication ignored.
inline double speedup(double cost_seq, int iterations, double cost_cp, double cost_fp) {
    if (iterations <= 0 || !(cost_cp + cost_fp > 0.0)) throw ConfigError("speedup needs positive iterations and costs");
    return cost_seq / (iterations * (cost_cp + cost_fp));
}

inline double speedup(const IterationTrace& trace, double fine_cost) {
    return speedup(fine_cost, trace.iterations_used(), trace.mean_cp_cost(), trace.mean_fp_cost());
}

} // namespace parareal
