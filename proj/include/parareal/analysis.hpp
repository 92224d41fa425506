#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parareal/errors.hpp"
#include "parareal/parallel.hpp"
#include "parareal/propagators.hpp"
#include "parareal/rational.hpp"

namespace parareal {

/// Ordered positive sample points standing in for the spectrum of tau*A.
struct SpectralGrid {
    std::vector<double> samples;
    double s_min = 0.0;
    double s_max = 0.0;
    std::string spacing;

    std::size_t size() const { return samples.size(); }

    static SpectralGrid uniform(double s_min, double s_max, std::size_t count) {
        SpectralGrid g;
        g.spacing = "uniform";
        g.s_min = s_min;
        g.s_max = s_max;
        g.samples.resize(count);
        if (count == 1) {
            g.samples[0] = s_max;
        } else {
            for (std::size_t i = 0; i < count; ++i)
                g.samples[i] = s_min + (s_max - s_min) * static_cast<double>(i) / static_cast<double>(count - 1);
        }
        g.check();
        return g;
    }

    static SpectralGrid logarithmic(double s_min, double s_max, std::size_t count) {
        SpectralGrid g = uniform(std::log10(s_min), std::log10(s_max), count);
        for (double& v : g.samples) v = std::pow(10.0, v);
        g.s_min = s_min;
        g.s_max = s_max;
        g.spacing = "log";
        return g;
    }

    /// 2000 uniform points 0.01, 0.02, ..., 20 followed by 200 log-spaced points in (20, 1e4].
    static SpectralGrid default_grid() {
        SpectralGrid g;
        g.spacing = "composite";
        g.samples.reserve(2200);
        for (int i = 1; i <= 2000; ++i) g.samples.push_back(0.01 * i);
        const double l0 = std::log10(20.0), l1 = 4.0;
        for (int i = 1; i <= 200; ++i) g.samples.push_back(std::pow(10.0, l0 + (l1 - l0) * i / 200.0));
        g.s_min = g.samples.front();
        g.s_max = g.samples.back();
        g.check();
        return g;
    }

    void check() const {
        if (samples.empty()) throw ConfigError("spectral grid is empty");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!(samples[i] > 0.0)) throw ConfigError("spectral grid samples must be positive");
            if (i > 0 && !(samples[i] > samples[i - 1]))
                throw ConfigError("spectral grid samples must be strictly increasing");
        }
    }
};

struct FactorCurve {
    std::vector<double> s;
    std::vector<double> values;  ///< NaN where the evaluation was skipped
    double sup = 0.0;
    double argmax = 0.0;
    std::vector<double> skipped;  ///< samples that hit a pole
    bool argmax_at_boundary = false;
};

// ---------------------------------------------------------------------------
// characteristic roots and factor formulas

template <typename T>
std::pair<Complex, Complex> rho_pair(const TwoStepScheme& ts, T s) {
    return quadratic_roots(Complex(ts.r2.eval(s)), Complex(ts.r1.eval(s)));
}

namespace detail {

inline void require_stable(const std::pair<Complex, Complex>& rho, double s_re, double s_im = 0.0) {
    constexpr double limit = 1.0 - 1e-12;
    if (std::abs(rho.first) >= limit || std::abs(rho.second) >= limit) {
        throw UnstableScheme("|rho| >= 1 at s = " + std::to_string(s_re) +
                             (s_im != 0.0 ? " + " + std::to_string(s_im) + "i" : std::string()));
    }
}

inline double s_real(double s) { return s; }
inline double s_real(Complex s) { return s.real(); }
inline double s_imag(double) { return 0.0; }
inline double s_imag(Complex s) { return s.imag(); }

/// |fine_full - R2 fine_half - R1| for given full/half-interval fine amplification.
template <typename T, typename V>
double defect(const TwoStepScheme& ts, T s, V full, V half) {
    return std::abs(full - ts.r2.eval(s) * half - ts.r1.eval(s));
}

/// sum_{m=1}^{2 N_c + 1} |(rho_1^m - rho_2^m) / (rho_1 - rho_2)| computed with the
/// recurrence S_{m+1} = R2 S_m + R1 S_{m-1}, S_0 = 0, S_1 = 1. The recurrence is
/// exact in the confluent case, where S_m = m rho^(m-1).
template <typename T>
double root_power_sum(const TwoStepScheme& ts, T s, int n_coarse) {
    const Complex r1(ts.r1.eval(s)), r2(ts.r2.eval(s));
    Complex prev{0.0, 0.0}, cur{1.0, 0.0};
    double total = 0.0;
    for (int m = 1; m <= 2 * n_coarse + 1; ++m) {
        total += std::abs(cur);
        const Complex nxt = r2 * cur + r1 * prev;
        prev = cur;
        cur = nxt;
    }
    return total;
}

template <typename T>
double gamma_e_impl(const TwoStepScheme& ts, T s) {
    const auto rho = rho_pair(ts, s);
    require_stable(rho, s_real(s), s_imag(s));
    const double d = defect(ts, s, std::exp(-2.0 * s), std::exp(-s));
    return d / ((1.0 - std::abs(rho.first)) * (1.0 - std::abs(rho.second)));
}

template <typename T>
double kappa_e_impl(const TwoStepScheme& ts, T s, int n_coarse) {
    const auto rho = rho_pair(ts, s);
    require_stable(rho, s_real(s), s_imag(s));
    const double d = defect(ts, s, std::exp(-2.0 * s), std::exp(-s));
    return d * root_power_sum(ts, s, n_coarse);
}

inline void require_even(int j) {
    if (j < 2 || j % 2 != 0) throw ConfigError("coarsening factor J must be a positive even integer");
}

} // namespace detail

/// Convergence factor of the two-step iteration with fine stability function r and J fine steps per coarse step.
inline double gamma_c(const RationalFunction& r, const TwoStepScheme& ts, int J, double s) {
    detail::require_even(J);
    const auto rho = rho_pair(ts, s);
    detail::require_stable(rho, s);
    const double rs = r.eval(2.0 * s / J);
    const double d = detail::defect(ts, s, std::pow(rs, J), std::pow(rs, J / 2));
    return d / ((1.0 - std::abs(rho.first)) * (1.0 - std::abs(rho.second)));
}

/// Limit of gamma_c for an exact fine propagator.
inline double gamma_e(const TwoStepScheme& ts, double s) { return detail::gamma_e_impl(ts, s); }
inline double gamma_e(const TwoStepScheme& ts, Complex s) { return detail::gamma_e_impl(ts, s); }

inline double kappa_c(const RationalFunction& r, const TwoStepScheme& ts, int J, double s, int n_coarse) {
    detail::require_even(J);
    if (n_coarse < 1) throw ConfigError("kappa_c requires N_c >= 1");
    const auto rho = rho_pair(ts, s);
    detail::require_stable(rho, s);
    const double rs = r.eval(2.0 * s / J);
    const double d = detail::defect(ts, s, std::pow(rs, J), std::pow(rs, J / 2));
    return d * detail::root_power_sum(ts, s, n_coarse);
}

inline double kappa_e(const TwoStepScheme& ts, double s, int n_coarse) {
    if (n_coarse < 1) throw ConfigError("kappa_e requires N_c >= 1");
    return detail::kappa_e_impl(ts, s, n_coarse);
}
inline double kappa_e(const TwoStepScheme& ts, Complex s, int n_coarse) {
    if (n_coarse < 1) throw ConfigError("kappa_e requires N_c >= 1");
    return detail::kappa_e_impl(ts, s, n_coarse);
}

/// Classical parareal factor |e^{-s} - R(s)| / (1 - |R(s)|) of a single-step coarse propagator.
inline double single_step_gamma(const RationalFunction& R, double s) {
    const double rv = R.eval(s);
    if (std::abs(rv) >= 1.0 - 1e-12) throw UnstableScheme("|R(s)| >= 1 at s = " + std::to_string(s));
    return std::abs(std::exp(-s) - rv) / (1.0 - std::abs(rv));
}

/// Evaluates fn on every grid sample and takes the maximum. Samples that hit a pole are skipped.
inline FactorCurve sup_over_grid(const std::function<double(double)>& fn, const SpectralGrid& grid,
                                 unsigned threads = 1) {
    grid.check();
    const std::size_t n = grid.size();
    FactorCurve curve;
    curve.s = grid.samples;
    curve.values.assign(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> failed(n, 0);
    parallel_for(n, threads, [&](std::size_t i) {
        try {
            curve.values[i] = fn(grid.samples[i]);
        } catch (const PoleError&) {
            failed[i] = 1;
        }
    });
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < n; ++i) {
        if (failed[i]) {
            curve.skipped.push_back(grid.samples[i]);
            continue;
        }
        if (!best || curve.values[i] > curve.values[*best]) best = i;
    }
    if (!best) throw AllPointsFailed("no grid point could be evaluated");
    curve.sup = curve.values[*best];
    curve.argmax = grid.samples[*best];
    curve.argmax_at_boundary = *best + 1 == n;
    return curve;
}

// ---------------------------------------------------------------------------
// J-dependence of the convergence factor

struct JOrderRow {
    int J = 0;
    double gamma_star = 0.0;  ///< sup_s gamma_c(r, ts, J, s)
    double sup_gap = 0.0;     ///< |gamma* - gamma_e*|
    double uniform_gap = 0.0; ///< sup_s |gamma_c(J, s) - gamma_e(s)|, bounds sup_gap
};

struct JOrderStudy {
    double gamma_e_star = 0.0;
    std::vector<JOrderRow> rows;
    double slope = 0.0;      ///< least-squares log-log slope of uniform_gap against J
    double sup_slope = 0.0;  ///< same for sup_gap
};

namespace detail {
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}
} // namespace detail

inline JOrderStudy j_order_study(const RationalFunction& r, const TwoStepScheme& ts, const std::vector<int>& j_list,
                                 const SpectralGrid& grid = SpectralGrid::default_grid(), unsigned threads = 1) {
    if (j_list.size() < 3) throw ConfigError("j_order_study needs at least three values of J");
    const FactorCurve ge = sup_over_grid([&](double s) { return gamma_e(ts, s); }, grid, threads);
    JOrderStudy study;
    study.gamma_e_star = ge.sup;
    std::vector<double> js, uniform, sup;
    for (int J : j_list) {
        const FactorCurve gc = sup_over_grid([&](double s) { return gamma_c(r, ts, J, s); }, grid, threads);
        JOrderRow row;
        row.J = J;
        row.gamma_star = gc.sup;
        row.sup_gap = std::abs(gc.sup - ge.sup);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (std::isnan(gc.values[i]) || std::isnan(ge.values[i])) continue;
            row.uniform_gap = std::max(row.uniform_gap, std::abs(gc.values[i] - ge.values[i]));
        }
        study.rows.push_back(row);
        js.push_back(J);
        uniform.push_back(std::max(row.uniform_gap, std::numeric_limits<double>::min()));
        sup.push_back(std::max(row.sup_gap, std::numeric_limits<double>::min()));
    }
    study.slope = detail::loglog_slope(js, uniform);
    study.sup_slope = detail::loglog_slope(js, sup);
    return study;
}

// ---------------------------------------------------------------------------
// stability of the two-step scheme on y' + lambda y = 0

struct LocusPoint {
    double theta = 0.0;
    Complex mu;
};

struct BoundaryLocus {
    std::vector<LocusPoint> points;
    std::vector<double> skipped_theta;  ///< zeros of sigma(zeta)
};

/// mu(theta) = (-zeta^2 - alpha_1 zeta - alpha_0) / (beta_2 zeta^2 + beta_1 zeta + beta_0), zeta = e^{i theta}.
inline BoundaryLocus boundary_locus(const TwoStepScheme& ts, int theta_count) {
    if (theta_count < 8) throw ConfigError("boundary_locus needs at least 8 samples");
    BoundaryLocus out;
    for (int k = 0; k < theta_count; ++k) {
        const double th = 2.0 * std::numbers::pi * k / theta_count;
        const Complex z = std::polar(1.0, th);
        const Complex rho = -z * z - ts.alpha[1] * z - ts.alpha[0];
        const Complex sigma = ts.beta[2] * z * z + ts.beta[1] * z + ts.beta[0];
        if (std::abs(sigma) < 1e-14) {
            out.skipped_theta.push_back(th);
            continue;
        }
        out.points.push_back({th, rho / sigma});
    }
    return out;
}

/// Numerator of Re(mu(theta)) up to the positive factor |sigma|^2, as a quadratic in cos(theta).
inline double locus_real_numerator(const TwoStepScheme& ts, double theta) {
    const auto& a = ts.alpha;
    const auto& b = ts.beta;
    const double c = std::cos(theta);
    return (-2.0 * a[0] * b[2] - 2.0 * b[0]) * c * c - (a[0] * b[1] + a[1] * b[0] + a[1] * b[2] + b[1]) * c +
           (a[0] * b[2] + b[0] - a[0] * b[0] - a[1] * b[1] - b[2]);
}

struct AStabilityReport {
    bool a_stable = false;
    double worst_value = -std::numeric_limits<double>::infinity();
    double worst_theta = 0.0;
};

/// Samples theta in (0, 2 pi) and requires the locus real-part numerator to be <= 1e-10.
inline AStabilityReport a_stability_check(const TwoStepScheme& ts, int theta_count) {
    if (theta_count < 64) throw ConfigError("a_stability_check needs at least 64 samples");
    AStabilityReport rep;
    for (int k = 1; k <= theta_count; ++k) {
        const double th = 2.0 * std::numbers::pi * k / (theta_count + 1);
        const double f = locus_real_numerator(ts, th);
        if (f > rep.worst_value) {
            rep.worst_value = f;
            rep.worst_theta = th;
        }
    }
    rep.a_stable = rep.worst_value <= 1e-10;
    return rep;
}

// ---------------------------------------------------------------------------
// factor maps over complex s

enum class ContourKind { GammaE, KappaE };

struct ContourMap {
    std::vector<double> re;
    std::vector<double> im;
    /// values[i][j] at s = re[j] + i im[i]; +inf where a pole or |rho| >= 1 occurs.
    std::vector<std::vector<double>> values;
};

inline ContourMap contour_map(ContourKind kind, const TwoStepScheme& ts, std::pair<double, double> re_range,
                              std::pair<double, double> im_range, int re_resolution, int im_resolution,
                              int n_coarse = 1000, unsigned threads = 1) {
    if (re_resolution < 2 || im_resolution < 2) throw ConfigError("contour_map resolution must be >= 2 per axis");
    ContourMap map;
    for (int j = 0; j < re_resolution; ++j)
        map.re.push_back(re_range.first + (re_range.second - re_range.first) * j / (re_resolution - 1));
    for (int i = 0; i < im_resolution; ++i)
        map.im.push_back(im_range.first + (im_range.second - im_range.first) * i / (im_resolution - 1));
    map.values.assign(im_resolution, std::vector<double>(re_resolution, 0.0));
    parallel_for(static_cast<std::size_t>(im_resolution), threads, [&](std::size_t i) {
        for (int j = 0; j < re_resolution; ++j) {
            const Complex s(map.re[j], map.im[i]);
            double v;
            try {
                v = kind == ContourKind::GammaE ? gamma_e(ts, s) : kappa_e(ts, s, n_coarse);
            } catch (const PoleError&) {
                v = std::numeric_limits<double>::infinity();
            } catch (const UnstableScheme&) {
                v = std::numeric_limits<double>::infinity();
            }
            map.values[i][j] = v;
        }
    });
    return map;
}

} // namespace parareal
