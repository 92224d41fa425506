#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "parareal/errors.hpp"
#include "parareal/rational.hpp"

namespace parareal {

/// Implicit Runge-Kutta method. a is stages x stages, row-major by stage.
struct ButcherTableau {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    std::vector<double> c;
    int order = 0;

    std::size_t stages() const { return b.size(); }

    void validate() const {
        const std::size_t s = b.size();
        if (s == 0 || c.size() != s || a.size() != s)
            throw ConfigError("butcher tableau: inconsistent dimensions");
        for (const auto& row : a)
            if (row.size() != s) throw ConfigError("butcher tableau: A is not square");
        if (std::abs(std::accumulate(b.begin(), b.end(), 0.0) - 1.0) > 1e-12)
            throw ConfigError("butcher tableau: weights do not sum to one");
    }
};

/// How the source term of a stability-function-only scheme is applied.
enum class SourceRule {
    Tableau,         ///< stages of the attached Butcher tableau
    StiffConsistent  ///< U+ = R(tA) U + t P(tA) f(t+dt), P(s) = (1 - R(s)) / s
};

struct SingleStepScheme {
    std::string name;
    RationalFunction stability;
    std::optional<ButcherTableau> tableau;
    SourceRule source_rule = SourceRule::Tableau;
    int order = 0;
};

/// Linear two-step method sum_i (alpha_i + beta_i s) U_{n+i} = s-weighted sources,
/// stored with alpha_2 normalized to one.
struct TwoStepScheme {
    std::string name;
    std::array<double, 3> alpha{};
    std::array<double, 3> beta{};
    RationalFunction r1;
    RationalFunction r2;
};

/// Parameters of the optimizable family
///   R1 = (a1 + a2 s) / (1 + e^{b1} s),  R2 = ((1 - a1) + c2 s) / (1 + e^{b1} s).
struct ThetaParams {
    double a1 = 0.0;
    double a2 = 0.0;
    double b1 = 0.0;
    double c2 = 0.0;

    std::array<double, 4> as_array() const { return {a1, a2, b1, c2}; }
    static ThetaParams from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }
    friend bool operator==(const ThetaParams&, const ThetaParams&) = default;
};

using Scheme = std::variant<SingleStepScheme, TwoStepScheme>;

/// Builds a two-step scheme from raw coefficients; divides everything by alpha_2.
inline TwoStepScheme make_two_step(std::string name, std::array<double, 3> alpha,
                                   std::array<double, 3> beta) {
    if (alpha[2] == 0.0) throw ConfigError("two-step scheme requires alpha_2 != 0");
    const double scale = 1.0 / alpha[2];
    for (auto& v : alpha) v *= scale;
    for (auto& v : beta) v *= scale;
    alpha[2] = 1.0;
    const Polynomial den({alpha[2], beta[2]});
    TwoStepScheme ts;
    ts.name = std::move(name);
    ts.alpha = alpha;
    ts.beta = beta;
    ts.r1 = RationalFunction(Polynomial({-alpha[0], -beta[0]}), den);
    ts.r2 = RationalFunction(Polynomial({-alpha[1], -beta[1]}), den);
    return ts;
}

inline TwoStepScheme two_step_from_theta(const ThetaParams& th, std::string name = "theta") {
    return make_two_step(std::move(name), {-th.a1, th.a1 - 1.0, 1.0},
                         {-th.a2, -th.c2, std::exp(th.b1)});
}

/// Inverse of two_step_from_theta for schemes inside the family.
inline ThetaParams theta_from_two_step(const TwoStepScheme& ts) {
    return {-ts.alpha[0], -ts.beta[0], std::log(ts.beta[2]), -ts.beta[1]};
}

/// det(I + sA - s 1 b^T) / det(I + sA): amplification of one step on u' = -lambda u with s = lambda dt.
inline RationalFunction stability_from_tableau(const ButcherTableau& t) {
    t.validate();
    const std::size_t n = t.stages();
    auto det = [n](const std::vector<std::vector<Polynomial>>& m) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        Polynomial acc;
        do {
            int inversions = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (perm[i] > perm[j]) ++inversions;
            Polynomial term = Polynomial::constant(inversions % 2 ? -1.0 : 1.0);
            for (std::size_t i = 0; i < n && !term.is_zero(); ++i) term = term * m[i][perm[i]];
            acc += term;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return acc;
    };
    std::vector<std::vector<Polynomial>> num(n, std::vector<Polynomial>(n));
    std::vector<std::vector<Polynomial>> den(n, std::vector<Polynomial>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double id = i == j ? 1.0 : 0.0;
            den[i][j] = Polynomial({id, t.a[i][j]});
            num[i][j] = Polynomial({id, t.a[i][j] - t.b[j]});
        }
    }
    return RationalFunction(det(num).chopped(1e-13), det(den).chopped(1e-13));
}

namespace tableaus {

inline ButcherTableau backward_euler() { return {{{1.0}}, {1.0}, {1.0}, 1}; }

inline ButcherTableau sdirk2() {
    const double g = (2.0 - std::sqrt(2.0)) / 2.0;
    return {{{g, 0.0}, {1.0 - g, g}}, {1.0 - g, g}, {g, 1.0}, 2};
}

inline ButcherTableau radau_iia_2() {
    return {{{5.0 / 12.0, -1.0 / 12.0}, {3.0 / 4.0, 1.0 / 4.0}}, {3.0 / 4.0, 1.0 / 4.0}, {1.0 / 3.0, 1.0}, 3};
}

inline ButcherTableau radau_iia_3() {
    const double r6 = std::sqrt(6.0);
    return {{{(88.0 - 7.0 * r6) / 360.0, (296.0 - 169.0 * r6) / 1800.0, (-2.0 + 3.0 * r6) / 225.0},
             {(296.0 + 169.0 * r6) / 1800.0, (88.0 + 7.0 * r6) / 360.0, (-2.0 - 3.0 * r6) / 225.0},
             {(16.0 - r6) / 36.0, (16.0 + r6) / 36.0, 1.0 / 9.0}},
            {(16.0 - r6) / 36.0, (16.0 + r6) / 36.0, 1.0 / 9.0},
            {(4.0 - r6) / 10.0, (4.0 + r6) / 10.0, 1.0},
            5};
}

inline ButcherTableau lobatto_iiic_3() {
    return {{{1.0 / 6.0, -1.0 / 3.0, 1.0 / 6.0},
             {1.0 / 6.0, 5.0 / 12.0, -1.0 / 12.0},
             {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}},
            {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
            {0.0, 0.5, 1.0},
            4};
}

} // namespace tableaus

inline SingleStepScheme single_step_from_tableau(std::string name, ButcherTableau t) {
    SingleStepScheme s;
    s.name = std::move(name);
    s.stability = stability_from_tableau(t);
    s.order = t.order;
    s.tableau = std::move(t);
    s.source_rule = SourceRule::Tableau;
    return s;
}

/// Names accepted by catalog().
inline const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names{"backward_euler", "sdirk2",         "ocp",  "radau_iia_2",
                                                "radau_iia_3",    "lobatto_iiic_3", "bdf2", "o2cp"};
    return names;
}

/// Published parameters of the optimized two-step coarse propagator.
inline ThetaParams o2cp_theta() { return {0.02178, -0.00047, std::log(0.56380), -0.46300}; }

inline Scheme catalog(std::string_view name) {
    if (name == "backward_euler") return single_step_from_tableau("backward_euler", tableaus::backward_euler());
    if (name == "sdirk2") return single_step_from_tableau("sdirk2", tableaus::sdirk2());
    if (name == "radau_iia_2") return single_step_from_tableau("radau_iia_2", tableaus::radau_iia_2());
    if (name == "radau_iia_3") return single_step_from_tableau("radau_iia_3", tableaus::radau_iia_3());
    if (name == "lobatto_iiic_3") return single_step_from_tableau("lobatto_iiic_3", tableaus::lobatto_iiic_3());
    if (name == "ocp") {
        SingleStepScheme s;
        s.name = "ocp";
        s.stability = RationalFunction(Polynomial({1.0, -0.21014, 0.00486}), Polynomial({1.0, 0.78986, 0.38283}));
        s.source_rule = SourceRule::StiffConsistent;
        s.order = 1;
        return s;
    }
    if (name == "bdf2") return make_two_step("bdf2", {0.5, -2.0, 1.5}, {0.0, 0.0, 1.0});
    if (name == "o2cp") {
        // Coefficients as printed (five decimals); R1(0) + R2(0) = 1 holds exactly.
        TwoStepScheme ts = make_two_step("o2cp", {-0.02178, -0.97822, 1.0}, {0.00047, 0.46300, 0.56380});
        return ts;
    }
    throw UnknownScheme(std::string(name));
}

inline SingleStepScheme single_step(std::string_view name) {
    auto s = catalog(name);
    if (auto* p = std::get_if<SingleStepScheme>(&s)) return *p;
    throw ConfigError(std::string(name) + " is not a single-step scheme");
}

inline TwoStepScheme two_step(std::string_view name) {
    auto s = catalog(name);
    if (auto* p = std::get_if<TwoStepScheme>(&s)) return *p;
    throw ConfigError(std::string(name) + " is not a two-step scheme");
}

inline const std::string& scheme_name(const Scheme& s) {
    return std::visit([](const auto& v) -> const std::string& { return v.name; }, s);
}

/// Largest q <= p_max with sum alpha_i i^p = p sum beta_i i^(p-1) for p = 1..q.
/// Zero means consistent (sum alpha_i = 0) but not first order.
inline int consistency_order(const TwoStepScheme& ts, int p_max) {
    if (p_max < 1) throw ConfigError("consistency_order: p_max must be >= 1");
    const double sum = ts.alpha[0] + ts.alpha[1] + ts.alpha[2];
    if (std::abs(sum) > 1e-10) throw NotConsistent("sum of alpha coefficients is " + std::to_string(sum));
    int q = 0;
    for (int p = 1; p <= p_max; ++p) {
        double lhs = 0.0, rhs = 0.0;
        for (int i = 0; i <= 2; ++i) {
            lhs += ts.alpha[i] * std::pow(static_cast<double>(i), p);
            rhs += p * ts.beta[i] * std::pow(static_cast<double>(i), p - 1);
        }
        if (std::abs(lhs - rhs) > 1e-8) break;
        q = p;
    }
    return q;
}

/// Exact propagator of one eigenmode: e^{-lambda tau} v + int_0^tau e^{-lambda (tau - s)} f(s) ds,
/// f given in local time s in [0, tau].
inline double exact_phi(double lambda, double tau, double v, const std::function<double(double)>& f) {
    if (lambda < 0.0 || tau <= 0.0) throw ConfigError("exact_phi requires lambda >= 0 and tau > 0");
    auto integrand = [&](double s) { return std::exp(-lambda * (tau - s)) * f(s); };
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, tau, 15, 1e-12);
    return std::exp(-lambda * tau) * v + integral;
}

} // namespace parareal
