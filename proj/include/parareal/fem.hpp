#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "parareal/banded.hpp"
#include "parareal/errors.hpp"
#include "parareal/propagators.hpp"
#include "parareal/rational.hpp"

namespace parareal {

using StateVector = std::vector<double>;

struct Mesh1D {
    int n_cells = 0;
    double h = 0.0;
    std::vector<double> nodes;  ///< interior node coordinates x_1 .. x_{n-1}

    static Mesh1D uniform(int n_cells) {
        if (n_cells < 2) throw ConfigError("mesh needs at least two cells");
        Mesh1D m;
        m.n_cells = n_cells;
        m.h = 1.0 / n_cells;
        m.nodes.resize(static_cast<std::size_t>(n_cells - 1));
        for (int i = 1; i < n_cells; ++i) m.nodes[static_cast<std::size_t>(i - 1)] = i * m.h;
        return m;
    }

    std::size_t dofs() const { return nodes.size(); }
};

/// Symmetric tridiagonal operator; off[i] couples unknowns i and i+1.
struct SymTridiag {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const { return diag.size(); }

    double at(std::size_t i, std::size_t j) const {
        if (i == j) return diag[i];
        if (j == i + 1) return off[i];
        if (i == j + 1) return off[j];
        return 0.0;
    }

    template <typename V>
    std::vector<V> apply(std::span<const V> x) const {
        const std::size_t n = diag.size();
        if (x.size() != n) throw DimensionMismatch("tridiagonal apply: vector has wrong length");
        std::vector<V> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            V acc = diag[i] * x[i];
            if (i > 0) acc += off[i - 1] * x[i - 1];
            if (i + 1 < n) acc += off[i] * x[i + 1];
            y[i] = acc;
        }
        return y;
    }

    StateVector apply(const StateVector& x) const { return apply(std::span<const double>(x)); }
};

/// Pointwise nonlinearity phi(u) entering the equation as M phi(u) (interpolated at the nodes).
struct Reaction {
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
};

/// Galerkin linear-element pair (M, K) on (0,1) with homogeneous Dirichlet data, together with
/// the right-hand side of M u' + K u = F(t) + M phi(u).
class FemSystem {
public:
    Mesh1D mesh;
    SymTridiag M;
    SymTridiag K;

    std::size_t dofs() const { return mesh.dofs(); }

    /// Adds space(x) * time(t) to the source; the spatial load vector is integrated once.
    void add_source_term(const std::function<double(double)>& space, std::function<double(double)> time) {
        terms_.push_back({integrate(space), std::move(time)});
    }

    /// General source f(x, t), integrated at every call of load().
    void set_source(std::function<double(double, double)> f) { general_ = std::move(f); }

    void set_reaction(Reaction r) {
        if (!r.phi || !r.dphi) throw ConfigError("reaction requires phi and its derivative");
        reaction_ = std::move(r);
    }

    bool has_source() const { return !terms_.empty() || static_cast<bool>(general_); }
    bool is_linear() const { return !reaction_.has_value(); }
    const std::optional<Reaction>& reaction() const { return reaction_; }

    /// Load vector F(t)_i = int f(x, t) phi_i(x) dx.
    StateVector load(double t) const {
        StateVector out(dofs(), 0.0);
        for (const auto& term : terms_) {
            const double w = term.time(t);
            if (w == 0.0) continue;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * term.vec[i];
        }
        if (general_) {
            const auto g = integrate([&](double x) { return general_(x, t); });
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
        }
        return out;
    }

    /// M phi(u); zero vector for linear problems.
    StateVector reaction_term(const StateVector& u) const {
        if (!reaction_) return StateVector(u.size(), 0.0);
        StateVector p(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) p[i] = reaction_->phi(u[i]);
        return M.apply(p);
    }

    /// Full right-hand side F(t) + M phi(u).
    StateVector rhs(const StateVector& u, double t) const {
        StateVector out = load(t);
        if (reaction_) {
            const auto r = reaction_term(u);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[i];
        }
        return out;
    }

    /// int g phi_i by 3-point Gauss on each cell.
    StateVector integrate(const std::function<double(double)>& g) const {
        static const std::array<double, 3> xi{-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
        static const std::array<double, 3> wi{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        const double h = mesh.h;
        StateVector out(dofs(), 0.0);
        for (int e = 0; e < mesh.n_cells; ++e) {
            const double xl = e * h;
            double left = 0.0, right = 0.0;
            for (int q = 0; q < 3; ++q) {
                const double lam = 0.5 * (1.0 + xi[q]);
                const double val = g(xl + lam * h) * wi[q] * 0.5 * h;
                left += val * (1.0 - lam);
                right += val * lam;
            }
            if (e >= 1) out[static_cast<std::size_t>(e - 1)] += left;
            if (e + 1 <= mesh.n_cells - 1) out[static_cast<std::size_t>(e)] += right;
        }
        return out;
    }

    StateVector interpolate(const std::function<double(double)>& g) const {
        StateVector out(dofs());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = g(mesh.nodes[i]);
        return out;
    }

private:
    struct Term {
        StateVector vec;
        std::function<double(double)> time;
    };
    std::vector<Term> terms_;
    std::function<double(double, double)> general_;
    std::optional<Reaction> reaction_;
};

inline FemSystem assemble(const Mesh1D& mesh) {
    if (mesh.n_cells < 2 || mesh.dofs() != static_cast<std::size_t>(mesh.n_cells - 1))
        throw ConfigError("invalid mesh");
    FemSystem sys;
    sys.mesh = mesh;
    const std::size_t n = mesh.dofs();
    const double h = mesh.h;
    sys.M.diag.assign(n, 4.0 * h / 6.0);
    sys.M.off.assign(n - 1, h / 6.0);
    sys.K.diag.assign(n, 2.0 / h);
    sys.K.off.assign(n - 1, -1.0 / h);
    return sys;
}

inline double m_inner(const StateVector& a, const StateVector& b, const FemSystem& sys) {
    if (a.size() != sys.dofs() || b.size() != sys.dofs()) throw DimensionMismatch("state length does not match mesh");
    const auto mb = sys.M.apply(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * mb[i];
    return acc;
}

/// sqrt(v^T M v), the L2 norm of the finite element function.
inline double l2_norm(const StateVector& v, const FemSystem& sys) { return std::sqrt(std::max(0.0, m_inner(v, v, sys))); }

inline double l2_distance(const StateVector& a, const StateVector& b, const FemSystem& sys) {
    if (a.size() != b.size()) throw DimensionMismatch("state lengths differ");
    StateVector d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return l2_norm(d, sys);
}

/// k-th discrete eigenpair of K x = lambda M x: nodal values sin(k pi x_i).
inline std::pair<double, StateVector> discrete_eigenpair(const FemSystem& sys, int k) {
    const int n = sys.mesh.n_cells;
    if (k < 1 || k >= n) throw ConfigError("eigenmode index out of range");
    const double h = sys.mesh.h;
    const double c = std::cos(k * std::numbers::pi * h);
    const double lambda = 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
    return {lambda, sys.interpolate([k](double x) { return std::sin(k * std::numbers::pi * x); })};
}

/// Cached factorization of aM + bK (a, b real or complex).
template <typename T>
class ShiftedSolver {
public:
    ShiftedSolver(T a, T b, const FemSystem& sys) : lu_(build(a, b, sys)) {}

    template <typename V>
    std::vector<V> solve(std::vector<V> rhs) const {
        lu_.solve_in_place(std::span<V>(rhs));
        return rhs;
    }

private:
    static BandMatrix<T> build(T a, T b, const FemSystem& sys) {
        const std::size_t n = sys.dofs();
        BandMatrix<T> m(n, 1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = a * sys.M.diag[i] + b * sys.K.diag[i];
            if (i + 1 < n) {
                m(i, i + 1) = a * sys.M.off[i] + b * sys.K.off[i];
                m(i + 1, i) = m(i, i + 1);
            }
        }
        return m;
    }
    BandedLU<T> lu_;
};

/// Solves (aM + bK) x = rhs and verifies the residual.
template <typename T>
std::vector<T> solve_shifted(T a, T b, const FemSystem& sys, const std::vector<T>& rhs) {
    if (rhs.size() != sys.dofs()) throw DimensionMismatch("right-hand side length does not match mesh");
    auto x = ShiftedSolver<T>(a, b, sys).solve(rhs);
    const auto mx = sys.M.apply(std::span<const T>(x));
    const auto kx = sys.K.apply(std::span<const T>(x));
    double res = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        res += std::norm(a * mx[i] + b * kx[i] - rhs[i]);
        ref += std::norm(rhs[i]);
    }
    if (std::sqrt(res) > 1e-12 * std::max(std::sqrt(ref), 1e-300) && std::sqrt(res) > 0.0)
        throw SingularSystem("shifted solve residual " + std::to_string(std::sqrt(res)) + " exceeds tolerance");
    return x;
}

inline StateVector solve_shifted(double a, double b, const FemSystem& sys, const StateVector& rhs) {
    return solve_shifted<double>(a, b, sys, rhs);
}

struct NewtonReport {
    int iterations = 0;
    std::vector<double> update_norms;  ///< M-norm of each Newton correction
};

namespace detail {

constexpr int kNewtonMaxIter = 50;
constexpr double kNewtonTol = 1e-12;

[[noreturn]] inline void newton_failure(const std::string& where, const std::vector<double>& history) {
    std::ostringstream os;
    os << where << ": Newton iteration did not converge; update norms:";
    for (double v : history) os << ' ' << v;
    throw NewtonDivergence(os.str());
}

inline bool finite_all(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Weights d with d^T = b^T A^{-1}, so that u_{n+1} = u_n + sum_j d_j Z_j.
inline std::vector<double> stage_output_weights(const ButcherTableau& t) {
    const std::size_t s = t.stages();
    std::vector<std::vector<double>> m(s, std::vector<double>(s + 1));
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) m[i][j] = t.a[j][i];  // A^T
        m[i][s] = t.b[i];
    }
    for (std::size_t k = 0; k < s; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < s; ++i)
            if (std::abs(m[i][k]) > std::abs(m[p][k])) p = i;
        if (std::abs(m[p][k]) < 1e-14) throw ConfigError("Runge-Kutta matrix is singular");
        std::swap(m[k], m[p]);
        for (std::size_t i = 0; i < s; ++i) {
            if (i == k) continue;
            const double f = m[i][k] / m[k][k];
            for (std::size_t j = k; j <= s; ++j) m[i][j] -= f * m[k][j];
        }
    }
    std::vector<double> d(s);
    for (std::size_t i = 0; i < s; ++i) d[i] = m[i][s] / m[i][i];
    return d;
}

} // namespace detail

/// One implicit Runge-Kutta step of M u' + K u = F(t) + M phi(u). Stage increments
/// Z_i = U_i - u are stored node-major, so the coupled system has bandwidth 2s - 1.
class IrkStepper {
public:
    IrkStepper(const FemSystem& sys, ButcherTableau tableau, double dt)
        : sys_(&sys), tab_(std::move(tableau)), dt_(dt) {
        if (!(dt > 0.0)) throw ConfigError("time step must be positive");
        tab_.validate();
        d_ = detail::stage_output_weights(tab_);
        if (sys.is_linear()) linear_lu_.emplace(jacobian(nullptr, StateVector{}));
    }

    double dt() const { return dt_; }
    const ButcherTableau& tableau() const { return tab_; }

    StateVector step(double t, const StateVector& u, NewtonReport* report = nullptr) const {
        const FemSystem& sys = *sys_;
        const std::size_t n = sys.dofs(), s = tab_.stages();
        if (u.size() != n) throw DimensionMismatch("state length does not match mesh");

        // b_i = dt sum_j a_ij (F(t + c_j dt) - K u)
        const auto ku = sys.K.apply(u);
        std::vector<StateVector> fj(s);
        for (std::size_t j = 0; j < s; ++j) {
            fj[j] = sys.has_source() ? sys.load(t + tab_.c[j] * dt_) : StateVector(n, 0.0);
            for (std::size_t p = 0; p < n; ++p) fj[j][p] -= ku[p];
        }
        std::vector<double> base(n * s, 0.0);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t i = 0; i < s; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < s; ++j) acc += tab_.a[i][j] * fj[j][p];
                base[p * s + i] = dt_ * acc;
            }

        std::vector<double> z;
        if (linear_lu_) {
            z = linear_lu_->solve(std::move(base));
        } else {
            z = newton(u, base, report);
        }

        StateVector out = u;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t j = 0; j < s; ++j) out[p] += d_[j] * z[p * s + j];
        return out;
    }

private:
    // Residual R_i = M Z_i + dt sum_j a_ij (K Z_j - M phi(u + Z_j)) - base_i.
    std::vector<double> residual(const StateVector& u, const std::vector<double>& z,
                                 const std::vector<double>& base) const {
        const FemSystem& sys = *sys_;
        const std::size_t n = sys.dofs(), s = tab_.stages();
        const auto& phi = sys.reaction()->phi;
        std::vector<double> zi(n), gi(n), out(n * s);
        std::vector<StateVector> mz(s), kz_minus_mphi(s);
        for (std::size_t j = 0; j < s; ++j) {
            for (std::size_t p = 0; p < n; ++p) {
                zi[p] = z[p * s + j];
                gi[p] = phi(u[p] + zi[p]);
            }
            mz[j] = sys.M.apply(zi);
            auto kz = sys.K.apply(zi);
            const auto mp = sys.M.apply(gi);
            for (std::size_t p = 0; p < n; ++p) kz[p] -= mp[p];
            kz_minus_mphi[j] = std::move(kz);
        }
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t i = 0; i < s; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < s; ++j) acc += tab_.a[i][j] * kz_minus_mphi[j][p];
                out[p * s + i] = mz[i][p] + dt_ * acc - base[p * s + i];
            }
        return out;
    }

    // Entry ((p,i),(q,j)) = delta_ij M_pq + dt a_ij (K_pq - M_pq phi'(u_q + Z_qj)).
    BandMatrix<double> jacobian(const StateVector* u, const std::vector<double>& z) const {
        const FemSystem& sys = *sys_;
        const std::size_t n = sys.dofs(), s = tab_.stages();
        const std::size_t bw = 2 * s - 1;
        BandMatrix<double> m(n * s, bw, bw);
        for (std::size_t p = 0; p < n; ++p) {
            const std::size_t q0 = p > 0 ? p - 1 : 0, q1 = std::min(n - 1, p + 1);
            for (std::size_t q = q0; q <= q1; ++q) {
                const double mpq = sys.M.at(p, q), kpq = sys.K.at(p, q);
                for (std::size_t i = 0; i < s; ++i)
                    for (std::size_t j = 0; j < s; ++j) {
                        double react = 0.0;
                        if (u) react = mpq * sys.reaction()->dphi((*u)[q] + z[q * s + j]);
                        m(p * s + i, q * s + j) = (i == j ? mpq : 0.0) + dt_ * tab_.a[i][j] * (kpq - react);
                    }
            }
        }
        return m;
    }

    double stacked_m_norm(const std::vector<double>& z) const {
        const std::size_t n = sys_->dofs(), s = tab_.stages();
        double acc = 0.0;
        StateVector zi(n);
        for (std::size_t j = 0; j < s; ++j) {
            for (std::size_t p = 0; p < n; ++p) zi[p] = z[p * s + j];
            acc += m_inner(zi, zi, *sys_);
        }
        return std::sqrt(std::max(0.0, acc));
    }

    std::vector<double> newton(const StateVector& u, const std::vector<double>& base, NewtonReport* report) const {
        std::vector<double> z(base.size(), 0.0);
        std::vector<double> history;
        const double scale = 1.0 + l2_norm(u, *sys_);
        for (int it = 1; it <= detail::kNewtonMaxIter; ++it) {
            auto r = residual(u, z, base);
            BandedLU<double> lu(jacobian(&u, z));
            lu.solve_in_place(std::span<double>(r));
            for (std::size_t k = 0; k < z.size(); ++k) z[k] -= r[k];
            const double nrm = stacked_m_norm(r);
            history.push_back(nrm);
            if (!std::isfinite(nrm) || !detail::finite_all(z)) break;
            if (nrm <= detail::kNewtonTol * scale) {
                if (report) *report = {it, history};
                return z;
            }
        }
        detail::newton_failure("implicit Runge-Kutta step", history);
    }

    const FemSystem* sys_;
    ButcherTableau tab_;
    double dt_;
    std::vector<double> d_;
    std::optional<BandedLU<double>> linear_lu_;
};

inline StateVector irk_step(const ButcherTableau& tableau, double dt, double t, const StateVector& u,
                            const FemSystem& sys) {
    return IrkStepper(sys, tableau, dt).step(t, u);
}

/// How the two-step coarse propagator treats the nonlinear term.
enum class TwoStepMode {
    Implicit,     ///< f(v3, t + tau) kept implicit; Newton on the nonlinear Poisson problem
    Extrapolated  ///< f(v3, t + tau) replaced by 2 f(v2, t) - f(v1, t - tau)
};

/// (alpha2 M + beta2 tau K) v3 = -(alpha0 M + beta0 tau K) v1 - (alpha1 M + beta1 tau K) v2 + tau sum_i beta_i f_i,
/// where t is the time of v2 and f_i = F(t + (i - 1) tau) + M phi(v_{i+1}).
class TwoStepStepper {
public:
    TwoStepStepper(const FemSystem& sys, TwoStepScheme ts, double tau, TwoStepMode mode = TwoStepMode::Implicit)
        : sys_(&sys), ts_(std::move(ts)), tau_(tau), mode_(mode),
          lhs_(ts_.alpha[2], ts_.beta[2] * tau, sys) {
        if (!(tau > 0.0)) throw ConfigError("time step must be positive");
        if (mode == TwoStepMode::Extrapolated && sys.is_linear())
            throw ConfigError("extrapolated two-step step requires a nonlinearity");
    }

    double tau() const { return tau_; }
    const TwoStepScheme& scheme() const { return ts_; }

    StateVector step(double t, const StateVector& v1, const StateVector& v2, NewtonReport* report = nullptr) const {
        const FemSystem& sys = *sys_;
        const std::size_t n = sys.dofs();
        if (v1.size() != n || v2.size() != n) throw DimensionMismatch("state length does not match mesh");
        const auto& a = ts_.alpha;
        const auto& b = ts_.beta;
        const auto m1 = sys.M.apply(v1), k1 = sys.K.apply(v1);
        const auto m2 = sys.M.apply(v2), k2 = sys.K.apply(v2);
        StateVector rhs(n);
        for (std::size_t p = 0; p < n; ++p)
            rhs[p] = -(a[0] * m1[p] + b[0] * tau_ * k1[p]) - (a[1] * m2[p] + b[1] * tau_ * k2[p]);

        auto add = [&](double w, const StateVector& f) {
            if (w == 0.0) return;
            for (std::size_t p = 0; p < n; ++p) rhs[p] += tau_ * w * f[p];
        };

        if (mode_ == TwoStepMode::Extrapolated) {
            add(b[1] + 2.0 * b[2], sys.rhs(v2, t));
            add(b[0] - b[2], sys.rhs(v1, t - tau_));
            return lhs_.solve(std::move(rhs));
        }

        if (sys.has_source()) {
            if (b[0] != 0.0) add(b[0], sys.load(t - tau_));
            if (b[1] != 0.0) add(b[1], sys.load(t));
            if (b[2] != 0.0) add(b[2], sys.load(t + tau_));
        }
        if (!sys.is_linear()) {
            add(b[0], sys.reaction_term(v1));
            add(b[1], sys.reaction_term(v2));
        }
        if (sys.is_linear() || b[2] == 0.0) return lhs_.solve(std::move(rhs));
        return newton(v2, rhs, report);
    }

private:
    // G(v) = (alpha2 M + beta2 tau K) v - tau beta2 M phi(v) - rhs.
    StateVector newton(StateVector v, const StateVector& rhs, NewtonReport* report) const {
        const FemSystem& sys = *sys_;
        const std::size_t n = sys.dofs();
        const double a2 = ts_.alpha[2], b2 = ts_.beta[2] * tau_, c = tau_ * ts_.beta[2];
        const auto& phi = sys.reaction()->phi;
        const auto& dphi = sys.reaction()->dphi;
        const double scale = 1.0 + l2_norm(v, sys);
        std::vector<double> history;
        StateVector g(n), d(n);
        for (int it = 1; it <= detail::kNewtonMaxIter; ++it) {
            for (std::size_t p = 0; p < n; ++p) g[p] = phi(v[p]);
            const auto mv = sys.M.apply(v), kv = sys.K.apply(v), mg = sys.M.apply(g);
            StateVector r(n);
            for (std::size_t p = 0; p < n; ++p) r[p] = a2 * mv[p] + b2 * kv[p] - c * mg[p] - rhs[p];
            for (std::size_t p = 0; p < n; ++p) d[p] = dphi(v[p]);
            BandMatrix<double> jac(n, 1, 1);
            for (std::size_t p = 0; p < n; ++p) {
                const std::size_t q0 = p > 0 ? p - 1 : 0, q1 = std::min(n - 1, p + 1);
                for (std::size_t q = q0; q <= q1; ++q)
                    jac(p, q) = a2 * sys.M.at(p, q) + b2 * sys.K.at(p, q) - c * sys.M.at(p, q) * d[q];
            }
            BandedLU<double> lu(std::move(jac));
            lu.solve_in_place(std::span<double>(r));
            for (std::size_t p = 0; p < n; ++p) v[p] -= r[p];
            const double nrm = l2_norm(r, sys);
            history.push_back(nrm);
            if (!std::isfinite(nrm) || !detail::finite_all(v)) break;
            if (nrm <= detail::kNewtonTol * scale) {
                if (report) *report = {it, history};
                return v;
            }
        }
        detail::newton_failure("two-step step", history);
    }

    const FemSystem* sys_;
    TwoStepScheme ts_;
    double tau_;
    TwoStepMode mode_;
    ShiftedSolver<double> lhs_;
};

inline StateVector two_step_apply(const TwoStepScheme& ts, double tau, double t, const StateVector& v1,
                                  const StateVector& v2, const FemSystem& sys) {
    return TwoStepStepper(sys, ts, tau, TwoStepMode::Implicit).step(t, v1, v2);
}

inline StateVector o2cp_extrapolated_step(const TwoStepScheme& ts, double tau, double t, const StateVector& v1,
                                          const StateVector& v2, const FemSystem& sys) {
    return TwoStepStepper(sys, ts, tau, TwoStepMode::Extrapolated).step(t, v1, v2);
}

/// How a single-step scheme treats the nonlinear term.
enum class ReactionMode {
    Implicit,  ///< part of the stage equations
    Frozen     ///< evaluated at the incoming state and added to the source
};

/// Single-step coarse or fine step. Tableau schemes run the implicit Runge-Kutta stages;
/// stiffly consistent schemes apply R(dt A) u + dt P(dt A) M^{-1} f(t + dt) through the
/// partial fraction expansion R(s) = c_inf + sum_i c_i / (s - z_i), P(s) = sum_i e_i / (s - z_i).
class SingleStepStepper {
public:
    SingleStepStepper(const FemSystem& sys, const SingleStepScheme& scheme, double dt,
                      ReactionMode mode = ReactionMode::Implicit)
        : sys_(&sys), dt_(dt), mode_(mode), rule_(scheme.source_rule) {
        if (!(dt > 0.0)) throw ConfigError("time step must be positive");
        if (rule_ == SourceRule::Tableau) {
            if (!scheme.tableau) throw ConfigError(scheme.name + ": tableau rule without a tableau");
            if (mode == ReactionMode::Frozen) throw ConfigError(scheme.name + ": frozen nonlinearity needs a stiffly consistent scheme");
            irk_.emplace(sys, *scheme.tableau, dt);
            return;
        }
        if (mode == ReactionMode::Implicit && !sys.is_linear())
            throw ConfigError(scheme.name + ": implicit nonlinearity is not available for stiffly consistent schemes");
        setup_partial_fractions(scheme.stability);
    }

    double dt() const { return dt_; }

    StateVector step(double t, const StateVector& u, NewtonReport* report = nullptr) const {
        if (irk_) return irk_->step(t, u, report);
        const FemSystem& sys = *sys_;
        const std::size_t n = sys.dofs();
        if (u.size() != n) throw DimensionMismatch("state length does not match mesh");
        const auto mu = sys.M.apply(u);
        StateVector f;
        if (sys.has_source()) f = sys.load(t + dt_);
        if (mode_ == ReactionMode::Frozen && !sys.is_linear()) {
            const auto r = sys.reaction_term(u);
            if (f.empty()) f.assign(n, 0.0);
            for (std::size_t p = 0; p < n; ++p) f[p] += r[p];
        }
        StateVector out(n);
        for (std::size_t p = 0; p < n; ++p) out[p] = c_inf_ * u[p];
        for (const auto& pole : poles_) {
            std::vector<Complex> rhs(n);
            for (std::size_t p = 0; p < n; ++p) {
                rhs[p] = pole.c * mu[p];
                if (!f.empty()) rhs[p] += dt_ * pole.e * f[p];
            }
            const auto x = pole.solver->solve(std::move(rhs));
            for (std::size_t p = 0; p < n; ++p) out[p] += pole.weight * x[p].real();
        }
        return out;
    }

private:
    struct Pole {
        Complex z, c, e;
        double weight = 1.0;  ///< 2 for a representative of a conjugate pair
        std::shared_ptr<ShiftedSolver<Complex>> solver;  ///< (dt K - z M)
    };

    void setup_partial_fractions(const RationalFunction& r) {
        const Polynomial& num = r.num();
        const Polynomial& den = r.den();
        if (num.degree() > den.degree()) throw ConfigError("stability function must be proper");
        if (den.degree() < 1 || den.degree() > 2) throw ConfigError("partial fractions need a denominator of degree 1 or 2");
        c_inf_ = num.degree() == den.degree() ? num.coeff(num.degree()) / den.coeff(den.degree()) : 0.0;
        const Polynomial diff = den - num;
        if (std::abs(diff.coeff(0)) > 1e-12) throw ConfigError("stiffly consistent rule requires R(0) = 1");
        std::vector<double> qc;
        for (int i = 1; i <= diff.degree(); ++i) qc.push_back(diff.coeff(i));
        const Polynomial q(qc);
        const Polynomial dd = den.derivative();

        std::vector<Complex> zs;
        if (den.degree() == 1) {
            zs.push_back(Complex(-den.coeff(0) / den.coeff(1), 0.0));
        } else {
            const double a = den.coeff(2);
            auto [z1, z2] = quadratic_roots(Complex(-den.coeff(1) / a), Complex(-den.coeff(0) / a));
            if (std::abs(z1 - z2) < 1e-10 * std::max(1.0, std::abs(z1)))
                throw ConfigError("repeated pole in stability function");
            zs = {z1, z2};
        }
        const bool conjugate_pair = zs.size() == 2 && std::abs(zs[0].imag()) > 1e-14 &&
                                    std::abs(zs[0] - std::conj(zs[1])) < 1e-10 * std::abs(zs[0]);
        for (std::size_t i = 0; i < zs.size(); ++i) {
            if (conjugate_pair && i == 1) break;
            Pole pole;
            pole.z = zs[i];
            const Complex dz = dd(zs[i]);
            pole.c = num(zs[i]) / dz;
            pole.e = q(zs[i]) / dz;
            pole.weight = conjugate_pair ? 2.0 : 1.0;
            // (s - z)^{-1} at s = dt A equals (dt K - z M)^{-1} M.
            pole.solver = std::make_shared<ShiftedSolver<Complex>>(-pole.z, Complex(dt_), *sys_);
            poles_.push_back(std::move(pole));
        }
    }

    const FemSystem* sys_;
    double dt_;
    ReactionMode mode_;
    SourceRule rule_;
    std::optional<IrkStepper> irk_;
    double c_inf_ = 0.0;
    std::vector<Pole> poles_;
};

inline StateVector single_step_apply(const SingleStepScheme& scheme, double dt, double t, const StateVector& u,
                                     const FemSystem& sys) {
    return SingleStepStepper(sys, scheme, dt).step(t, u);
}

} // namespace parareal
