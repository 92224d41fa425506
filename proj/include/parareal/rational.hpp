#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <sstream>
#include <utility>
#include <vector>

#include "parareal/errors.hpp"

namespace parareal {

using Complex = std::complex<double>;

/// Real polynomial with ascending coefficients: coeffs()[i] multiplies s^i.
/// Trailing exact zeros are stripped; the zero polynomial has no coefficients.
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> c) : c_(c) { trim(); }
    explicit Polynomial(std::vector<double> c) : c_(std::move(c)) { trim(); }

    static Polynomial constant(double v) { return Polynomial({v}); }
    static Polynomial monomial(double v, std::size_t degree) {
        std::vector<double> c(degree + 1, 0.0);
        c[degree] = v;
        return Polynomial(std::move(c));
    }

    const std::vector<double>& coeffs() const { return c_; }
    bool is_zero() const { return c_.empty(); }
    /// -1 for the zero polynomial.
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    double coeff(std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }

    template <typename T>
    T operator()(T s) const {
        T acc{0.0};
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + T{*it};
        return acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<double>(i) * c_[i];
        return Polynomial(std::move(d));
    }

    /// Drops trailing coefficients whose magnitude is below rel_tol times the largest one.
    Polynomial chopped(double rel_tol) const {
        double scale = 0.0;
        for (double v : c_) scale = std::max(scale, std::abs(v));
        std::vector<double> c = c_;
        while (!c.empty() && std::abs(c.back()) <= rel_tol * scale) c.pop_back();
        for (double& v : c)
            if (std::abs(v) <= rel_tol * scale) v = 0.0;
        return Polynomial(std::move(c));
    }

    Polynomial& operator+=(const Polynomial& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
        for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
        trim();
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) { return *this += o * -1.0; }
    Polynomial& operator*=(double v) {
        for (double& x : c_) x *= v;
        trim();
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double v) { return a *= v; }
    friend Polynomial operator*(double v, Polynomial a) { return a *= v; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(c));
    }
    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }
    std::vector<double> c_;
};

inline std::string to_string(const Polynomial& p) {
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (std::size_t i = 0; i < p.coeffs().size(); ++i) os << (i ? ", " : "") << p.coeffs()[i];
    os << ']';
    return os.str();
}

/// num(s) / den(s), normalized so that den(0) = 1 whenever den(0) != 0.
class RationalFunction {
public:
    RationalFunction() : num_({1.0}), den_({1.0}) {}
    RationalFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw PoleError("rational function with zero denominator");
        const double d0 = den_.coeff(0);
        if (d0 != 0.0 && d0 != 1.0) {
            num_ *= 1.0 / d0;
            den_ *= 1.0 / d0;
        }
    }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }

    double operator()(double s) const { return eval(s); }
    Complex operator()(Complex z) const { return eval(z); }

    template <typename T>
    T eval(T s) const {
        const T d = den_(s);
        const T n = num_(s);
        if (std::abs(d) < 1e-14 * std::max(1.0, static_cast<double>(std::abs(n)))) {
            std::ostringstream os;
            os << "pole of rational function at s = " << s;
            throw PoleError(os.str());
        }
        return n / d;
    }

private:
    Polynomial num_;
    Polynomial den_;
};

inline double eval_real(const RationalFunction& rf, double s) { return rf.eval(s); }
inline Complex eval_complex(const RationalFunction& rf, Complex z) { return rf.eval(z); }

namespace detail {
inline bool modulus_first(const Complex& a, const Complex& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}
} // namespace detail

/// Roots of z^2 - b z - c = 0. The first root has the larger modulus; ties go to
/// the larger real part and then the larger imaginary part.
inline std::pair<Complex, Complex> quadratic_roots(Complex b, Complex c) {
    const Complex disc = std::sqrt(b * b + 4.0 * c);
    // Pick the sign that avoids cancellation, recover the other root from the product -c.
    const Complex plus = b + disc;
    const Complex minus = b - disc;
    const Complex big = std::abs(plus) >= std::abs(minus) ? plus : minus;
    Complex z1 = 0.5 * big;
    Complex z2 = z1 == Complex{0.0, 0.0} ? Complex{0.0, 0.0} : -c / z1;
    if (!detail::modulus_first(z1, z2) && z1 != z2) std::swap(z1, z2);
    return {z1, z2};
}

inline std::pair<Complex, Complex> quadratic_roots(double b, double c) {
    return quadratic_roots(Complex{b, 0.0}, Complex{c, 0.0});
}

} // namespace parareal
