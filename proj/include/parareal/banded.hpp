#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "parareal/errors.hpp"

namespace parareal {

/// Square band matrix with kl sub- and ku super-diagonals. Storage is row-major with
/// kl extra super-diagonals reserved for fill-in produced by partial pivoting.
template <typename T>
class BandMatrix {
public:
    BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), data_(n * width_, T{0.0}) {}

    std::size_t size() const { return n_; }
    std::size_t lower() const { return kl_; }
    std::size_t upper() const { return ku_; }

    bool in_band(std::size_t i, std::size_t j) const { return j + kl_ >= i && j <= i + ku_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * width_ + (j + kl_ - i)]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * width_ + (j + kl_ - i)]; }

    /// y = A x using the original band (kl, ku).
    template <typename V>
    std::vector<V> multiply(std::span<const V> x) const {
        std::vector<V> y(n_, V{0.0});
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
            const std::size_t j1 = std::min(n_ - 1, i + ku_);
            V acc{0.0};
            for (std::size_t j = j0; j <= j1; ++j) acc += (*this)(i, j) * x[j];
            y[i] = acc;
        }
        return y;
    }

private:
    template <typename>
    friend class BandedLU;
    std::size_t n_, kl_, ku_, width_;
    std::vector<T> data_;
};

/// LU factorization with partial pivoting restricted to the band.
template <typename T>
class BandedLU {
public:
    explicit BandedLU(BandMatrix<T> a) : lu_(std::move(a)), piv_(lu_.n_) { factor(); }

    std::size_t size() const { return lu_.n_; }

    template <typename V>
    void solve_in_place(std::span<V> x) const {
        const std::size_t n = lu_.n_, kl = lu_.kl_, ku = lu_.ku_;
        if (x.size() != n) throw DimensionMismatch("banded solve: right-hand side has wrong length");
        for (std::size_t k = 0; k < n; ++k) {
            if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
            const std::size_t i1 = std::min(n - 1, k + kl);
            for (std::size_t i = k + 1; i <= i1; ++i) x[i] -= lu_(i, k) * x[k];
        }
        for (std::size_t kk = n; kk-- > 0;) {
            const std::size_t j1 = std::min(n - 1, kk + kl + ku);
            V acc = x[kk];
            for (std::size_t j = kk + 1; j <= j1; ++j) acc -= lu_(kk, j) * x[j];
            x[kk] = acc / lu_(kk, kk);
        }
    }

    template <typename V>
    std::vector<V> solve(std::vector<V> rhs) const {
        solve_in_place(std::span<V>(rhs));
        return rhs;
    }

private:
    void factor() {
        const std::size_t n = lu_.n_, kl = lu_.kl_, ku = lu_.ku_;
        double scale = 0.0;
        for (const auto& v : lu_.data_) scale = std::max(scale, static_cast<double>(std::abs(v)));
        if (scale == 0.0) throw SingularSystem("banded matrix is zero");
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i1 = std::min(n - 1, k + kl);
            std::size_t p = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i <= i1; ++i) {
                const double v = std::abs(lu_(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (best <= 1e-18 * scale)
                throw SingularSystem("banded matrix is numerically singular at column " + std::to_string(k));
            piv_[k] = p;
            const std::size_t j1 = std::min(n - 1, k + kl + ku);
            if (p != k)
                for (std::size_t j = k; j <= j1; ++j) std::swap(lu_(k, j), lu_(p, j));
            for (std::size_t i = k + 1; i <= i1; ++i) {
                const T l = lu_(i, k) / lu_(k, k);
                lu_(i, k) = l;
                if (l == T{0.0}) continue;
                for (std::size_t j = k + 1; j <= j1; ++j) lu_(i, j) -= l * lu_(k, j);
            }
        }
    }

    BandMatrix<T> lu_;
    std::vector<std::size_t> piv_;
};

} // namespace parareal
