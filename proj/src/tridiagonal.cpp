#include "qfd/tridiagonal.hpp"

namespace qfd::linalg {

void solve_tridiagonal(std::span<const complex> lower, std::span<const complex> diag,
                       std::span<const complex> upper, std::span<complex> rhs) {
    const std::size_t n = diag.size();
    std::vector<complex> cprime(n);
    complex den = diag[0];
    cprime[0] = upper[0] / den;
    rhs[0] /= den;
    for (std::size_t i = 1; i < n; ++i) {
        den = diag[i] - lower[i] * cprime[i - 1];
        cprime[i] = i + 1 < n ? upper[i] / den : complex{};
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / den;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cprime[i] * rhs[i + 1];
}

void solve_cyclic_tridiagonal(std::span<const complex> lower, std::span<const complex> diag,
                              std::span<const complex> upper, std::span<complex> rhs) {
    const std::size_t n = diag.size();
    const complex alpha = upper[n - 1];  // couples row n-1 to x[0]
    const complex beta = lower[0];       // couples row 0 to x[n-1]
    const complex gamma = -diag[0];
    std::vector<complex> d(diag.begin(), diag.end());
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    std::vector<complex> u(n, complex{});
    u[0] = gamma;
    u[n - 1] = alpha;
    solve_tridiagonal(lower, d, upper, rhs);
    solve_tridiagonal(lower, d, upper, u);
    const complex factor = (rhs[0] + beta * rhs[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) rhs[i] -= factor * u[i];
}

ConstantTridiagonal::ConstantTridiagonal(std::size_t n, complex lower, complex diag, complex upper, bool cyclic)
    : n_(n), lower_(lower), upper_(upper), cyclic_(cyclic), cprime_(n), inv_den_(n) {
    std::vector<complex> d(n, diag);
    if (cyclic_) {
        gamma_ = -diag;
        v_last_ = lower / gamma_;
        d[0] -= gamma_;
        d[n - 1] -= upper * lower / gamma_;
    }
    complex den = d[0];
    inv_den_[0] = 1.0 / den;
    cprime_[0] = upper * inv_den_[0];
    for (std::size_t i = 1; i < n; ++i) {
        den = d[i] - lower * cprime_[i - 1];
        inv_den_[i] = 1.0 / den;
        cprime_[i] = upper * inv_den_[i];
    }
    if (cyclic_) {
        z_.assign(n, complex{});
        z_[0] = gamma_;
        z_[n - 1] = upper;
        forward_backward(z_.data(), 1);
        corner_factor_ = 1.0 / (1.0 + z_[0] + v_last_ * z_[n - 1]);
    }
}

void ConstantTridiagonal::forward_backward(complex* x, std::size_t s) const {
    x[0] *= inv_den_[0];
    for (std::size_t i = 1; i < n_; ++i) x[i * s] = (x[i * s] - lower_ * x[(i - 1) * s]) * inv_den_[i];
    for (std::size_t i = n_ - 1; i-- > 0;) x[i * s] -= cprime_[i] * x[(i + 1) * s];
}

void ConstantTridiagonal::solve(complex* x, std::size_t s) const {
    forward_backward(x, s);
    if (!cyclic_) return;
    const complex f = (x[0] + v_last_ * x[(n_ - 1) * s]) * corner_factor_;
    for (std::size_t i = 0; i < n_; ++i) x[i * s] -= f * z_[i];
}

}  // namespace qfd::linalg
