#pragma once

#include <span>
#include <vector>

#include "qfd/field.hpp"

namespace qfd::linalg {

/// Solves lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i] in place
/// (Thomas algorithm, no pivoting). lower[0] and upper[n-1] are ignored.
void solve_tridiagonal(std::span<const complex> lower, std::span<const complex> diag,
                       std::span<const complex> upper, std::span<complex> rhs);

/// Same system with corner couplings lower[0] -> x[n-1] and
/// upper[n-1] -> x[0] (periodic), via Sherman-Morrison.
void solve_cyclic_tridiagonal(std::span<const complex> lower, std::span<const complex> diag,
                              std::span<const complex> upper, std::span<complex> rhs);

/// Pre-factored constant-coefficient tridiagonal system (lower, diag,
/// upper identical on every row), optionally cyclic. Reused across the
/// many lines of a 2D grid.
class ConstantTridiagonal {
public:
    ConstantTridiagonal() = default;
    ConstantTridiagonal(std::size_t n, complex lower, complex diag, complex upper, bool cyclic);

    /// Solves in place for a line with the given element stride.
    void solve(complex* x, std::size_t stride) const;
    [[nodiscard]] std::size_t size() const { return n_; }

private:
    void forward_backward(complex* x, std::size_t stride) const;

    std::size_t n_ = 0;
    complex lower_{}, upper_{};
    bool cyclic_ = false;
    std::vector<complex> cprime_;   // modified super-diagonal
    std::vector<complex> inv_den_;  // 1 / pivots
    std::vector<complex> z_;        // cyclic correction vector
    complex corner_factor_{};
    complex gamma_{}, v_last_{};
};

}  // namespace qfd::linalg
