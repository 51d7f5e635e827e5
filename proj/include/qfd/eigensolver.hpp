#pragma once

#include <vector>

#include "qfd/field.hpp"

namespace qfd {

struct Eigenstates {
    std::vector<double> energies;       ///< ascending
    std::vector<ComplexField> states;   ///< real, normalized, sign fixed so the first large component is positive
};

/// Lowest `count` eigenpairs of the discrete Hamiltonian -lap/(2m) + V on
/// a 1D grid, using the same 3-point kinetic stencil as Crank-Nicolson.
/// Dirichlet axes solve the interior tridiagonal problem (MRRR, LAPACK
/// dstemr) with the end nodes pinned to zero; periodic axes use a dense
/// symmetric solver.
Eigenstates lowest_eigenstates(const Grid1D& g, const RealField& v, std::size_t count, double mass = 1.0);

}  // namespace qfd
