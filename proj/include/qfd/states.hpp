#pragma once

#include "qfd/field.hpp"

// Analytic initial states sampled on a grid. None of these are
// renormalized on the grid unless stated.
namespace qfd::states {

/// (2 pi sigma^2)^(-1/4) exp(-(x - center)^2 / (4 sigma^2) + i k0 x);
/// sigma is the standard deviation of |psi|^2.
ComplexField gaussian(const Grid1D& g, double center, double sigma, double k0 = 0.0);

/// exp(i k x); unnormalized unless `normalize` is set.
ComplexField plane_wave(const Grid1D& g, double k, bool normalize = false);

/// n-th eigenfunction of the harmonic oscillator m w^2 x^2 / 2.
ComplexField harmonic_eigenstate(const Grid1D& g, unsigned level, double omega, double mass = 1.0);

/// psi1(x) psi2(y) on the tensor grid.
ComplexField product(const ComplexField& psi1, const ComplexField& psi2);

/// (x + i y) exp(-(x^2 + y^2)/2): a single unit-charge vortex at the origin.
ComplexField single_vortex(const Grid2D& g);

/// Free-packet width sigma0 sqrt(1 + (hbar t / (2 m sigma0^2))^2).
double free_gaussian_width(double sigma0, double t, double mass = 1.0);

}  // namespace qfd::states
