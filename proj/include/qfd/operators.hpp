#pragma once

#include "qfd/field.hpp"

namespace qfd {

/// Central second-order difference along `axis`; periodic axes wrap,
/// Dirichlet axes use second-order one-sided stencils at the two edges.
RealField gradient(const RealField& f, std::size_t axis);
ComplexField gradient(const ComplexField& f, std::size_t axis);

/// 3-point (1D) or 5-point (2D) Laplacian with the same edge policy as
/// gradient.
RealField laplacian(const RealField& f);
ComplexField laplacian(const ComplexField& f);

/// Second derivative along a single axis.
RealField second_derivative(const RealField& f, std::size_t axis);

/// Riemann sum times cell volume, trapezoid weights at Dirichlet edges.
double integrate(const RealField& f);

/// Quadrature weight of flat index k (product of per-axis weights).
double quadrature_weight(const Grid& g, std::size_t k);

RealField density(const ComplexField& psi);
double norm_squared(const ComplexField& psi);
complex inner_product(const ComplexField& a, const ComplexField& b);

/// Zero the end nodes of every Dirichlet axis (the boundary values the
/// propagators hold fixed). Apply before normalizing an initial state.
void pin_dirichlet_edges(ComplexField& psi);

/// Rescale so that integrate(|psi|^2) == 1. Returns the prior norm squared.
double normalize(ComplexField& psi);

/// Largest |a - b| over all nodes.
double max_abs_difference(const RealField& a, const RealField& b);
double max_abs_difference(const ComplexField& a, const ComplexField& b);

}  // namespace qfd
