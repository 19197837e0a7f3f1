// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "polycg/linop.hpp"

namespace polycg
{

// Estimated spectral interval [alpha, beta] of an SPD operator plus the
// de-clustering parameter xi used when building polynomial preconditioners.
struct SpectralBounds
{
  double alpha = 1.0;
  double beta = 1.0;
  double xi = 0.0;

  // Throws InputError unless 0 < alpha <= beta and xi >= 0.
  void validate() const;
};

// Approximate eigenpairs, values ascending, vectors unit norm and mutually
// orthonormal.
struct EigenPairSet
{
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;

  std::size_t size() const { return values.size(); }
};

struct EigenOptions
{
  // Relative residual ||Av - lambda v|| / (lambda ||v||) at convergence.
  double tol = 1e-3;
  // 0 selects 50 * sqrt(dim).
  std::size_t max_iters = 0;
  std::uint64_t seed = 12345;
};

struct ExtremeEstimate
{
  SpectralBounds bounds;
  std::vector<double> leftmost_vector;
  std::size_t iters_min = 0;
  std::size_t iters_max = 0;
  std::size_t operator_applications = 0;
};

// Smallest eigenvalue by DACG on the pencil (A, I); largest as the reciprocal
// of the smallest eigenvalue of (I, A). Returns the raw Rayleigh quotients:
// alpha is an upper bound on lambda_min and beta a lower bound on lambda_max.
// Throws ConvergenceError after max_iters, InputError if dim < 2.
SpectralBounds estimate_extremes(const LinearOperator &a, double tol_eig = 1e-3);
ExtremeEstimate estimate_extremes_detailed(const LinearOperator &a, const EigenOptions &opts);

// Bounds widened before polynomial construction: beta is multiplied by 1.01
// when tol_eig >= 1e-3. An underestimated beta maps the top of the spectrum
// outside the interval the polynomial was designed for.
SpectralBounds with_safety_margin(SpectralBounds bounds, double tol_eig);

// p leftmost eigenpairs by DACG with deflation against converged vectors.
// Throws InputError if p == 0 or p >= dim, ConvergenceError on stagnation.
EigenPairSet leftmost_eigenpairs(const LinearOperator &a, std::size_t p, double tol_eig = 1e-3);
EigenPairSet leftmost_eigenpairs(const LinearOperator &a, std::size_t p, const EigenOptions &opts);

// Extreme Ritz values after `steps` Lanczos steps with full
// reorthogonalization, started from a fixed-seed vector.
struct RitzExtremes
{
  double min;
  double max;
};
RitzExtremes lanczos_extremes(const LinearOperator &a, std::size_t steps, std::uint64_t seed = 99);

// Eigenvalues (ascending) of the symmetric tridiagonal matrix with the given
// diagonal and off-diagonal, by Sturm-sequence bisection.
std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag,
                                            std::span<const double> offdiag);

}  // namespace polycg
