// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "polycg/eigest.hpp"
#include "polycg/linop.hpp"

namespace polycg
{

inline constexpr std::size_t kMaxNewtonLevels = 10;
inline constexpr std::size_t kMaxPolyDegree = (std::size_t{1} << kMaxNewtonLevels) - 1;

//
// Newton (Hotelling) recursion P_{j+1} = zeta_{j+1} (2 P_j - P_j A P_j),
// P_0 = zeta_0 I. nlev levels give a polynomial of degree 2^nlev - 1.
//
// The de-clustering parameter xi enters through theta_bar = theta (1 + xi):
// zeta_0 = 1 / theta_bar, and zeta_1 is computed from the lower end of the
// interval [theta_bar - delta, theta_bar + delta] that the modified recursion
// targets. With xi = 0 this is the classical choice zeta_0 = 2/(alpha+beta).
//
struct NewtonCoeffs
{
  std::size_t nlev = 0;
  std::vector<double> zetas;  // zeta_0 ... zeta_nlev
  double theta_bar = 1.0;
  double lower = 1.0;  // theta_bar - delta

  std::size_t degree() const { return (std::size_t{1} << nlev) - 1; }
};

//
// Shifted and scaled Chebyshev preconditioner of degree m, three-term
// recurrence with precomputed rho_k. theta_bar replaces theta; delta is the
// unmodified half-width, so sigma = theta_bar / delta.
//
struct ChebCoeffs
{
  std::size_t degree = 0;
  double theta_bar = 1.0;
  double delta = 0.0;
  double sigma = 0.0;
  std::vector<double> rhos;  // rho_0 ... rho_m
};

using PolyCoeffs = std::variant<NewtonCoeffs, ChebCoeffs>;

std::size_t poly_degree(const PolyCoeffs &c);

// Throws InputError for invalid bounds or nlev > kMaxNewtonLevels. alpha == beta
// is allowed: every zeta_j (j >= 1) is then 1 and P = I / theta_bar.
NewtonCoeffs build_newton(const SpectralBounds &bounds, std::size_t nlev);

// Throws InputError when alpha == beta (use the Newton path) or m > kMaxPolyDegree.
ChebCoeffs build_chebyshev(const SpectralBounds &bounds, std::size_t m);

// out = P r. Uses exactly degree() applications of `a`.
void apply_newton(const NewtonCoeffs &c, const LinearOperator &a, std::span<const double> r,
                  std::span<double> out);
void apply_chebyshev(const ChebCoeffs &c, const LinearOperator &a, std::span<const double> r,
                     std::span<double> out);

// p(lambda) * lambda: the eigenvalue of P A belonging to the eigenvalue lambda
// of A, from the same recurrence run on scalars.
double eval_scalar(const NewtonCoeffs &c, double lambda);
double eval_scalar(const ChebCoeffs &c, double lambda);
double eval_scalar(const PolyCoeffs &c, double lambda);

// Value after `level` Newton stages *before* that stage's zeta scaling, i.e.
// f(t) = 2t - t^2 applied to the scaled value of the previous stage. Level 0
// returns zeta_0 * lambda. The spectrum of these values is contained in (0, 1]
// for level >= 1 when [alpha, beta] encloses the spectrum.
double newton_stage_value(const NewtonCoeffs &c, double lambda, std::size_t level);

//
// Polynomial preconditioner as a symmetric linear operator. Holds a reference
// to the system operator; wrap it in a CountedOperator to count MVPs.
//
class PolyPreconditioner final : public LinearOperator
{
public:
  PolyPreconditioner(PolyCoeffs coeffs, const LinearOperator &a);

  std::size_t dim() const override { return a_->dim(); }
  void apply(std::span<const double> r, std::span<double> out) const override;

  std::size_t degree() const { return poly_degree(coeffs_); }
  const PolyCoeffs &coeffs() const { return coeffs_; }

private:
  PolyCoeffs coeffs_;
  const LinearOperator *a_;
};

struct SpectrumReport
{
  std::vector<double> lambda;         // input order
  std::vector<double> mapped;         // eval_scalar(lambda[i])
  std::vector<double> sorted;         // mapped, ascending
  std::vector<double> normalized;     // sorted / max(sorted)
  double kappa = 0.0;                 // max / min
  double kappa10 = 0.0;               // max / 10th smallest (last one if fewer)
};

// Throws InputError on non-positive eigenvalues. An empty list gives empty
// vectors and NaN condition numbers.
SpectrumReport preconditioned_spectrum_report(const PolyCoeffs &c,
                                              std::span<const double> eigenvalues);

}  // namespace polycg
