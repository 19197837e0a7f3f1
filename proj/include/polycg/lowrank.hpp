// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "polycg/linop.hpp"

namespace polycg
{

inline constexpr std::size_t kMaxCorrectionRank = 50;

//
// Spectral correction term V (V'AV)^{-1} V' built from approximate leftmost
// eigenvectors. V is re-orthonormalized (modified Gram-Schmidt) on
// construction; the p x p projected matrix is kept as its Cholesky factor.
//
class SpectralCorrection
{
public:
  // Uses p applications of `a`. Throws InputError if the columns are
  // dependent, p exceeds kMaxCorrectionRank, or V'AV is not SPD.
  SpectralCorrection(const LinearOperator &a, std::vector<std::vector<double>> vectors);

  std::size_t rank() const { return v_.size(); }
  std::size_t dim() const { return n_; }
  const std::vector<std::vector<double>> &basis() const { return v_; }
  // Row-major p x p matrix V'AV as assembled.
  const std::vector<double> &projected() const { return projected_; }

  // out += V (V'AV)^{-1} V' r. Adds p projection dots to counters->proj_dot.
  void add_to(std::span<const double> r, std::span<double> out, CounterSet *counters = nullptr) const;

private:
  std::size_t n_;
  std::vector<std::vector<double>> v_;
  std::vector<double> projected_;
  std::vector<double> chol_;  // lower factor, row-major p x p
};

SpectralCorrection build_correction(const LinearOperator &a, std::vector<std::vector<double>> vectors);

// P = P0 + V (V'AV)^{-1} V'. Neither argument is owned.
class CorrectedPreconditioner final : public LinearOperator
{
public:
  CorrectedPreconditioner(const LinearOperator &p0, const SpectralCorrection &corr,
                          CounterSet *counters = nullptr);
  std::size_t dim() const override { return p0_->dim(); }
  void apply(std::span<const double> r, std::span<double> out) const override;

private:
  const LinearOperator *p0_;
  const SpectralCorrection *corr_;
  CounterSet *counters_;
};

void apply_corrected(const LinearOperator &p0, const SpectralCorrection &corr,
                     std::span<const double> r, std::span<double> out);

}  // namespace polycg
