// SPDX-License-Identifier: Apache-2.0

#include "polycg/lowrank.hpp"

#include <cmath>
#include <string>

#include "polycg/error.hpp"

namespace polycg
{

SpectralCorrection::SpectralCorrection(const LinearOperator &a, std::vector<std::vector<double>> vectors)
  : n_(a.dim()), v_(std::move(vectors))
{
  const std::size_t p = v_.size();
  if (p == 0 || p > kMaxCorrectionRank)
  {
    throw InputError("spectral correction rank must be in [1, " +
                     std::to_string(kMaxCorrectionRank) + "]");
  }
  for (auto &v : v_)
  {
    if (v.size() != n_)
    {
      throw DimensionError("correction vector length does not match operator");
    }
  }

  // Modified Gram-Schmidt.
  for (std::size_t j = 0; j < p; ++j)
  {
    const double original = norm2(v_[j]);
    for (std::size_t i = 0; i < j; ++i)
    {
      axpy(-dot(v_[i], v_[j]), v_[i], v_[j]);
    }
    const double nrm = norm2(v_[j]);
    if (!(nrm > 1e-10 * original))
    {
      throw InputError("correction vectors are linearly dependent (column " + std::to_string(j) + ")");
    }
    scale(1.0 / nrm, v_[j]);
  }

  std::vector<std::vector<double>> av(p, std::vector<double>(n_));
  for (std::size_t j = 0; j < p; ++j)
  {
    a.apply(v_[j], av[j]);
  }
  projected_.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
  {
    for (std::size_t j = 0; j <= i; ++j)
    {
      // Symmetrize the projected matrix explicitly.
      const double s = 0.5 * (dot(v_[i], av[j]) + dot(v_[j], av[i]));
      projected_[i * p + j] = s;
      projected_[j * p + i] = s;
    }
  }

  chol_.assign(p * p, 0.0);
  for (std::size_t j = 0; j < p; ++j)
  {
    double d = projected_[j * p + j];
    for (std::size_t k = 0; k < j; ++k)
    {
      d -= chol_[j * p + k] * chol_[j * p + k];
    }
    if (!(d > 0.0))
    {
      throw InputError("projected matrix V'AV is not SPD; the correction vectors are unusable");
    }
    const double ljj = std::sqrt(d);
    chol_[j * p + j] = ljj;
    for (std::size_t i = j + 1; i < p; ++i)
    {
      double s = projected_[i * p + j];
      for (std::size_t k = 0; k < j; ++k)
      {
        s -= chol_[i * p + k] * chol_[j * p + k];
      }
      chol_[i * p + j] = s / ljj;
    }
  }
}

void SpectralCorrection::add_to(std::span<const double> r, std::span<double> out,
                                CounterSet *counters) const
{
  if (r.size() != n_ || out.size() != n_)
  {
    throw DimensionError("spectral correction: vector length mismatch");
  }
  const std::size_t p = v_.size();
  std::vector<double> y(p);
  for (std::size_t i = 0; i < p; ++i)
  {
    y[i] = dot(v_[i], r);
  }
  if (counters)
  {
    counters->proj_dot += p;
  }
  // Solve L L' y = V'r in place.
  for (std::size_t i = 0; i < p; ++i)
  {
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k)
    {
      s -= chol_[i * p + k] * y[k];
    }
    y[i] = s / chol_[i * p + i];
  }
  for (std::size_t i = p; i-- > 0;)
  {
    double s = y[i];
    for (std::size_t k = i + 1; k < p; ++k)
    {
      s -= chol_[k * p + i] * y[k];
    }
    y[i] = s / chol_[i * p + i];
  }
  for (std::size_t i = 0; i < p; ++i)
  {
    axpy(y[i], v_[i], out);
  }
}

SpectralCorrection build_correction(const LinearOperator &a, std::vector<std::vector<double>> vectors)
{
  return SpectralCorrection(a, std::move(vectors));
}

CorrectedPreconditioner::CorrectedPreconditioner(const LinearOperator &p0,
                                                 const SpectralCorrection &corr,
                                                 CounterSet *counters)
  : p0_(&p0), corr_(&corr), counters_(counters)
{
  if (p0.dim() != corr.dim())
  {
    throw DimensionError("preconditioner and correction dimensions differ");
  }
}

void CorrectedPreconditioner::apply(std::span<const double> r, std::span<double> out) const
{
  p0_->apply(r, out);
  corr_->add_to(r, out, counters_);
}

void apply_corrected(const LinearOperator &p0, const SpectralCorrection &corr,
                     std::span<const double> r, std::span<double> out)
{
  CorrectedPreconditioner(p0, corr).apply(r, out);
}

}  // namespace polycg
