// SPDX-License-Identifier: Apache-2.0

#include "polycg/linop.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "polycg/error.hpp"
#include "polycg/parallel.hpp"

namespace polycg
{

std::vector<double> LinearOperator::operator()(std::span<const double> x) const
{
  if (x.size() != dim())
  {
    throw DimensionError("operator input has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(dim()));
  }
  std::vector<double> y(dim());
  apply(x, y);
  return y;
}

void IdentityOperator::apply(std::span<const double> x, std::span<double> y) const
{
  copy(x, y);
}

MatrixOperator::MatrixOperator(const CsrMatrix &m, bool symmetric) : m_(&m), symmetric_(symmetric)
{
  if (m.nrows() != m.ncols())
  {
    throw DimensionError("MatrixOperator needs a square matrix");
  }
}

void MatrixOperator::apply(std::span<const double> x, std::span<double> y) const
{
  spmv(*m_, x, y);
}

void DiagonalOperator::apply(std::span<const double> x, std::span<double> y) const
{
  if (x.size() != d_.size() || y.size() != d_.size())
  {
    throw DimensionError("DiagonalOperator: length mismatch");
  }
  parallel_for(d_.size(), [&](std::size_t i) { y[i] = d_[i] * x[i]; });
}

void CountedOperator::apply(std::span<const double> x, std::span<double> y) const
{
  ++counters_->mvp;
  inner_->apply(x, y);
}

ScaledOperator::ScaledOperator(const LinearOperator &inner, std::span<const double> d)
  : inner_(&inner), w_(d.size())
{
  if (d.size() != inner.dim())
  {
    throw DimensionError("scaling vector has length " + std::to_string(d.size()) +
                         ", operator dimension is " + std::to_string(inner.dim()));
  }
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    if (!(d[i] > 0.0) || !std::isfinite(d[i]))
    {
      throw InputError("scaling entry " + std::to_string(i) + " is not strictly positive");
    }
    w_[i] = 1.0 / std::sqrt(d[i]);
  }
}

void ScaledOperator::apply(std::span<const double> x, std::span<double> y) const
{
  std::vector<double> wx(x.size());
  parallel_for(x.size(), [&](std::size_t i) { wx[i] = w_[i] * x[i]; });
  inner_->apply(wx, y);
  parallel_for(y.size(), [&](std::size_t i) { y[i] *= w_[i]; });
}

std::vector<double> ScaledOperator::scale_rhs(std::span<const double> r) const
{
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i)
  {
    out[i] = w_[i] * r[i];
  }
  return out;
}

std::vector<double> ScaledOperator::unscale_solution(std::span<const double> x_hat) const
{
  return scale_rhs(x_hat);
}

ScaledOperator make_scaled_operator(const LinearOperator &a, std::span<const double> d)
{
  return ScaledOperator(a, d);
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (auto &x : v)
  {
    x = normal(gen);
  }
  return v;
}

double probe_symmetry(const LinearOperator &a, std::size_t trials, std::uint64_t seed)
{
  const std::size_t n = a.dim();
  double worst = 0.0;
  std::vector<double> ax(n), ay(n);
  for (std::size_t t = 0; t < std::max<std::size_t>(trials, 1); ++t)
  {
    auto x = random_vector(n, seed + 2 * t);
    auto y = random_vector(n, seed + 2 * t + 1);
    const double nx = norm2(x), ny = norm2(y);
    scale(1.0 / nx, x);
    scale(1.0 / ny, y);
    a.apply(x, ax);
    a.apply(y, ay);
    worst = std::max(worst, std::abs(dot(ax, y) - dot(x, ay)));
  }
  return worst;
}

}  // namespace polycg
