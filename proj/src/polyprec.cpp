// SPDX-License-Identifier: Apache-2.0

#include "polycg/polyprec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polycg/error.hpp"
#include "polycg/parallel.hpp"

namespace polycg
{

namespace
{

void check_dims(const LinearOperator &a, std::span<const double> r, std::span<double> out)
{
  if (r.size() != a.dim() || out.size() != a.dim())
  {
    throw DimensionError("polynomial preconditioner: vector length does not match operator");
  }
}

// out = P_level r, with per-level scratch vectors y[j], w[j].
void newton_level(const NewtonCoeffs &c, const LinearOperator &a, std::size_t level,
                  std::span<const double> r, std::span<double> out,
                  std::vector<std::vector<double>> &y, std::vector<std::vector<double>> &w)
{
  if (level == 0)
  {
    const double z0 = c.zetas[0];
    parallel_for(r.size(), [&](std::size_t i) { out[i] = z0 * r[i]; });
    return;
  }
  auto &yl = y[level];
  auto &wl = w[level];
  newton_level(c, a, level - 1, r, yl, y, w);
  a.apply(yl, wl);
  newton_level(c, a, level - 1, wl, out, y, w);
  const double z = c.zetas[level];
  parallel_for(r.size(), [&](std::size_t i) { out[i] = z * (2.0 * yl[i] - out[i]); });
}

}  // namespace

std::size_t poly_degree(const PolyCoeffs &c)
{
  return std::visit(
    [](const auto &k) -> std::size_t
    {
      if constexpr (std::is_same_v<std::decay_t<decltype(k)>, NewtonCoeffs>)
      {
        return k.degree();
      }
      else
      {
        return k.degree;
      }
    },
    c);
}

NewtonCoeffs build_newton(const SpectralBounds &bounds, std::size_t nlev)
{
  bounds.validate();
  if (nlev > kMaxNewtonLevels)
  {
    throw InputError("nlev must be at most " + std::to_string(kMaxNewtonLevels));
  }
  NewtonCoeffs c;
  c.nlev = nlev;
  c.theta_bar = 0.5 * (bounds.alpha + bounds.beta) * (1.0 + bounds.xi);
  const double delta = 0.5 * (bounds.beta - bounds.alpha);
  c.lower = c.theta_bar - delta;
  c.zetas.reserve(nlev + 1);
  c.zetas.push_back(1.0 / c.theta_bar);
  if (nlev >= 1)
  {
    const double t = c.lower * c.zetas[0];
    c.zetas.push_back(2.0 / (1.0 + 2.0 * t - t * t));
  }
  for (std::size_t i = 2; i <= nlev; ++i)
  {
    const double z = c.zetas.back();
    c.zetas.push_back(2.0 / (1.0 + 2.0 * z - z * z));
  }
  return c;
}

ChebCoeffs build_chebyshev(const SpectralBounds &bounds, std::size_t m)
{
  bounds.validate();
  if (!(bounds.beta > bounds.alpha))
  {
    throw InputError("Chebyshev preconditioner needs alpha < beta; use the Newton variant for a "
                     "single-point spectrum");
  }
  if (m > kMaxPolyDegree)
  {
    throw InputError("polynomial degree must be at most " + std::to_string(kMaxPolyDegree));
  }
  ChebCoeffs c;
  c.degree = m;
  c.theta_bar = 0.5 * (bounds.alpha + bounds.beta) * (1.0 + bounds.xi);
  c.delta = 0.5 * (bounds.beta - bounds.alpha);
  c.sigma = c.theta_bar / c.delta;
  c.rhos.reserve(m + 1);
  c.rhos.push_back(1.0 / c.sigma);
  for (std::size_t k = 1; k <= m; ++k)
  {
    c.rhos.push_back(1.0 / (2.0 * c.sigma - c.rhos.back()));
  }
  return c;
}

void apply_newton(const NewtonCoeffs &c, const LinearOperator &a, std::span<const double> r,
                  std::span<double> out)
{
  check_dims(a, r, out);
  const std::size_t n = r.size();
  std::vector<std::vector<double>> y(c.nlev + 1), w(c.nlev + 1);
  for (std::size_t j = 1; j <= c.nlev; ++j)
  {
    y[j].resize(n);
    w[j].resize(n);
  }
  newton_level(c, a, c.nlev, r, out, y, w);
}

void apply_chebyshev(const ChebCoeffs &c, const LinearOperator &a, std::span<const double> r,
                     std::span<double> out)
{
  check_dims(a, r, out);
  const std::size_t n = r.size();
  const double inv_theta = 1.0 / c.theta_bar;
  if (c.degree == 0)
  {
    parallel_for(n, [&](std::size_t i) { out[i] = inv_theta * r[i]; });
    return;
  }
  std::vector<double> x_old(n), x(n), ax(n);
  parallel_for(n, [&](std::size_t i) { x_old[i] = inv_theta * r[i]; });
  a.apply(r, ax);
  const double c1 = 2.0 * c.rhos[1] / c.delta;
  parallel_for(n, [&](std::size_t i) { x[i] = c1 * (2.0 * r[i] - inv_theta * ax[i]); });
  const double two_over_delta = 2.0 / c.delta;
  for (std::size_t k = 2; k <= c.degree; ++k)
  {
    a.apply(x, ax);
    const double rho = c.rhos[k];
    const double rho_prev = c.rhos[k - 1];
    const double two_sigma = 2.0 * c.sigma;
    // x_new = rho_k (2 sigma x - rho_{k-1} x_old + (2/delta)(r - A x)), stored in x_old.
    parallel_for(n,
                 [&](std::size_t i)
                 {
                   const double z = two_over_delta * (r[i] - ax[i]);
                   x_old[i] = rho * (two_sigma * x[i] - rho_prev * x_old[i] + z);
                 });
    x.swap(x_old);
  }
  copy(x, out);
}

double eval_scalar(const NewtonCoeffs &c, double lambda)
{
  double t = c.zetas[0] * lambda;
  for (std::size_t j = 1; j <= c.nlev; ++j)
  {
    t = c.zetas[j] * (2.0 * t - t * t);
  }
  return t;
}

double eval_scalar(const ChebCoeffs &c, double lambda)
{
  const double inv_theta = 1.0 / c.theta_bar;
  double x_old = inv_theta;
  if (c.degree == 0)
  {
    return x_old * lambda;
  }
  double x = 2.0 * c.rhos[1] / c.delta * (2.0 - lambda * inv_theta);
  for (std::size_t k = 2; k <= c.degree; ++k)
  {
    const double z = 2.0 / c.delta * (1.0 - lambda * x);
    const double next = c.rhos[k] * (2.0 * c.sigma * x - c.rhos[k - 1] * x_old + z);
    x_old = x;
    x = next;
  }
  return x * lambda;
}

double eval_scalar(const PolyCoeffs &c, double lambda)
{
  return std::visit([lambda](const auto &k) { return eval_scalar(k, lambda); }, c);
}

double newton_stage_value(const NewtonCoeffs &c, double lambda, std::size_t level)
{
  if (level > c.nlev)
  {
    throw InputError("Newton stage " + std::to_string(level) + " exceeds nlev");
  }
  double t = c.zetas[0] * lambda;
  for (std::size_t j = 1; j <= level; ++j)
  {
    const double f = 2.0 * t - t * t;
    if (j == level)
    {
      return f;
    }
    t = c.zetas[j] * f;
  }
  return t;
}

PolyPreconditioner::PolyPreconditioner(PolyCoeffs coeffs, const LinearOperator &a)
  : coeffs_(std::move(coeffs)), a_(&a)
{
}

void PolyPreconditioner::apply(std::span<const double> r, std::span<double> out) const
{
  std::visit(
    [&](const auto &k)
    {
      if constexpr (std::is_same_v<std::decay_t<decltype(k)>, NewtonCoeffs>)
      {
        apply_newton(k, *a_, r, out);
      }
      else
      {
        apply_chebyshev(k, *a_, r, out);
      }
    },
    coeffs_);
}

SpectrumReport preconditioned_spectrum_report(const PolyCoeffs &c,
                                              std::span<const double> eigenvalues)
{
  SpectrumReport rep;
  rep.lambda.assign(eigenvalues.begin(), eigenvalues.end());
  rep.mapped.reserve(eigenvalues.size());
  for (const double l : eigenvalues)
  {
    if (!(l > 0.0))
    {
      throw InputError("spectrum report needs positive eigenvalues");
    }
    rep.mapped.push_back(eval_scalar(c, l));
  }
  if (rep.mapped.empty())
  {
    rep.kappa = rep.kappa10 = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.sorted = rep.mapped;
  std::sort(rep.sorted.begin(), rep.sorted.end());
  const double top = rep.sorted.back();
  rep.normalized.reserve(rep.sorted.size());
  for (const double v : rep.sorted)
  {
    rep.normalized.push_back(v / top);
  }
  rep.kappa = top / rep.sorted.front();
  rep.kappa10 = top / rep.sorted[std::min<std::size_t>(9, rep.sorted.size() - 1)];
  return rep;
}

}  // namespace polycg
