// SPDX-License-Identifier: Apache-2.0

#include "polycg/eigest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polycg/error.hpp"

namespace polycg
{

namespace
{

enum class Pencil
{
  // minimize x'Ax / x'x  -> lambda_min(A)
  Smallest,
  // minimize x'x / x'Ax  -> 1 / lambda_max(A)
  Largest
};

struct DacgResult
{
  double lambda;  // eigenvalue of A
  std::vector<double> x;
  std::size_t iters;
};

std::size_t default_max_iters(std::size_t n)
{
  return static_cast<std::size_t>(std::ceil(50.0 * std::sqrt(static_cast<double>(n))));
}

//
// Deflation-accelerated CG minimization of the Rayleigh quotient
// q(x) = x'Kx / x'Mx, with (K, M) = (A, I) or (I, A). The search stays in the
// M-orthogonal complement of `locked`. One application of A per iteration.
//
class Dacg
{
public:
  Dacg(const LinearOperator &a, Pencil pencil) : a_(a), pencil_(pencil), n_(a.dim()) {}

  DacgResult run(const std::vector<std::vector<double>> &locked, double tol,
                 std::size_t max_iters, std::uint64_t seed)
  {
    std::vector<double> x = random_vector(n_, seed);
    std::vector<double> kx(n_), mx(n_), kp(n_), mp(n_), p(n_, 0.0), g(n_);
    deflate(x, locked);
    normalize_and_refresh(x, kx, mx);

    double g_norm2_old = 0.0;
    for (std::size_t it = 0;; ++it)
    {
      const double q = dot(x, kx);
      for (std::size_t i = 0; i < n_; ++i)
      {
        g[i] = kx[i] - q * mx[i];
      }
      deflate_gradient(g, locked);
      const double g_norm2 = dot(g, g);
      if (relative_residual(g_norm2, q, x) <= tol)
      {
        deflate(x, locked);
        const double nx = norm2(x);
        scale(1.0 / nx, x);
        return {pencil_ == Pencil::Smallest ? q : 1.0 / q, std::move(x), it};
      }
      if (it >= max_iters)
      {
        throw ConvergenceError("DACG did not reach relative residual " + std::to_string(tol) +
                               " in " + std::to_string(max_iters) + " iterations");
      }

      // Fletcher-Reeves direction, restarted when it stops being a descent
      // direction or every n iterations.
      const double beta = (it == 0 || it % n_ == 0) ? 0.0 : g_norm2 / g_norm2_old;
      for (std::size_t i = 0; i < n_; ++i)
      {
        p[i] = -g[i] + beta * p[i];
      }
      deflate(p, locked);
      if (dot(p, g) >= 0.0)
      {
        for (std::size_t i = 0; i < n_; ++i)
        {
          p[i] = -g[i];
        }
        deflate(p, locked);
      }
      g_norm2_old = g_norm2;
      apply_pencil(p, kp, mp);

      const double step = line_search(q, dot(p, kx), dot(p, kp), dot(p, mx), dot(p, mp));
      for (std::size_t i = 0; i < n_; ++i)
      {
        x[i] += step * p[i];
        kx[i] += step * kp[i];
        mx[i] += step * mp[i];
      }
      if ((it + 1) % 50 == 0)
      {
        deflate(x, locked);
        normalize_and_refresh(x, kx, mx);
      }
      else
      {
        const double s = 1.0 / std::sqrt(dot(x, mx));
        scale(s, x);
        scale(s, kx);
        scale(s, mx);
      }
    }
  }

  std::size_t applications() const { return applications_; }

private:
  void apply_pencil(std::span<const double> v, std::span<double> kv, std::span<double> mv)
  {
    ++applications_;
    if (pencil_ == Pencil::Smallest)
    {
      a_.apply(v, kv);
      copy(v, mv);
    }
    else
    {
      copy(v, kv);
      a_.apply(v, mv);
    }
  }

  void normalize_and_refresh(std::vector<double> &x, std::vector<double> &kx,
                             std::vector<double> &mx)
  {
    apply_pencil(x, kx, mx);
    const double xmx = dot(x, mx);
    if (!(xmx > 0.0))
    {
      throw InputError("DACG: operator is not positive definite on the start vector");
    }
    const double s = 1.0 / std::sqrt(xmx);
    scale(s, x);
    scale(s, kx);
    scale(s, mx);
  }

  // Locked vectors are Euclidean-orthonormal eigenvectors of A, hence also
  // A-orthogonal, so plain projection keeps iterates M-orthogonal to them.
  static void deflate(std::vector<double> &v, const std::vector<std::vector<double>> &locked)
  {
    for (const auto &u : locked)
    {
      axpy(-dot(u, v), u, v);
    }
  }

  static void deflate_gradient(std::vector<double> &g,
                               const std::vector<std::vector<double>> &locked)
  {
    deflate(g, locked);
  }

  // ||Av - lambda v|| / (lambda ||v||) from the pencil gradient g = Kx - qMx.
  double relative_residual(double g_norm2, double q, const std::vector<double> &x) const
  {
    const double gn = std::sqrt(std::max(g_norm2, 0.0));
    const double xn = norm2(x);
    if (pencil_ == Pencil::Smallest)
    {
      return gn / (std::abs(q) * xn);
    }
    // g = x - q A x = -q (A x - x / q): ||Ax - lx|| / (l ||x||) = ||g|| / ||x||.
    return gn / xn;
  }

  // Minimizer of (a + 2bt + ct^2) / (1 + 2dt + et^2); the stationary points
  // solve (cd - be) t^2 + (c - ae) t + (b - ad) = 0.
  static double line_search(double a, double b, double c, double d, double e)
  {
    auto quotient = [&](double t) { return (a + 2 * b * t + c * t * t) / (1 + 2 * d * t + e * t * t); };
    const double qa = c * d - b * e;
    const double qb = c - a * e;
    const double qc = b - a * d;
    double best = 0.0;
    double best_val = a;
    auto consider = [&](double t)
    {
      if (!std::isfinite(t))
      {
        return;
      }
      const double v = quotient(t);
      if (std::isfinite(v) && v < best_val)
      {
        best_val = v;
        best = t;
      }
    };
    if (std::abs(qa) <= std::numeric_limits<double>::epsilon() * (std::abs(qb) + std::abs(qc)))
    {
      if (qb != 0.0)
      {
        consider(-qc / qb);
      }
      return best;
    }
    const double disc = qb * qb - 4 * qa * qc;
    if (disc < 0.0)
    {
      consider(-qb / (2 * qa));
      return best;
    }
    const double root = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
    if (root != 0.0)
    {
      consider(root / qa);
      consider(qc / root);
    }
    else
    {
      consider(0.0);
    }
    return best;
  }

  const LinearOperator &a_;
  Pencil pencil_;
  std::size_t n_;
  std::size_t applications_ = 0;
};

}  // namespace

void SpectralBounds::validate() const
{
  if (!(alpha > 0.0) || !(beta >= alpha) || !std::isfinite(beta))
  {
    throw InputError("spectral bounds must satisfy 0 < alpha <= beta (alpha=" +
                     std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  }
  if (!(xi >= 0.0) || !std::isfinite(xi))
  {
    throw InputError("xi must be non-negative");
  }
}

ExtremeEstimate estimate_extremes_detailed(const LinearOperator &a, const EigenOptions &opts)
{
  const std::size_t n = a.dim();
  if (n < 2)
  {
    throw InputError("eigenvalue estimation needs dimension >= 2");
  }
  if (!(opts.tol > 0.0 && opts.tol < 1.0))
  {
    throw InputError("tol_eig must lie in (0, 1)");
  }
  const std::size_t max_iters = opts.max_iters ? opts.max_iters : default_max_iters(n);

  ExtremeEstimate est;
  Dacg smallest(a, Pencil::Smallest);
  auto lo = smallest.run({}, opts.tol, max_iters, opts.seed);
  Dacg largest(a, Pencil::Largest);
  auto hi = largest.run({}, opts.tol, max_iters, opts.seed + 1);

  est.bounds.alpha = lo.lambda;
  est.bounds.beta = std::max(hi.lambda, lo.lambda);
  est.leftmost_vector = std::move(lo.x);
  est.iters_min = lo.iters;
  est.iters_max = hi.iters;
  est.operator_applications = smallest.applications() + largest.applications();
  return est;
}

SpectralBounds estimate_extremes(const LinearOperator &a, double tol_eig)
{
  EigenOptions opts;
  opts.tol = tol_eig;
  return estimate_extremes_detailed(a, opts).bounds;
}

SpectralBounds with_safety_margin(SpectralBounds bounds, double tol_eig)
{
  if (tol_eig >= 1e-3)
  {
    bounds.beta *= 1.01;
  }
  return bounds;
}

EigenPairSet leftmost_eigenpairs(const LinearOperator &a, std::size_t p, const EigenOptions &opts)
{
  const std::size_t n = a.dim();
  if (p == 0 || p >= n)
  {
    throw InputError("leftmost_eigenpairs: need 1 <= p < dim (p=" + std::to_string(p) +
                     ", dim=" + std::to_string(n) + ")");
  }
  if (!(opts.tol > 0.0 && opts.tol < 1.0))
  {
    throw InputError("tol_eig must lie in (0, 1)");
  }
  const std::size_t max_iters = opts.max_iters ? opts.max_iters : default_max_iters(n);
  EigenPairSet out;
  Dacg dacg(a, Pencil::Smallest);
  for (std::size_t j = 0; j < p; ++j)
  {
    auto r = dacg.run(out.vectors, opts.tol, max_iters, opts.seed + 17 * j);
    out.values.push_back(r.lambda);
    out.vectors.push_back(std::move(r.x));
  }
  // Deflated runs normally arrive in ascending order; sort in case a loose
  // tolerance let a pair converge out of order.
  std::vector<std::size_t> order(p);
  for (std::size_t i = 0; i < p; ++i)
  {
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return out.values[i] < out.values[j]; });
  EigenPairSet sorted;
  for (const auto i : order)
  {
    sorted.values.push_back(out.values[i]);
    sorted.vectors.push_back(std::move(out.vectors[i]));
  }
  return sorted;
}

EigenPairSet leftmost_eigenpairs(const LinearOperator &a, std::size_t p, double tol_eig)
{
  EigenOptions opts;
  opts.tol = tol_eig;
  return leftmost_eigenpairs(a, p, opts);
}

std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag,
                                            std::span<const double> offdiag)
{
  const std::size_t n = diag.size();
  if (n == 0)
  {
    return {};
  }
  if (offdiag.size() + 1 != n)
  {
    throw DimensionError("tridiagonal: off-diagonal must have n-1 entries");
  }
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < n; ++i)
  {
    const double r = (i > 0 ? std::abs(offdiag[i - 1]) : 0.0) + (i + 1 < n ? std::abs(offdiag[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  // Number of eigenvalues strictly less than x.
  auto count_below = [&](double x)
  {
    std::size_t count = 0;
    double d = 1.0;
    for (std::size_t i = 0; i < n; ++i)
    {
      const double off2 = i > 0 ? offdiag[i - 1] * offdiag[i - 1] : 0.0;
      d = diag[i] - x - (i > 0 ? off2 / d : 0.0);
      if (d == 0.0)
      {
        d = -std::numeric_limits<double>::epsilon() * (std::abs(x) + 1.0);
      }
      if (d < 0.0)
      {
        ++count;
      }
    }
    return count;
  };
  std::vector<double> eig(n);
  const double span = std::max(hi - lo, 1e-300);
  for (std::size_t k = 0; k < n; ++k)
  {
    double a = lo - 1e-12 * span;
    double b = hi + 1e-12 * span;
    for (int it = 0; it < 200 && b - a > 4 * std::numeric_limits<double>::epsilon() * (std::abs(a) + std::abs(b)) + 1e-300; ++it)
    {
      const double mid = 0.5 * (a + b);
      if (count_below(mid) > k)
      {
        b = mid;
      }
      else
      {
        a = mid;
      }
    }
    eig[k] = 0.5 * (a + b);
  }
  return eig;
}

RitzExtremes lanczos_extremes(const LinearOperator &a, std::size_t steps, std::uint64_t seed)
{
  const std::size_t n = a.dim();
  steps = std::min(std::max<std::size_t>(steps, 1), n);
  std::vector<std::vector<double>> basis;
  std::vector<double> alphas, betas;
  std::vector<double> v = random_vector(n, seed);
  scale(1.0 / norm2(v), v);
  std::vector<double> w(n);
  for (std::size_t j = 0; j < steps; ++j)
  {
    basis.push_back(v);
    a.apply(v, w);
    const double aj = dot(w, v);
    alphas.push_back(aj);
    // Full reorthogonalization (twice is enough).
    for (int pass = 0; pass < 2; ++pass)
    {
      for (const auto &u : basis)
      {
        axpy(-dot(u, w), u, w);
      }
    }
    const double bj = norm2(w);
    if (j + 1 == steps || bj <= 1e-14 * std::max(std::abs(aj), 1.0))
    {
      break;
    }
    betas.push_back(bj);
    for (std::size_t i = 0; i < n; ++i)
    {
      v[i] = w[i] / bj;
    }
  }
  betas.resize(alphas.size() - 1);
  const auto eig = tridiagonal_eigenvalues(alphas, betas);
  return {eig.front(), eig.back()};
}

}  // namespace polycg
