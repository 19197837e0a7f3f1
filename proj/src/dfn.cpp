// SPDX-License-Identifier: Apache-2.0

#include "polycg/dfn.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>

#include "polycg/eigest.hpp"
#include "polycg/error.hpp"
#include "polycg/matrix_market.hpp"
#include "polycg/parallel.hpp"

namespace polycg
{

namespace
{

void check_symmetric(const CsrMatrix &m, const std::string &name)
{
  if (m.nrows() != m.ncols())
  {
    throw DimensionError(name + " is not square");
  }
  const auto rows = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (std::size_t i = 0; i < m.nrows(); ++i)
  {
    for (std::size_t k = rows[i]; k < rows[i + 1]; ++k)
    {
      const double v = vals[k];
      const double w = m.at(cols[k], i);
      if (std::abs(v - w) > 1e-12 * std::max(1.0, std::abs(v)))
      {
        throw InputError(name + " is not symmetric at (" + std::to_string(i) + ", " +
                         std::to_string(cols[k]) + ")");
      }
    }
  }
}

std::size_t block_of(std::span<const std::size_t> offsets, std::size_t row)
{
  const auto it = std::upper_bound(offsets.begin(), offsets.end(), row);
  return static_cast<std::size_t>(it - offsets.begin()) - 1;
}

}  // namespace

std::size_t DfnBlockSystem::u_block_offset(std::size_t i) const
{
  return std::accumulate(u_block_sizes.begin(), u_block_sizes.begin() + i, std::size_t{0});
}

void DfnBlockSystem::validate() const
{
  if (!(alpha > 0.0) || !std::isfinite(alpha))
  {
    throw InputError("alpha must be positive and finite");
  }
  if (a.block_sizes() != gh.block_sizes())
  {
    throw DimensionError("A and Gh must share their block structure");
  }
  if (u_block_sizes.size() != a.nblocks())
  {
    throw DimensionError("need one flux block size per fracture");
  }
  const std::size_t h = nh();
  const std::size_t u = gu.nrows();
  if (std::accumulate(u_block_sizes.begin(), u_block_sizes.end(), std::size_t{0}) != u)
  {
    throw DimensionError("flux block sizes do not add up to the size of Gu");
  }
  if (b.nrows() != h || b.ncols() != u || c.nrows() != h || c.ncols() != u)
  {
    throw DimensionError("B and C must be nh x nu");
  }
  if (q.size() != h)
  {
    throw DimensionError("q must have length nh");
  }
  for (std::size_t i = 0; i < a.nblocks(); ++i)
  {
    check_symmetric(a.block(i), "A block " + std::to_string(i));
    check_symmetric(gh.block(i), "Gh block " + std::to_string(i));
  }
  check_symmetric(gu, "Gu");

  std::vector<std::size_t> hoff(a.nblocks() + 1, 0), uoff(a.nblocks() + 1, 0);
  for (std::size_t i = 0; i < a.nblocks(); ++i)
  {
    hoff[i + 1] = hoff[i] + a.block_size(i);
    uoff[i + 1] = uoff[i] + u_block_sizes[i];
  }
  const auto rows = c.row_offsets();
  const auto cols = c.col_indices();
  const auto vals = c.values();
  for (std::size_t r = 0; r < h; ++r)
  {
    const std::size_t f = block_of(hoff, r);
    for (std::size_t k = rows[r]; k < rows[r + 1]; ++k)
    {
      const std::size_t j = cols[k];
      if (j < uoff[f] || j >= uoff[f + 1])
      {
        throw InputError("C entry (" + std::to_string(r) + ", " + std::to_string(j) +
                         ") lies outside the block of fracture " + std::to_string(f));
      }
      if (std::abs(b.at(r, j) - vals[k]) > 1e-12 * std::max(1.0, std::abs(vals[k])))
      {
        throw InputError("B - C is nonzero on the support of C at (" + std::to_string(r) + ", " +
                         std::to_string(j) + ")");
      }
    }
  }
}

BlockCholesky::Factor BlockCholesky::factor(const CsrMatrix &m, std::size_t block)
{
  const std::size_t n = m.nrows();
  const auto rows = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  Factor f;
  f.first.resize(n);
  f.start.resize(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k)
  {
    std::size_t lo = k;
    if (n > kDenseBlockLimit)
    {
      for (std::size_t e = rows[k]; e < rows[k + 1]; ++e)
      {
        lo = std::min(lo, cols[e]);
      }
    }
    else
    {
      lo = 0;
    }
    f.first[k] = lo;
    f.start[k + 1] = f.start[k] + (k - lo + 1);
  }
  f.vals.assign(f.start[n], 0.0);
  auto at = [&f](std::size_t i, std::size_t j) -> double &
  { return f.vals[f.start[i] + j - f.first[i]]; };
  for (std::size_t k = 0; k < n; ++k)
  {
    for (std::size_t e = rows[k]; e < rows[k + 1]; ++e)
    {
      if (cols[e] <= k)
      {
        at(k, cols[e]) = vals[e];
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k)
  {
    const std::size_t fk = f.first[k];
    for (std::size_t j = fk; j < k; ++j)
    {
      double s = at(k, j);
      for (std::size_t i = std::max(fk, f.first[j]); i < j; ++i)
      {
        s -= at(k, i) * at(j, i);
      }
      at(k, j) = s / at(j, j);
    }
    double d = at(k, k);
    for (std::size_t i = fk; i < k; ++i)
    {
      d -= at(k, i) * at(k, i);
    }
    if (!(d > 0.0))
    {
      throw FactorizationError(block, "Cholesky failed in block " + std::to_string(block) +
                                        " at row " + std::to_string(k) +
                                        ": matrix is not positive definite");
    }
    at(k, k) = std::sqrt(d);
  }
  return f;
}

BlockCholesky::BlockCholesky(const BlockDiagMatrix &a)
{
  const std::size_t nb = a.nblocks();
  factors_.resize(nb);
  offsets_.resize(nb + 1, 0);
  for (std::size_t i = 0; i < nb; ++i)
  {
    offsets_[i + 1] = offsets_[i] + a.block_size(i);
  }
  std::vector<std::exception_ptr> errors(nb);
  parallel_for_tasks(nb,
                     [&](std::size_t i)
                     {
                       try
                       {
                         factors_[i] = factor(a.block(i), i);
                       }
                       catch (...)
                       {
                         errors[i] = std::current_exception();
                       }
                     });
  for (const auto &e : errors)
  {
    if (e)
    {
      std::rethrow_exception(e);
    }
  }
}

std::size_t BlockCholesky::factor_nnz() const
{
  std::size_t s = 0;
  for (const auto &f : factors_)
  {
    s += f.vals.size();
  }
  return s;
}

void BlockCholesky::lower(const Factor &f, std::span<double> x)
{
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k)
  {
    const double *row = f.vals.data() + f.start[k];
    double s = x[k];
    for (std::size_t j = f.first[k]; j < k; ++j)
    {
      s -= row[j - f.first[k]] * x[j];
    }
    x[k] = s / row[k - f.first[k]];
  }
}

void BlockCholesky::upper(const Factor &f, std::span<double> x)
{
  for (std::size_t k = x.size(); k-- > 0;)
  {
    const double *row = f.vals.data() + f.start[k];
    x[k] /= row[k - f.first[k]];
    const double xk = x[k];
    for (std::size_t j = f.first[k]; j < k; ++j)
    {
      x[j] -= row[j - f.first[k]] * xk;
    }
  }
}

void BlockCholesky::solve_lower(std::span<double> x) const
{
  if (x.size() != dim())
  {
    throw DimensionError("block solve: vector length does not match");
  }
  parallel_for_tasks(nblocks(), [&](std::size_t i)
                     { lower(factors_[i], x.subspan(offsets_[i], offsets_[i + 1] - offsets_[i])); });
}

void BlockCholesky::solve_upper(std::span<double> x) const
{
  if (x.size() != dim())
  {
    throw DimensionError("block solve: vector length does not match");
  }
  parallel_for_tasks(nblocks(), [&](std::size_t i)
                     { upper(factors_[i], x.subspan(offsets_[i], offsets_[i + 1] - offsets_[i])); });
}

void BlockCholesky::solve(std::span<const double> b, std::span<double> x) const
{
  if (b.size() != dim() || x.size() != dim())
  {
    throw DimensionError("block solve: vector length does not match");
  }
  parallel_for_tasks(nblocks(),
                     [&](std::size_t i)
                     {
                       const std::size_t o = offsets_[i];
                       const std::size_t n = offsets_[i + 1] - o;
                       std::copy_n(b.begin() + o, n, x.begin() + o);
                       lower(factors_[i], x.subspan(o, n));
                       upper(factors_[i], x.subspan(o, n));
                     });
}

void BlockCholesky::solve_block(std::size_t i, std::span<double> x) const
{
  if (i >= nblocks() || x.size() != offsets_[i + 1] - offsets_[i])
  {
    throw DimensionError("block solve: bad block index or length");
  }
  lower(factors_[i], x);
  upper(factors_[i], x);
}

SchurOperator::SchurOperator(const DfnBlockSystem &sys, const BlockCholesky &chol)
  : sys_(&sys), chol_(&chol), bt_(sys.b.transpose()), ct_(sys.c.transpose())
{
  if (chol.dim() != sys.nh() || chol.nblocks() != sys.nfractures())
  {
    throw DimensionError("Cholesky factors do not match the DFN system");
  }
}

void SchurOperator::apply(std::span<const double> r, std::span<double> y) const
{
  const std::size_t nh = sys_->nh();
  const std::size_t nu = sys_->nu();
  if (r.size() != nu || y.size() != nu)
  {
    throw DimensionError("Schur operator: vector length does not match");
  }
  std::vector<double> v(nh), z(nh), t(nh), w(nh), tmp(nu);
  spmv(sys_->c, r, v);
  spmv(sys_->b, r, z);
  chol_->solve(v, t);
  chol_->solve(z, w);
  spmv(sys_->gu, r, y);
  spmv(bt_, t, tmp);
  axpy(-sys_->alpha, tmp, y);
  spmv(ct_, w, tmp);
  axpy(-sys_->alpha, tmp, y);
  spmv(sys_->gh, t, v);
  chol_->solve(v, w);
  spmv(ct_, w, tmp);
  axpy(1.0, tmp, y);
}

std::vector<double> SchurOperator::diagonal() const
{
  const DfnBlockSystem &s = *sys_;
  const std::size_t nf = s.nfractures();
  std::vector<std::size_t> uoff(nf + 1, 0);
  for (std::size_t i = 0; i < nf; ++i)
  {
    uoff[i + 1] = uoff[i] + s.u_block_sizes[i];
  }
  std::vector<double> d(s.nu());
  parallel_for_tasks(
    nf,
    [&](std::size_t i)
    {
      const std::size_t o = s.a.block_offset(i);
      const std::size_t n = s.a.block_size(i);
      const CsrMatrix &ghi = s.gh.block(i);
      std::vector<double> z(n), t(n);
      for (std::size_t j = uoff[i]; j < uoff[i + 1]; ++j)
      {
        std::fill(z.begin(), z.end(), 0.0);
        for (std::size_t k = ct_.row_offsets()[j]; k < ct_.row_offsets()[j + 1]; ++k)
        {
          z[ct_.col_indices()[k] - o] = ct_.values()[k];
        }
        chol_->solve_block(i, z);
        spmv(ghi, z, t);
        for (std::size_t k = bt_.row_offsets()[j]; k < bt_.row_offsets()[j + 1]; ++k)
        {
          const std::size_t row = bt_.col_indices()[k];
          if (row >= o && row < o + n)
          {
            t[row - o] -= 2.0 * s.alpha * bt_.values()[k];
          }
        }
        double acc = s.gu.at(j, j);
        for (std::size_t k = 0; k < n; ++k)
        {
          acc += z[k] * t[k];
        }
        d[j] = acc;
      }
    });
  for (std::size_t j = 0; j < d.size(); ++j)
  {
    if (!(d[j] > 0.0))
    {
      throw InadmissibleAlphaError("Schur complement diagonal entry " + std::to_string(j) +
                                   " is " + std::to_string(d[j]) + " for alpha = " +
                                   std::to_string(s.alpha) + "; choose a different alpha");
    }
  }
  return d;
}

std::vector<double> SchurOperator::rhs() const
{
  const std::size_t nh = sys_->nh();
  std::vector<double> t(nh), v(nh), w(nh), r(sys_->nu()), tmp(sys_->nu());
  chol_->solve(sys_->q, t);
  spmv(bt_, t, r);
  scale(sys_->alpha, r);
  spmv(sys_->gh, t, v);
  chol_->solve(v, w);
  spmv(ct_, w, tmp);
  axpy(-1.0, tmp, r);
  return r;
}

HeadSolution recover_heads(const DfnBlockSystem &sys, const BlockCholesky &chol,
                           std::span<const double> u)
{
  if (u.size() != sys.nu())
  {
    throw DimensionError("flux vector has the wrong length");
  }
  const std::size_t nh = sys.nh();
  HeadSolution out{std::vector<double>(nh), std::vector<double>(nh)};
  std::vector<double> v(nh), w(nh);
  spmv(sys.c, u, v);
  axpy(1.0, sys.q, v);
  chol.solve(v, out.h);
  spmv(sys.b, u, w);
  scale(sys.alpha, w);
  spmv(sys.gh, out.h, v);
  axpy(-1.0, v, w);
  chol.solve(w, out.p);
  return out;
}

DfnResidual block_residual(const DfnBlockSystem &sys, std::span<const double> h,
                           std::span<const double> p, std::span<const double> u)
{
  const std::size_t nh = sys.nh();
  const std::size_t nu = sys.nu();
  if (h.size() != nh || p.size() != nh || u.size() != nu)
  {
    throw DimensionError("block residual: vector lengths do not match the system");
  }
  std::vector<double> r1(nh), r2(nh), r3(nu), tmp(nh), tmpu(nu);

  spmv(sys.a, h, r1);
  spmv(sys.c, u, tmp);
  axpy(-1.0, tmp, r1);
  axpy(-1.0, sys.q, r1);

  spmv(sys.gh, h, r2);
  spmv(sys.a, p, tmp);
  axpy(1.0, tmp, r2);
  spmv(sys.b, u, tmp);
  axpy(-sys.alpha, tmp, r2);

  spmv(sys.gu, u, r3);
  spmv_transpose(sys.b, h, tmpu);
  axpy(-sys.alpha, tmpu, r3);
  spmv_transpose(sys.c, p, tmpu);
  axpy(-1.0, tmpu, r3);

  double qn = norm2(sys.q);
  if (qn == 0.0)
  {
    qn = 1.0;
  }
  DfnResidual res;
  res.head = norm2(r1) / qn;
  res.adjoint = norm2(r2) / qn;
  res.flux = norm2(r3) / qn;
  res.total = std::sqrt(res.head * res.head + res.adjoint * res.adjoint + res.flux * res.flux);
  return res;
}

namespace
{

struct Grid
{
  std::size_t nx;
  std::size_t ny;
};

// 5-point stencil on an nx x ny grid. With dirichlet the diagonal is always 4k
// (SPD); otherwise it is the graph Laplacian (one zero eigenvalue).
CsrMatrix grid_laplacian(const Grid &g, double k, bool dirichlet)
{
  std::vector<Triplet> t;
  for (std::size_t x = 0; x < g.nx; ++x)
  {
    for (std::size_t y = 0; y < g.ny; ++y)
    {
      const std::size_t i = x * g.ny + y;
      double diag = dirichlet ? 4.0 * k : 0.0;
      auto link = [&](std::size_t j)
      {
        t.push_back({i, j, -k});
        if (!dirichlet)
        {
          diag += k;
        }
      };
      if (x > 0)
      {
        link(i - g.ny);
      }
      if (x + 1 < g.nx)
      {
        link(i + g.ny);
      }
      if (y > 0)
      {
        link(i - 1);
      }
      if (y + 1 < g.ny)
      {
        link(i + 1);
      }
      t.push_back({i, i, diag});
    }
  }
  const std::size_t n = g.nx * g.ny;
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

DfnBlockSystem draw_network(const SyntheticParams &prm, std::uint64_t seed)
{
  constexpr double kCrossWeight = 0.5;
  constexpr double kFluxRegularization = 0.01;
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi)
  { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&rng](std::size_t lo, std::size_t hi)
  { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

  const std::size_t nf = prm.nf;
  const std::size_t lo = std::max<std::size_t>(4, prm.avg_block / 2);
  const std::size_t hi = std::max<std::size_t>(lo + 1, 3 * prm.avg_block / 2);
  std::vector<Grid> grids(nf);
  std::vector<std::size_t> hoff(nf + 1, 0);
  std::vector<CsrMatrix> ablocks, gblocks;
  for (std::size_t i = 0; i < nf; ++i)
  {
    const std::size_t n = pick(lo, hi);
    const auto nx = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    grids[i] = {nx, (n + nx - 1) / nx};
    hoff[i + 1] = hoff[i] + grids[i].nx * grids[i].ny;
    const double k = uniform(0.5, 2.0);
    ablocks.push_back(grid_laplacian(grids[i], k, true));
    gblocks.push_back(grid_laplacian(grids[i], k, false));
  }

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < nf; ++i)
  {
    pairs.insert({i, i + 1});
  }
  const std::size_t max_pairs = nf * (nf - 1) / 2;
  std::size_t extra = std::min(static_cast<std::size_t>(std::llround(prm.trace_density * nf)),
                               max_pairs - pairs.size());
  while (extra > 0)
  {
    std::size_t i = pick(0, nf - 1);
    std::size_t j = pick(0, nf - 1);
    if (i == j)
    {
      continue;
    }
    if (pairs.insert({std::min(i, j), std::max(i, j)}).second)
    {
      --extra;
    }
  }

  // Flux dofs are created per trace point, one on each side, then renumbered
  // so that every fracture owns a contiguous range.
  struct Coupling
  {
    std::size_t row;
    std::size_t dof;
    double value;
  };
  std::vector<std::size_t> owner;
  std::vector<Coupling> centries, eentries;
  std::vector<std::pair<std::size_t, std::size_t>> gupairs;
  for (const auto &[fi, fj] : pairs)
  {
    // Fewer trace points on small fractures keeps n^u well below n^h.
    const std::size_t small = std::min(hoff[fi + 1] - hoff[fi], hoff[fj + 1] - hoff[fj]);
    const std::size_t len = pick(1, std::clamp<std::size_t>((small - 1) / 4, 1, 3));
    auto line = [&](std::size_t f)
    {
      const Grid &g = grids[f];
      const std::size_t x = pick(0, g.nx - 1);
      const std::size_t y0 = pick(0, g.ny > len ? g.ny - len : 0);
      std::vector<std::size_t> nodes;
      for (std::size_t s = 0; s < len; ++s)
      {
        nodes.push_back(hoff[f] + x * g.ny + std::min(y0 + s, g.ny - 1));
      }
      return nodes;
    };
    const auto na = line(fi);
    const auto nb = line(fj);
    for (std::size_t s = 0; s < len; ++s)
    {
      const std::size_t ui = owner.size();
      owner.push_back(fi);
      const std::size_t uj = owner.size();
      owner.push_back(fj);
      const double w1 = uniform(0.5, 1.0);
      const double w2 = uniform(0.5, 1.0);
      centries.push_back({na[s], ui, w1});
      centries.push_back({nb[s], uj, w2});
      eentries.push_back({nb[s], ui, kCrossWeight * w1});
      eentries.push_back({na[s], uj, kCrossWeight * w2});
      gupairs.emplace_back(ui, uj);
    }
  }

  const std::size_t nu = owner.size();
  std::vector<std::size_t> order(nu);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return owner[x] < owner[y]; });
  std::vector<std::size_t> pos(nu);
  for (std::size_t k = 0; k < nu; ++k)
  {
    pos[order[k]] = k;
  }

  DfnBlockSystem sys;
  sys.u_block_sizes.assign(nf, 0);
  for (const std::size_t f : owner)
  {
    ++sys.u_block_sizes[f];
  }
  std::vector<Triplet> ct, bt, gt;
  for (const auto &e : centries)
  {
    ct.push_back({e.row, pos[e.dof], e.value});
    bt.push_back({e.row, pos[e.dof], e.value});
  }
  for (const auto &e : eentries)
  {
    bt.push_back({e.row, pos[e.dof], e.value});
  }
  for (const auto &[a, b] : gupairs)
  {
    const std::size_t x = pos[a];
    const std::size_t y = pos[b];
    gt.push_back({x, x, 1.0});
    gt.push_back({y, y, 1.0});
    gt.push_back({x, y, 1.0});
    gt.push_back({y, x, 1.0});
  }
  for (std::size_t k = 0; k < nu; ++k)
  {
    gt.push_back({k, k, kFluxRegularization});
  }
  const std::size_t nh = hoff[nf];
  sys.a = BlockDiagMatrix(std::move(ablocks));
  sys.gh = BlockDiagMatrix(std::move(gblocks));
  sys.c = CsrMatrix::from_triplets(nh, nu, std::move(ct), DuplicatePolicy::Sum);
  sys.b = CsrMatrix::from_triplets(nh, nu, std::move(bt), DuplicatePolicy::Sum);
  sys.gu = CsrMatrix::from_triplets(nu, nu, std::move(gt), DuplicatePolicy::Sum);
  sys.alpha = prm.alpha;
  std::normal_distribution<double> normal;
  sys.q.resize(nh);
  for (double &v : sys.q)
  {
    v = normal(rng);
  }
  return sys;
}

// Diagonal positivity, then a Lanczos probe on the Jacobi-scaled operator.
bool schur_is_spd(const DfnBlockSystem &sys)
{
  const BlockCholesky chol(sys.a);
  const SchurOperator op(sys, chol);
  std::vector<double> d;
  try
  {
    d = op.diagonal();
  }
  catch (const InadmissibleAlphaError &)
  {
    return false;
  }
  const ScaledOperator scaled(op, d);
  const auto ritz = lanczos_extremes(scaled, std::min<std::size_t>(sys.nu(), 80));
  return ritz.min > 1e-10 * ritz.max;
}

}  // namespace

DfnBlockSystem generate_synthetic(const SyntheticParams &params)
{
  if (params.nf < 2)
  {
    throw InputError("a fracture network needs at least two fractures");
  }
  if (params.avg_block < 1)
  {
    throw InputError("avg_block must be positive");
  }
  if (!(params.trace_density >= 0.0) || !std::isfinite(params.trace_density))
  {
    throw InputError("trace_density must be a non-negative number");
  }
  if (!(params.alpha > 0.0) || !std::isfinite(params.alpha))
  {
    throw InputError("alpha must be positive and finite");
  }
  constexpr int kRetries = 5;
  for (int attempt = 0; attempt <= kRetries; ++attempt)
  {
    DfnBlockSystem sys = draw_network(params, params.seed + static_cast<std::uint64_t>(attempt));
    if (schur_is_spd(sys))
    {
      return sys;
    }
  }
  throw InadmissibleAlphaError("no SPD Schur complement for alpha = " +
                               std::to_string(params.alpha) + " after " +
                               std::to_string(kRetries) + " retries; choose a different alpha");
}

void save_dfn(const DfnBlockSystem &sys, const std::filesystem::path &dir)
{
  sys.validate();
  std::filesystem::create_directories(dir);
  write_matrix_market(sys.a.assemble(), dir / "A.mtx");
  write_matrix_market(sys.gh.assemble(), dir / "Gh.mtx");
  write_matrix_market(sys.gu, dir / "Gu.mtx");
  write_matrix_market(sys.b, dir / "B.mtx");
  write_matrix_market(sys.c, dir / "C.mtx");
  const auto sizes = sys.a.block_sizes();
  write_block_structure(sizes, dir / "A.blk");
  write_block_structure(sys.u_block_sizes, dir / "C.blk");
  const double alpha[] = {sys.alpha};
  write_vector(alpha, dir / "alpha.txt");
  write_vector(sys.q, dir / "q.txt");
}

DfnBlockSystem load_dfn(const std::filesystem::path &dir)
{
  if (!std::filesystem::is_directory(dir))
  {
    throw InputError("DFN directory not found: " + dir.string());
  }
  DfnBlockSystem sys;
  const CsrMatrix a = read_matrix_market(dir / "A.mtx");
  const auto sizes = read_block_structure(dir / "A.blk", a.nrows());
  sys.a = BlockDiagMatrix::from_csr(a, sizes);
  sys.gh = BlockDiagMatrix::from_csr(read_matrix_market(dir / "Gh.mtx"), sizes);
  sys.gu = read_matrix_market(dir / "Gu.mtx");
  sys.b = read_matrix_market(dir / "B.mtx");
  sys.c = read_matrix_market(dir / "C.mtx");
  sys.u_block_sizes = read_block_structure(dir / "C.blk", sys.c.ncols());
  const auto alpha = read_vector(dir / "alpha.txt");
  if (alpha.size() != 1)
  {
    throw InputError("alpha.txt must hold exactly one value");
  }
  sys.alpha = alpha[0];
  sys.q = read_vector(dir / "q.txt");
  sys.validate();
  return sys;
}

}  // namespace polycg
