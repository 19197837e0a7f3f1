// SPDX-License-Identifier: Apache-2.0

#include "polycg/pcg.hpp"

#include <chrono>
#include <cmath>

#include "polycg/error.hpp"

namespace polycg
{

void SolveConfig::validate() const
{
  if (!(tol > 0.0 && tol < 1.0))
  {
    throw InputError("tol must lie in (0, 1)");
  }
  if (max_iters < 1)
  {
    throw InputError("max_iters must be at least 1");
  }
}

std::string to_string(SolveStatus s)
{
  switch (s)
  {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIterations:
      return "max_iterations";
    case SolveStatus::Breakdown:
      return "breakdown";
  }
  return "unknown";
}

SolveResult pcg_solve(const LinearOperator &a, const LinearOperator &prec,
                      std::span<const double> b, const SolveConfig &cfg, CounterSet &counters)
{
  cfg.validate();
  const std::size_t n = a.dim();
  if (b.size() != n || prec.dim() != n)
  {
    throw DimensionError("pcg: right-hand side / preconditioner dimension mismatch");
  }
  if (cfg.check_symmetry)
  {
    const auto x = random_vector(n, 7);
    const double anorm = norm2(a(x)) / norm2(x);
    if (probe_symmetry(a, 3) > 1e-12 * anorm)
    {
      throw InputError("pcg: operator failed the symmetry probe");
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const CounterSet before = counters;
  SolveResult out;
  auto &rep = out.report;
  out.x.assign(n, 0.0);

  auto finish = [&]()
  {
    rep.mvp = counters.mvp - before.mvp;
    rep.ddot = counters.ddot - before.ddot;
    rep.proj_dot = counters.proj_dot - before.proj_dot;
    rep.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const double bnorm = norm2(b, &counters);
  if (bnorm == 0.0)
  {
    rep.history.push_back(0.0);
    finish();
    return out;
  }

  std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
  std::vector<double> best_x;
  double best_relres = 1.0;
  prec.apply(r, z);
  double rz = dot(r, z, &counters);
  copy(z, p);
  rep.final_relres = 1.0;
  if (cfg.record_history)
  {
    rep.history.push_back(1.0);
  }
  if (!(rz > 0.0))
  {
    rep.status = SolveStatus::Breakdown;
    finish();
    return out;
  }

  rep.status = SolveStatus::MaxIterations;
  for (std::size_t k = 1; k <= cfg.max_iters; ++k)
  {
    a.apply(p, q);
    const double pq = dot(p, q, &counters);
    if (!(pq > 0.0))
    {
      rep.status = SolveStatus::Breakdown;
      break;
    }
    const double step = rz / pq;
    axpy(step, p, out.x, &counters);
    axpy(-step, q, r, &counters);
    const double relres = norm2(r, &counters) / bnorm;
    rep.iters = k;
    rep.final_relres = relres;
    if (cfg.record_history)
    {
      rep.history.push_back(relres);
    }
    if (relres <= cfg.tol)
    {
      rep.status = SolveStatus::Converged;
      break;
    }
    if (relres < best_relres)
    {
      best_relres = relres;
      best_x = out.x;
    }
    prec.apply(r, z);
    const double rz_new = dot(r, z, &counters);
    if (!(rz_new > 0.0))
    {
      rep.status = SolveStatus::Breakdown;
      break;
    }
    axpby(1.0, z, rz_new / rz, p, &counters);
    rz = rz_new;
  }
  if (rep.status != SolveStatus::Converged && !best_x.empty() && best_relres < rep.final_relres)
  {
    out.x = std::move(best_x);
    rep.final_relres = best_relres;
  }
  finish();
  return out;
}

}  // namespace polycg
