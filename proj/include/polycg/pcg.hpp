// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "polycg/linop.hpp"

namespace polycg
{

struct SolveConfig
{
  // Stop when ||b - A x|| / ||b|| <= tol (unpreconditioned residual).
  double tol = 1e-10;
  std::size_t max_iters = 10000;
  bool record_history = true;
  // Probe A for symmetry before iterating; throws InputError if it fails.
  bool check_symmetry = false;

  void validate() const;
};

enum class SolveStatus
{
  Converged,
  MaxIterations,
  // p'Ap <= 0 or r'Pr <= 0: the operator or the preconditioner is not SPD.
  Breakdown
};

std::string to_string(SolveStatus s);

struct SolveReport
{
  SolveStatus status = SolveStatus::Converged;
  std::size_t iters = 0;
  std::size_t mvp = 0;
  std::size_t ddot = 0;
  std::size_t proj_dot = 0;
  double final_relres = 0.0;
  std::vector<double> history;  // history[k] = relres after k iterations
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;

  bool converged() const { return status == SolveStatus::Converged; }
};

struct SolveResult
{
  std::vector<double> x;
  SolveReport report;
};

//
// Preconditioned conjugate gradient from x0 = 0. One application of `a` and
// one of `prec` per iteration (plus the initial preconditioning), three inner
// products per iteration plus one. Inner products are counted in `counters`;
// MVPs are whatever `a` and `prec` record there (wrap the system operator in a
// CountedOperator and build the preconditioner on that wrapper).
//
// When the iteration limit is hit the iterate with the smallest residual is
// returned with status MaxIterations.
//
SolveResult pcg_solve(const LinearOperator &a, const LinearOperator &prec,
                      std::span<const double> b, const SolveConfig &cfg, CounterSet &counters);

}  // namespace polycg
