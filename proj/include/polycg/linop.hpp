// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polycg/sparse.hpp"

namespace polycg
{

//
// Matrix-free linear operator. Implementations are immutable after
// construction; apply() may be called concurrently.
//
class LinearOperator
{
public:
  virtual ~LinearOperator() = default;

  virtual std::size_t dim() const = 0;
  // y = Op x. x and y have length dim() and do not alias.
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  virtual bool symmetric() const { return true; }

  std::vector<double> operator()(std::span<const double> x) const;
};

class IdentityOperator final : public LinearOperator
{
public:
  explicit IdentityOperator(std::size_t n) : n_(n) {}
  std::size_t dim() const override { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const override;

private:
  std::size_t n_;
};

// Square CSR matrix viewed as an operator (not owned).
class MatrixOperator final : public LinearOperator
{
public:
  explicit MatrixOperator(const CsrMatrix &m, bool symmetric = true);
  std::size_t dim() const override { return m_->nrows(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  bool symmetric() const override { return symmetric_; }
  const CsrMatrix &matrix() const { return *m_; }

private:
  const CsrMatrix *m_;
  bool symmetric_;
};

// Wraps a callable; used for tests and ad hoc operators.
class FunctionOperator final : public LinearOperator
{
public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionOperator(std::size_t n, Fn fn, bool symmetric = true)
    : n_(n), fn_(std::move(fn)), symmetric_(symmetric)
  {
  }
  std::size_t dim() const override { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const override { fn_(x, y); }
  bool symmetric() const override { return symmetric_; }

private:
  std::size_t n_;
  Fn fn_;
  bool symmetric_;
};

// y = diag(d) x, e.g. the Jacobi preconditioner with d = 1/diag(A).
class DiagonalOperator final : public LinearOperator
{
public:
  explicit DiagonalOperator(std::vector<double> d) : d_(std::move(d)) {}
  std::size_t dim() const override { return d_.size(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  std::span<const double> entries() const { return d_; }

private:
  std::vector<double> d_;
};

// Forwards to an inner operator and counts each application as one MVP.
class CountedOperator final : public LinearOperator
{
public:
  CountedOperator(const LinearOperator &inner, CounterSet &counters)
    : inner_(&inner), counters_(&counters)
  {
  }
  std::size_t dim() const override { return inner_->dim(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  bool symmetric() const override { return inner_->symmetric(); }

private:
  const LinearOperator *inner_;
  CounterSet *counters_;
};

//
// Operator composed with a factored diagonal seed W = diag(1/sqrt(d)):
// apply(x) = W A W x. With d = diag(A) this is the symmetric Jacobi scaling.
// The inner operator is not owned.
//
class ScaledOperator final : public LinearOperator
{
public:
  ScaledOperator(const LinearOperator &inner, std::span<const double> d);

  std::size_t dim() const override { return inner_->dim(); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  bool symmetric() const override { return inner_->symmetric(); }

  // Per-coordinate factor W_ii = 1/sqrt(d_i).
  std::span<const double> weights() const { return w_; }
  // r_hat = W r (scaled right-hand side).
  std::vector<double> scale_rhs(std::span<const double> r) const;
  // x = W x_hat (solution of the original system).
  std::vector<double> unscale_solution(std::span<const double> x_hat) const;

private:
  const LinearOperator *inner_;
  std::vector<double> w_;
};

// Throws InputError if some d_i <= 0 or the length is wrong.
ScaledOperator make_scaled_operator(const LinearOperator &a, std::span<const double> d);

// Max over `trials` random unit pairs (x, y) of |<Ax, y> - <x, Ay>|.
double probe_symmetry(const LinearOperator &a, std::size_t trials, std::uint64_t seed = 2024);

// Fixed-seed standard normal vector.
std::vector<double> random_vector(std::size_t n, std::uint64_t seed);

}  // namespace polycg
