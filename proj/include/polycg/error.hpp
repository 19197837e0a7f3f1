// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polycg
{

// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Vector or operator sizes do not agree.
class DimensionError : public Error
{
public:
  using Error::Error;
};

// Malformed file, bad parameter, or violated input invariant.
class InputError : public Error
{
public:
  using Error::Error;
};

// An iterative method ran out of iterations.
class ConvergenceError : public Error
{
public:
  using Error::Error;
};

// Cholesky factorization hit a non-positive pivot.
class FactorizationError : public Error
{
public:
  FactorizationError(std::size_t block, const std::string &what)
    : Error(what), block_(block)
  {
  }
  std::size_t block() const { return block_; }

private:
  std::size_t block_;
};

// The DFN Schur complement is not SPD for the chosen regularization parameter.
class InadmissibleAlphaError : public Error
{
public:
  using Error::Error;
};

}  // namespace polycg
