// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "polycg/linop.hpp"
#include "polycg/sparse.hpp"

namespace polycg
{

//
// Block data of a discrete fracture network flow problem in the unknowns
// (h, p, u): hydraulic head, adjoint head, interface flux.
//
//   a, gh   nh x nh, one square block per fracture (a SPD, gh SPSD)
//   gu      nu x nu, SPSD
//   c       nh x nu, block i spans the rows of fracture i and the
//           u_block_sizes[i] flux columns owned by that fracture
//   b       nh x nu, b = c + e where e couples fractures sharing a trace and
//           is zero wherever c has a structural nonzero
//
struct DfnBlockSystem
{
  BlockDiagMatrix a;
  BlockDiagMatrix gh;
  CsrMatrix gu;
  CsrMatrix b;
  CsrMatrix c;
  std::vector<std::size_t> u_block_sizes;
  double alpha = 0.1;
  std::vector<double> q;

  std::size_t nh() const { return a.dim(); }
  std::size_t nu() const { return gu.nrows(); }
  std::size_t nfractures() const { return a.nblocks(); }
  std::size_t u_block_offset(std::size_t i) const;

  // Dimensions, block layout, symmetry of a, gh, gu, and the c/b overlap rule.
  // Throws DimensionError or InputError.
  void validate() const;
};

// Blocks up to this size are factored dense, larger ones in envelope storage.
inline constexpr std::size_t kDenseBlockLimit = 64;

//
// Cholesky factors of every diagonal block, A_i = L_i L_i^T. Blocks are
// factored and solved independently, in parallel.
//
class BlockCholesky
{
public:
  // Throws FactorizationError naming the first block with a non-positive pivot.
  explicit BlockCholesky(const BlockDiagMatrix &a);

  std::size_t dim() const { return offsets_.back(); }
  std::size_t nblocks() const { return factors_.size(); }
  std::size_t factor_nnz() const;

  // In place, x <- L^{-1} x and x <- L^{-T} x over all blocks.
  void solve_lower(std::span<double> x) const;
  void solve_upper(std::span<double> x) const;
  // x = A^{-1} b.
  void solve(std::span<const double> b, std::span<double> x) const;
  // In place A_i^{-1} on a vector of block i's length.
  void solve_block(std::size_t i, std::span<double> x) const;

private:
  // Row k of L holds columns first[k] .. k at vals[start[k] ..].
  struct Factor
  {
    std::vector<std::size_t> first;
    std::vector<std::size_t> start;
    std::vector<double> vals;
  };

  static Factor factor(const CsrMatrix &m, std::size_t block);
  static void lower(const Factor &f, std::span<double> x);
  static void upper(const Factor &f, std::span<double> x);

  std::vector<Factor> factors_;
  std::vector<std::size_t> offsets_{0};
};

//
// Matrix-free Schur complement on the flux unknowns
//   S_u = Gu - alpha B^T A^{-1} C - alpha C^T A^{-1} B + C^T A^{-1} Gh A^{-1} C.
// Each application costs three block solves. Holds references to the system
// and the factors.
//
class SchurOperator final : public LinearOperator
{
public:
  SchurOperator(const DfnBlockSystem &sys, const BlockCholesky &chol);

  std::size_t dim() const override { return sys_->nu(); }
  void apply(std::span<const double> r, std::span<double> y) const override;

  // Exact diagonal of S_u, one block solve per flux column. Throws
  // InadmissibleAlphaError when an entry is not positive.
  std::vector<double> diagonal() const;

  // Right-hand side alpha B^T A^{-1} q - C^T A^{-1} Gh A^{-1} q.
  std::vector<double> rhs() const;

private:
  const DfnBlockSystem *sys_;
  const BlockCholesky *chol_;
  CsrMatrix bt_;
  CsrMatrix ct_;
};

struct HeadSolution
{
  std::vector<double> h;
  std::vector<double> p;
};

// h = A^{-1}(q + C u), p = A^{-1}(alpha B u - Gh h).
HeadSolution recover_heads(const DfnBlockSystem &sys, const BlockCholesky &chol,
                           std::span<const double> u);

//
// Residuals of the full system
//   A h             - C u       = q
//   Gh h + A p - alpha B u      = 0
//   -alpha B^T h - C^T p + Gu u = 0
// each row block measured against ||q||.
//
struct DfnResidual
{
  double head = 0.0;
  double adjoint = 0.0;
  double flux = 0.0;
  double total = 0.0;
};

DfnResidual block_residual(const DfnBlockSystem &sys, std::span<const double> h,
                           std::span<const double> p, std::span<const double> u);

struct SyntheticParams
{
  std::size_t nf = 10;
  std::size_t avg_block = 30;
  // Extra random traces per fracture on top of the chain that keeps the
  // network connected.
  double trace_density = 1.0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
};

// Random network with grid-Laplacian fracture blocks. The Schur complement is
// probed for definiteness; a failing draw is retried with the next seed up to
// five times before InadmissibleAlphaError is thrown.
DfnBlockSystem generate_synthetic(const SyntheticParams &params);

// Directory layout: A.mtx Gh.mtx Gu.mtx B.mtx C.mtx A.blk C.blk alpha.txt q.txt.
// A.blk holds the fracture block sizes (shared by Gh), C.blk the flux column
// counts per fracture.
void save_dfn(const DfnBlockSystem &sys, const std::filesystem::path &dir);
DfnBlockSystem load_dfn(const std::filesystem::path &dir);

}  // namespace polycg
