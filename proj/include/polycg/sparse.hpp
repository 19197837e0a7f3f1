// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace polycg
{

// Operation counters. mvp counts applications of the system operator, ddot
// global inner products (norms included), proj_dot the small projections of a
// low-rank correction. Kernels update them once per call, on the calling thread.
struct CounterSet
{
  std::uint64_t mvp = 0;
  std::uint64_t ddot = 0;
  std::uint64_t axpy = 0;
  std::uint64_t proj_dot = 0;
};

struct Triplet
{
  std::size_t row;
  std::size_t col;
  double value;
};

enum class DuplicatePolicy
{
  Reject,
  Sum
};

//
// Compressed sparse row matrix. Immutable after construction; column indices
// are strictly increasing within each row and every stored value is finite.
//
class CsrMatrix
{
public:
  CsrMatrix() : row_offsets_(1, 0) {}

  // Validates the CSR invariants and throws InputError on violation.
  CsrMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> col_indices, std::vector<double> values);

  // Entries may come in any order. Explicit zeros are kept.
  static CsrMatrix from_triplets(std::size_t nrows, std::size_t ncols,
                                 std::vector<Triplet> entries,
                                 DuplicatePolicy duplicates = DuplicatePolicy::Reject);
  static CsrMatrix identity(std::size_t n);
  static CsrMatrix diagonal(std::span<const double> d);

  std::size_t nrows() const { return nrows_; }
  std::size_t ncols() const { return ncols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  // Stored entry (i, j), zero when absent.
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;
  CsrMatrix transpose() const;
  std::vector<Triplet> triplets() const;

  friend bool operator==(const CsrMatrix &, const CsrMatrix &) = default;

private:
  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

//
// Block-diagonal matrix made of square CSR blocks.
//
class BlockDiagMatrix
{
public:
  BlockDiagMatrix() = default;
  explicit BlockDiagMatrix(std::vector<CsrMatrix> blocks);

  // Splits an assembled matrix along the given block sizes. Entries outside the
  // diagonal blocks are an error.
  static BlockDiagMatrix from_csr(const CsrMatrix &m, std::span<const std::size_t> block_sizes);

  std::size_t dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t nblocks() const { return blocks_.size(); }
  std::size_t nnz() const;
  const CsrMatrix &block(std::size_t i) const { return blocks_[i]; }
  std::size_t block_offset(std::size_t i) const { return offsets_[i]; }
  std::size_t block_size(std::size_t i) const { return blocks_[i].nrows(); }
  std::vector<std::size_t> block_sizes() const;

  CsrMatrix assemble() const;

private:
  std::vector<CsrMatrix> blocks_;
  std::vector<std::size_t> offsets_{0};
};

struct RowRange
{
  std::size_t begin;
  std::size_t end;
};

//
// Horizontal strips of consecutive rows. Strips are disjoint, ordered and cover
// every row; for block-diagonal matrices strip boundaries fall on block
// boundaries. Some strips may be empty when there are fewer rows than strips.
//
struct StripPartition
{
  std::vector<RowRange> strips;

  std::size_t nstrips() const { return strips.size(); }
};

// Greedy balancing by nonzero count.
StripPartition partition_rows(const CsrMatrix &m, std::size_t nstrips);
StripPartition partition_blocks(const BlockDiagMatrix &m, std::size_t nstrips);

// y = M x. Each row is reduced sequentially, so the result is bitwise identical
// for every strip count.
void spmv(const CsrMatrix &m, std::span<const double> x, std::span<double> y);
void spmv(const CsrMatrix &m, std::span<const double> x, std::span<double> y,
          const StripPartition &strips);
void spmv(const BlockDiagMatrix &m, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const CsrMatrix &m, std::span<const double> x);

// y = M^T x without forming the transpose. Strips scatter into private
// buffers that are merged in strip order; the default strip count depends only
// on the matrix, so results do not change with the thread count.
void spmv_transpose(const CsrMatrix &m, std::span<const double> x, std::span<double> y);
void spmv_transpose(const CsrMatrix &m, std::span<const double> x, std::span<double> y,
                    std::size_t nstrips);
std::size_t default_transpose_strips(const CsrMatrix &m);

// Inner product with a fixed reduction tree: chunks of kDotChunk entries are
// summed sequentially, chunk sums are combined pairwise. Increments
// counters->ddot once.
inline constexpr std::size_t kDotChunk = 4096;
double dot(std::span<const double> x, std::span<const double> y, CounterSet *counters = nullptr);
double norm2(std::span<const double> x, CounterSet *counters = nullptr);

// y += a x
void axpy(double a, std::span<const double> x, std::span<double> y, CounterSet *counters = nullptr);
// y = a x + b y
void axpby(double a, std::span<const double> x, double b, std::span<double> y,
           CounterSet *counters = nullptr);
void scale(double a, std::span<double> x);
void copy(std::span<const double> x, std::span<double> y);

}  // namespace polycg
