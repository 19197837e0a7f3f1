// SPDX-License-Identifier: Apache-2.0

#include "polycg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "polycg/error.hpp"
#include "polycg/parallel.hpp"

namespace polycg
{

namespace
{

void check_size(std::size_t got, std::size_t want, const char *what)
{
  if (got != want)
  {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

// Row boundaries that split `weights` (a prefix-sum array of length n+1) into
// nstrips pieces of roughly equal weight.
StripPartition balance_prefix(std::span<const std::size_t> prefix, std::size_t nstrips)
{
  nstrips = std::max<std::size_t>(nstrips, 1);
  const std::size_t n = prefix.size() - 1;
  const std::size_t total = prefix.back();
  StripPartition part;
  part.strips.reserve(nstrips);
  std::size_t begin = 0;
  for (std::size_t s = 1; s <= nstrips; ++s)
  {
    std::size_t end = n;
    if (s < nstrips)
    {
      const std::size_t target = (total * s + nstrips - 1) / nstrips;
      const auto it = std::lower_bound(prefix.begin() + static_cast<std::ptrdiff_t>(begin),
                                       prefix.end(), target);
      end = std::min<std::size_t>(static_cast<std::size_t>(it - prefix.begin()), n);
      // With zero-weight rows the target may never be reached; fall back to
      // an even split of the remaining rows.
      if (total == 0)
      {
        end = n * s / nstrips;
      }
    }
    end = std::max(end, begin);
    part.strips.push_back({begin, end});
    begin = end;
  }
  return part;
}

}  // namespace

CsrMatrix::CsrMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> col_indices, std::vector<double> values)
  : nrows_(nrows), ncols_(ncols), row_offsets_(std::move(row_offsets)),
    col_indices_(std::move(col_indices)), values_(std::move(values))
{
  if (row_offsets_.size() != nrows_ + 1)
  {
    throw InputError("CSR: row_offsets must have nrows+1 entries");
  }
  if (row_offsets_.front() != 0 || row_offsets_.back() != values_.size() ||
      col_indices_.size() != values_.size())
  {
    throw InputError("CSR: inconsistent row_offsets / col_indices / values lengths");
  }
  for (std::size_t i = 0; i < nrows_; ++i)
  {
    if (row_offsets_[i] > row_offsets_[i + 1])
    {
      throw InputError("CSR: row_offsets decreasing at row " + std::to_string(i));
    }
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
    {
      if (col_indices_[k] >= ncols_)
      {
        throw InputError("CSR: column index out of range in row " + std::to_string(i));
      }
      if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
      {
        throw InputError("CSR: column indices not strictly increasing in row " +
                         std::to_string(i));
      }
      if (!std::isfinite(values_[k]))
      {
        throw InputError("CSR: non-finite value in row " + std::to_string(i));
      }
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t nrows, std::size_t ncols,
                                   std::vector<Triplet> entries, DuplicatePolicy duplicates)
{
  for (const auto &t : entries)
  {
    if (t.row >= nrows || t.col >= ncols)
    {
      throw InputError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                       ") out of bounds");
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet &a, const Triplet &b)
                   { return a.row != b.row ? a.row < b.row : a.col < b.col; });

  std::vector<std::size_t> offsets(nrows + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(entries.size());
  vals.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k)
  {
    const auto &t = entries[k];
    if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col)
    {
      if (duplicates == DuplicatePolicy::Reject)
      {
        throw InputError("duplicate entry (" + std::to_string(t.row) + ", " +
                         std::to_string(t.col) + ")");
      }
      vals.back() += t.value;
      continue;
    }
    cols.push_back(t.col);
    vals.push_back(t.value);
    ++offsets[t.row + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return CsrMatrix(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::identity(std::size_t n)
{
  std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> d)
{
  const std::size_t n = d.size();
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> cols(n);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  return CsrMatrix(n, n, std::move(offsets), std::move(cols), {d.begin(), d.end()});
}

double CsrMatrix::at(std::size_t i, std::size_t j) const
{
  const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  return (it != last && *it == j) ? values_[static_cast<std::size_t>(it - col_indices_.begin())]
                                  : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const
{
  std::vector<double> d(std::min(nrows_, ncols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    d[i] = at(i, i);
  }
  return d;
}

CsrMatrix CsrMatrix::transpose() const
{
  std::vector<std::size_t> offsets(ncols_ + 1, 0);
  for (const auto c : col_indices_)
  {
    ++offsets[c + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<std::size_t> cols(nnz());
  std::vector<double> vals(nnz());
  std::vector<std::size_t> next(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < nrows_; ++i)
  {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
    {
      const std::size_t dst = next[col_indices_[k]]++;
      cols[dst] = i;
      vals[dst] = values_[k];
    }
  }
  return CsrMatrix(ncols_, nrows_, std::move(offsets), std::move(cols), std::move(vals));
}

std::vector<Triplet> CsrMatrix::triplets() const
{
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t i = 0; i < nrows_; ++i)
  {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
    {
      out.push_back({i, col_indices_[k], values_[k]});
    }
  }
  return out;
}

BlockDiagMatrix::BlockDiagMatrix(std::vector<CsrMatrix> blocks) : blocks_(std::move(blocks))
{
  offsets_.reserve(blocks_.size() + 1);
  for (std::size_t i = 0; i < blocks_.size(); ++i)
  {
    if (blocks_[i].nrows() != blocks_[i].ncols())
    {
      throw InputError("block " + std::to_string(i) + " is not square");
    }
    offsets_.push_back(offsets_.back() + blocks_[i].nrows());
  }
}

BlockDiagMatrix BlockDiagMatrix::from_csr(const CsrMatrix &m, std::span<const std::size_t> sizes)
{
  if (m.nrows() != m.ncols())
  {
    throw InputError("block-diagonal matrix must be square");
  }
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (total != m.nrows())
  {
    throw InputError("block sizes sum to " + std::to_string(total) + " but matrix has " +
                     std::to_string(m.nrows()) + " rows");
  }
  std::vector<CsrMatrix> blocks;
  blocks.reserve(sizes.size());
  const auto offs = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  std::size_t base = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b)
  {
    const std::size_t n = sizes[b];
    if (n == 0)
    {
      throw InputError("block sizes must be positive");
    }
    std::vector<std::size_t> o(n + 1, 0);
    std::vector<std::size_t> c;
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i)
    {
      for (std::size_t k = offs[base + i]; k < offs[base + i + 1]; ++k)
      {
        if (cols[k] < base || cols[k] >= base + n)
        {
          throw InputError("entry (" + std::to_string(base + i) + ", " +
                           std::to_string(cols[k]) + ") lies outside diagonal block " +
                           std::to_string(b));
        }
        c.push_back(cols[k] - base);
        v.push_back(vals[k]);
      }
      o[i + 1] = c.size();
    }
    blocks.emplace_back(n, n, std::move(o), std::move(c), std::move(v));
    base += n;
  }
  return BlockDiagMatrix(std::move(blocks));
}

std::size_t BlockDiagMatrix::nnz() const
{
  std::size_t total = 0;
  for (const auto &b : blocks_)
  {
    total += b.nnz();
  }
  return total;
}

std::vector<std::size_t> BlockDiagMatrix::block_sizes() const
{
  std::vector<std::size_t> sizes;
  sizes.reserve(blocks_.size());
  for (const auto &b : blocks_)
  {
    sizes.push_back(b.nrows());
  }
  return sizes;
}

CsrMatrix BlockDiagMatrix::assemble() const
{
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  offsets.reserve(dim() + 1);
  cols.reserve(nnz());
  vals.reserve(nnz());
  for (std::size_t b = 0; b < blocks_.size(); ++b)
  {
    const auto &blk = blocks_[b];
    for (std::size_t i = 0; i < blk.nrows(); ++i)
    {
      for (std::size_t k = blk.row_offsets()[i]; k < blk.row_offsets()[i + 1]; ++k)
      {
        cols.push_back(blk.col_indices()[k] + offsets_[b]);
        vals.push_back(blk.values()[k]);
      }
      offsets.push_back(cols.size());
    }
  }
  return CsrMatrix(dim(), dim(), std::move(offsets), std::move(cols), std::move(vals));
}

StripPartition partition_rows(const CsrMatrix &m, std::size_t nstrips)
{
  // Weight each row by nnz + 1 so that empty rows still get distributed.
  std::vector<std::size_t> prefix(m.nrows() + 1);
  for (std::size_t i = 0; i <= m.nrows(); ++i)
  {
    prefix[i] = m.row_offsets()[i] + i;
  }
  return balance_prefix(prefix, nstrips);
}

StripPartition partition_blocks(const BlockDiagMatrix &m, std::size_t nstrips)
{
  std::vector<std::size_t> prefix(m.nblocks() + 1, 0);
  for (std::size_t b = 0; b < m.nblocks(); ++b)
  {
    prefix[b + 1] = prefix[b] + m.block(b).nnz() + m.block_size(b);
  }
  StripPartition by_block = balance_prefix(prefix, nstrips);
  StripPartition rows;
  rows.strips.reserve(by_block.nstrips());
  for (const auto &s : by_block.strips)
  {
    const std::size_t begin = s.begin < m.nblocks() ? m.block_offset(s.begin) : m.dim();
    const std::size_t end = s.end < m.nblocks() ? m.block_offset(s.end) : m.dim();
    rows.strips.push_back({begin, end});
  }
  return rows;
}

void spmv(const CsrMatrix &m, std::span<const double> x, std::span<double> y,
          const StripPartition &strips)
{
  check_size(x.size(), m.ncols(), "spmv input");
  check_size(y.size(), m.nrows(), "spmv output");
  const auto offs = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  auto row_range = [&](RowRange r)
  {
    for (std::size_t i = r.begin; i < r.end; ++i)
    {
      double sum = 0.0;
      for (std::size_t k = offs[i]; k < offs[i + 1]; ++k)
      {
        sum += vals[k] * x[cols[k]];
      }
      y[i] = sum;
    }
  };
  if (strips.nstrips() == 1 || m.nnz() < kParallelThreshold)
  {
    for (const auto &r : strips.strips)
    {
      row_range(r);
    }
    return;
  }
  parallel_for_tasks(strips.nstrips(), [&](std::size_t s) { row_range(strips.strips[s]); });
}

void spmv(const CsrMatrix &m, std::span<const double> x, std::span<double> y)
{
  const auto nthreads = static_cast<std::size_t>(num_threads());
  if (nthreads <= 1 || m.nnz() < kParallelThreshold)
  {
    spmv(m, x, y, StripPartition{{{0, m.nrows()}}});
    return;
  }
  spmv(m, x, y, partition_rows(m, nthreads));
}

std::vector<double> spmv(const CsrMatrix &m, std::span<const double> x)
{
  std::vector<double> y(m.nrows());
  spmv(m, x, std::span<double>(y));
  return y;
}

void spmv(const BlockDiagMatrix &m, std::span<const double> x, std::span<double> y)
{
  check_size(x.size(), m.dim(), "block spmv input");
  check_size(y.size(), m.dim(), "block spmv output");
  auto block_range = [&](std::size_t b)
  {
    const std::size_t off = m.block_offset(b);
    const std::size_t n = m.block_size(b);
    spmv(m.block(b), x.subspan(off, n), y.subspan(off, n), StripPartition{{{0, n}}});
  };
  const auto nthreads = static_cast<std::size_t>(num_threads());
  if (nthreads <= 1 || m.nnz() < kParallelThreshold)
  {
    for (std::size_t b = 0; b < m.nblocks(); ++b)
    {
      block_range(b);
    }
    return;
  }
  const StripPartition strips = partition_blocks(m, nthreads);
  // Strip boundaries are block boundaries, so each strip owns whole blocks.
  std::vector<std::size_t> first_block(strips.nstrips() + 1, m.nblocks());
  {
    std::size_t b = 0;
    for (std::size_t s = 0; s < strips.nstrips(); ++s)
    {
      while (b < m.nblocks() && m.block_offset(b) < strips.strips[s].begin)
      {
        ++b;
      }
      first_block[s] = b;
    }
  }
  parallel_for_tasks(strips.nstrips(),
                     [&](std::size_t s)
                     {
                       for (std::size_t b = first_block[s];
                            b < m.nblocks() && m.block_offset(b) < strips.strips[s].end; ++b)
                       {
                         block_range(b);
                       }
                     });
}

std::size_t default_transpose_strips(const CsrMatrix &m)
{
  return std::clamp<std::size_t>(m.nnz() / 32768, 1, 64);
}

void spmv_transpose(const CsrMatrix &m, std::span<const double> x, std::span<double> y)
{
  spmv_transpose(m, x, y, default_transpose_strips(m));
}

void spmv_transpose(const CsrMatrix &m, std::span<const double> x, std::span<double> y,
                    std::size_t nstrips)
{
  check_size(x.size(), m.nrows(), "spmv_transpose input");
  check_size(y.size(), m.ncols(), "spmv_transpose output");
  const auto offs = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  auto scatter = [&](RowRange r, std::span<double> out)
  {
    for (std::size_t i = r.begin; i < r.end; ++i)
    {
      const double xi = x[i];
      for (std::size_t k = offs[i]; k < offs[i + 1]; ++k)
      {
        out[cols[k]] += vals[k] * xi;
      }
    }
  };
  std::fill(y.begin(), y.end(), 0.0);
  if (nstrips <= 1)
  {
    scatter({0, m.nrows()}, y);
    return;
  }
  const StripPartition strips = partition_rows(m, nstrips);
  std::vector<std::vector<double>> partial(strips.nstrips(), std::vector<double>(m.ncols(), 0.0));
  parallel_for_tasks(strips.nstrips(), [&](std::size_t s) { scatter(strips.strips[s], partial[s]); });
  parallel_for(m.ncols(),
               [&](std::size_t j)
               {
                 double sum = 0.0;
                 for (const auto &p : partial)
                 {
                   sum += p[j];
                 }
                 y[j] = sum;
               });
}

double dot(std::span<const double> x, std::span<const double> y, CounterSet *counters)
{
  check_size(y.size(), x.size(), "dot");
  if (counters)
  {
    ++counters->ddot;
  }
  const std::size_t n = x.size();
  const std::size_t nchunks = std::max<std::size_t>((n + kDotChunk - 1) / kDotChunk, 1);
  std::vector<double> partial(nchunks, 0.0);
  auto chunk_sum = [&](std::size_t c)
  {
    const std::size_t begin = c * kDotChunk;
    const std::size_t end = std::min(n, begin + kDotChunk);
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i)
    {
      s += x[i] * y[i];
    }
    partial[c] = s;
  };
  if (nchunks >= 4)
  {
    parallel_for_tasks(nchunks, chunk_sum);
  }
  else
  {
    for (std::size_t c = 0; c < nchunks; ++c)
    {
      chunk_sum(c);
    }
  }
  // Pairwise tree over chunk sums.
  for (std::size_t width = 1; width < nchunks; width *= 2)
  {
    for (std::size_t i = 0; i + width < nchunks; i += 2 * width)
    {
      partial[i] += partial[i + width];
    }
  }
  return partial[0];
}

double norm2(std::span<const double> x, CounterSet *counters) { return std::sqrt(dot(x, x, counters)); }

void axpy(double a, std::span<const double> x, std::span<double> y, CounterSet *counters)
{
  check_size(y.size(), x.size(), "axpy");
  if (counters)
  {
    ++counters->axpy;
  }
  parallel_for(x.size(), [&](std::size_t i) { y[i] += a * x[i]; });
}

void axpby(double a, std::span<const double> x, double b, std::span<double> y,
           CounterSet *counters)
{
  check_size(y.size(), x.size(), "axpby");
  if (counters)
  {
    ++counters->axpy;
  }
  parallel_for(x.size(), [&](std::size_t i) { y[i] = a * x[i] + b * y[i]; });
}

void scale(double a, std::span<double> x)
{
  parallel_for(x.size(), [&](std::size_t i) { x[i] *= a; });
}

void copy(std::span<const double> x, std::span<double> y)
{
  check_size(y.size(), x.size(), "copy");
  std::copy(x.begin(), x.end(), y.begin());
}

}  // namespace polycg
