// SPDX-License-Identifier: Apache-2.0

#include "polycg/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "polycg/error.hpp"

namespace polycg
{

namespace
{

std::string lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::ifstream open_input(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InputError("cannot open " + path.string());
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw InputError("cannot write " + path.string());
  }
  out.precision(std::numeric_limits<double>::max_digits10);
  return out;
}

bool is_blank_or_comment(const std::string &line)
{
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '%' || line[first] == '#';
}

}  // namespace

CsrMatrix read_matrix_market(const std::filesystem::path &path)
{
  auto in = open_input(path);
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line))
  {
    throw InputError(where + ": empty file");
  }
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
  {
    throw InputError(where + ": missing %%MatrixMarket matrix banner");
  }
  if (lower(format) != "coordinate")
  {
    throw InputError(where + ": only coordinate format is supported");
  }
  field = lower(field);
  if (field != "real" && field != "integer" && field != "double")
  {
    throw InputError(where + ": unsupported field '" + field + "'");
  }
  symmetry = lower(symmetry);
  if (symmetry != "general" && symmetry != "symmetric")
  {
    throw InputError(where + ": unsupported symmetry '" + symmetry + "'");
  }
  const bool symmetric = symmetry == "symmetric";

  while (std::getline(in, line) && is_blank_or_comment(line))
  {
  }
  std::size_t nrows = 0, ncols = 0, nentries = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> nrows >> ncols >> nentries))
    {
      throw InputError(where + ": malformed size line");
    }
  }
  if (symmetric && nrows != ncols)
  {
    throw InputError(where + ": symmetric matrix must be square");
  }

  std::vector<Triplet> entries;
  entries.reserve(symmetric ? 2 * nentries : nentries);
  std::size_t read = 0;
  while (read < nentries && std::getline(in, line))
  {
    if (is_blank_or_comment(line))
    {
      continue;
    }
    std::istringstream row(line);
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(row >> i >> j >> v))
    {
      throw InputError(where + ": malformed entry line '" + line + "'");
    }
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > nrows ||
        static_cast<std::size_t>(j) > ncols)
    {
      throw InputError(where + ": entry (" + std::to_string(i) + ", " + std::to_string(j) +
                       ") out of bounds");
    }
    if (!std::isfinite(v))
    {
      throw InputError(where + ": non-finite value");
    }
    const auto r = static_cast<std::size_t>(i - 1);
    const auto c = static_cast<std::size_t>(j - 1);
    entries.push_back({r, c, v});
    if (symmetric && r != c)
    {
      entries.push_back({c, r, v});
    }
    ++read;
  }
  if (read != nentries)
  {
    throw InputError(where + ": expected " + std::to_string(nentries) + " entries, found " +
                     std::to_string(read));
  }
  try
  {
    return CsrMatrix::from_triplets(nrows, ncols, std::move(entries), DuplicatePolicy::Reject);
  }
  catch (const InputError &e)
  {
    throw InputError(where + ": " + e.what());
  }
}

void write_matrix_market(const CsrMatrix &m, const std::filesystem::path &path)
{
  auto out = open_output(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.nrows() << ' ' << m.ncols() << ' ' << m.nnz() << '\n';
  for (const auto &t : m.triplets())
  {
    out << t.row + 1 << ' ' << t.col + 1 << ' ' << t.value << '\n';
  }
  if (!out)
  {
    throw InputError("write failed: " + path.string());
  }
}

std::vector<std::size_t> read_block_structure(const std::filesystem::path &path,
                                              std::size_t expected_total)
{
  auto in = open_input(path);
  std::vector<std::size_t> sizes;
  std::string line;
  while (std::getline(in, line))
  {
    if (is_blank_or_comment(line))
    {
      continue;
    }
    std::istringstream row(line);
    long long v = 0;
    std::string rest;
    if (!(row >> v) || (row >> rest))
    {
      throw InputError(path.string() + ": malformed line '" + line + "'");
    }
    if (v <= 0)
    {
      throw InputError(path.string() + ": block sizes must be positive");
    }
    sizes.push_back(static_cast<std::size_t>(v));
  }
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (expected_total != 0 && total != expected_total)
  {
    throw InputError(path.string() + ": block sizes sum to " + std::to_string(total) +
                     ", matrix dimension is " + std::to_string(expected_total));
  }
  return sizes;
}

void write_block_structure(std::span<const std::size_t> sizes, const std::filesystem::path &path)
{
  auto out = open_output(path);
  for (const auto s : sizes)
  {
    out << s << '\n';
  }
}

std::vector<double> read_vector(const std::filesystem::path &path)
{
  auto in = open_input(path);
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line))
  {
    if (is_blank_or_comment(line))
    {
      continue;
    }
    std::istringstream row(line);
    double x = 0.0;
    if (!(row >> x) || !std::isfinite(x))
    {
      throw InputError(path.string() + ": malformed value '" + line + "'");
    }
    v.push_back(x);
  }
  return v;
}

void write_vector(std::span<const double> v, const std::filesystem::path &path)
{
  auto out = open_output(path);
  for (const double x : v)
  {
    out << x << '\n';
  }
}

}  // namespace polycg
