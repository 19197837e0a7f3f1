// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "polycg/sparse.hpp"

namespace polycg
{

// Coordinate-format MatrixMarket, `real` or `integer` field, `general` or
// `symmetric` symmetry. Symmetric files are expanded to full storage; duplicate
// entries (after expansion) are rejected.
CsrMatrix read_matrix_market(const std::filesystem::path &path);

// Writes a `general` coordinate file with round-trip precision.
void write_matrix_market(const CsrMatrix &m, const std::filesystem::path &path);

// Block-structure sidecar: one positive integer per line. When expected_total
// is nonzero the sizes must sum to it.
std::vector<std::size_t> read_block_structure(const std::filesystem::path &path,
                                              std::size_t expected_total = 0);
void write_block_structure(std::span<const std::size_t> sizes, const std::filesystem::path &path);

// Plain vector file: one real per line, '%' or '#' comment lines allowed.
std::vector<double> read_vector(const std::filesystem::path &path);
void write_vector(std::span<const double> v, const std::filesystem::path &path);

}  // namespace polycg
