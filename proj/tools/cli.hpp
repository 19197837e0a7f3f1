// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "polycg/eigest.hpp"
#include "polycg/polyprec.hpp"

namespace polycg::cli
{

enum ExitCode : int
{
  kExitOk = 0,
  kExitFailure = 1,
  kExitBadInput = 2,
  kExitNotConverged = 3,
  kExitInadmissible = 4
};

struct RunConfig
{
  std::string command;  // solve | spectrum | sweep | generate | scale-bench

  // Problem source, exactly one for solve/sweep/scale-bench.
  std::size_t diag_test = 0;
  std::string matrix;
  std::string dfn;
  std::string rhs;
  std::string eigenvalues;  // spectrum only

  // Preconditioner.
  std::string variant = "auto";  // newton | chebyshev | auto
  std::optional<std::size_t> nlev;
  std::optional<std::size_t> degree;
  double xi = 0.0;
  std::string seed_prec = "auto";  // jacobi | none | auto (jacobi for --dfn)
  std::size_t lowrank = 0;
  std::optional<std::pair<double, double>> bounds;
  double tol_eig = 1e-3;
  std::size_t level = 0;  // spectrum: map through this Newton stage only

  double tol = 1e-10;
  std::size_t max_iters = 10000;
  int threads = 0;
  std::uint64_t rng_seed = 42;

  std::string output;   // JSON report, stdout when empty
  std::string csv;      // plot data
  std::string history;  // solve residual history

  // sweep
  std::optional<std::vector<double>> xis;
  std::optional<std::vector<std::size_t>> degrees;

  // generate
  std::size_t nf = 10;
  std::size_t avg_block = 30;
  double trace_density = 1.0;
  double alpha = 0.05;
  std::string out_dir;

  // scale-bench
  std::vector<int> thread_list{1, 2, 4, 8};
  std::size_t repeat = 1;
};

// Throws InputError.
void validate(const RunConfig &cfg);
nlohmann::json to_json(const RunConfig &cfg);

// "n=100000" or "100000".
std::size_t parse_diag_test(const std::string &text);
std::pair<double, double> parse_bounds(const std::string &text);
std::vector<double> parse_real_list(const std::string &text);
std::vector<std::size_t> parse_count_list(const std::string &text);

// Newton when the request names levels or a degree of the form 2^k - 1
// (variant auto), Chebyshev otherwise.
PolyCoeffs make_coeffs(const std::string &variant, std::optional<std::size_t> nlev,
                       std::optional<std::size_t> degree, const SpectralBounds &bounds);

// Relative paths land under $POLYCG_OUTPUT_DIR when it is set.
std::filesystem::path resolve_output(const std::string &path);

int run(const RunConfig &cfg, std::ostream &out, std::ostream &err);

// Parses the command line (without the program name) and runs it.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace polycg::cli
