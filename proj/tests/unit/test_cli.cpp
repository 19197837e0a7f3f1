// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "polycg/error.hpp"

using namespace polycg;
using namespace polycg::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

struct Run
{
  int code;
  std::string out;
  std::string err;
  json report() const { return json::parse(out); }
};

Run invoke(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name)
{
  const auto dir = fs::temp_directory_path() / "polycg_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p)
{
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void strip_timings(json &j)
{
  j.erase("timings");
  if (j.contains("rows"))
  {
    for (auto &r : j["rows"])
    {
      r.erase("solve_seconds");
    }
  }
}

}  // namespace

TEST_SUITE("cli")
{
  TEST_CASE("argument parsing helpers")
  {
    CHECK(parse_diag_test("n=100000") == 100000);
    CHECK(parse_diag_test("17") == 17);
    CHECK_THROWS_AS(parse_diag_test("n=0"), InputError);
    CHECK_THROWS_AS(parse_diag_test("n=-3"), InputError);
    CHECK_THROWS_AS(parse_diag_test("m=4"), InputError);

    CHECK(parse_bounds("0.5,20") == std::pair<double, double>{0.5, 20.0});
    CHECK_THROWS_AS(parse_bounds("1"), InputError);
    CHECK_THROWS_AS(parse_bounds("1,x"), InputError);

    CHECK(parse_real_list("0, 1e-6,1e-2") == std::vector<double>{0.0, 1e-6, 1e-2});
    CHECK(parse_real_list("").empty());
    CHECK(parse_count_list("3,7,15") == std::vector<std::size_t>{3, 7, 15});
    CHECK_THROWS_AS(parse_count_list("3,,7"), InputError);
    CHECK_THROWS_AS(parse_count_list("3,"), InputError);
  }

  TEST_CASE("variant selection")
  {
    const SpectralBounds b{1.0, 100.0, 0.0};
    CHECK(std::holds_alternative<NewtonCoeffs>(make_coeffs("auto", 6, std::nullopt, b)));
    CHECK(std::holds_alternative<NewtonCoeffs>(make_coeffs("auto", std::nullopt, 63, b)));
    CHECK(std::holds_alternative<ChebCoeffs>(make_coeffs("auto", std::nullopt, 10, b)));
    CHECK(std::holds_alternative<ChebCoeffs>(make_coeffs("chebyshev", 3, std::nullopt, b)));
    CHECK(poly_degree(make_coeffs("chebyshev", 3, std::nullopt, b)) == 7);
    CHECK(poly_degree(make_coeffs("auto", std::nullopt, std::nullopt, b)) == 0);
    CHECK_THROWS_AS(make_coeffs("newton", std::nullopt, 10, b), InputError);
    CHECK_THROWS_AS(make_coeffs("auto", 3, 8, b), InputError);
    CHECK_THROWS_AS(make_coeffs("auto", 11, std::nullopt, b), InputError);
    CHECK_THROWS_AS(make_coeffs("legendre", 1, std::nullopt, b), InputError);
  }

  TEST_CASE("configuration validation")
  {
    RunConfig c;
    c.command = "solve";
    CHECK_THROWS_AS(validate(c), InputError);
    c.diag_test = 10;
    CHECK_NOTHROW(validate(c));
    c.matrix = "a.mtx";
    CHECK_THROWS_AS(validate(c), InputError);
    c.matrix.clear();
    c.tol = 0.0;
    CHECK_THROWS_AS(validate(c), InputError);
    c.tol = 1e-8;
    c.bounds = std::pair{2.0, 1.0};
    CHECK_THROWS_AS(validate(c), InputError);
    c.bounds.reset();
    c.xi = -1e-3;
    CHECK_THROWS_AS(validate(c), InputError);
    c.xi = 0.0;
    c.command = "refine";
    CHECK_THROWS_AS(validate(c), InputError);
    c.command = "generate";
    CHECK_THROWS_AS(validate(c), InputError);
  }

  TEST_CASE("identity matrix with degree 0 takes one iteration")
  {
    const auto dir = scratch("identity");
    std::ofstream(dir / "I.mtx") << "%%MatrixMarket matrix coordinate real symmetric\n"
                                    "4 4 4\n1 1 1\n2 2 1\n3 3 1\n4 4 1\n";
    const auto r = invoke({"solve", "--matrix", (dir / "I.mtx").string(), "--degree", "0"});
    REQUIRE(r.code == kExitOk);
    const auto j = r.report();
    CHECK(j["result"]["iters"] == 1);
    CHECK(j["result"]["status"] == "converged");
    CHECK(j["config"]["degree"] == 0);
    CHECK(j["version"].get<std::string>().size() > 0);
  }

  TEST_CASE("diagonal test through the command line")
  {
    const auto r = invoke({"solve", "--diag-test", "n=20000", "--nlev", "4", "--xi", "1e-4",
                        "--bounds", "1,20000"});
    REQUIRE(r.code == kExitOk);
    const auto j = r.report();
    const std::size_t iters = j["result"]["iters"];
    CHECK(j["result"]["mvp"].get<std::size_t>() - iters * 16 <= 3);
    CHECK(j["result"]["ddot"].get<std::size_t>() - iters * 3 <= 3);
    CHECK(j["preconditioner"]["variant"] == "newton");
    CHECK(j["preconditioner"]["degree"] == 15);
    CHECK(j["bounds"]["estimated"] == false);
  }

  TEST_CASE("reports are reproducible apart from timings")
  {
    const std::vector<std::string> args{"solve", "--diag-test", "n=3000", "--nlev", "3",
                                        "--lowrank", "2", "--rng-seed", "5"};
    auto a = invoke(args).report();
    auto b = invoke(args).report();
    strip_timings(a);
    strip_timings(b);
    CHECK(a == b);
    CHECK(a["result"]["proj_dot"].get<std::size_t>() == 2 * a["result"]["iters"].get<std::size_t>());
  }

  TEST_CASE("residual history file")
  {
    const auto dir = scratch("history");
    const auto r = invoke({"solve", "--diag-test", "n=500", "--history", (dir / "h.csv").string()});
    REQUIRE(r.code == kExitOk);
    std::istringstream in(slurp(dir / "h.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,relres");
    std::getline(in, line);
    CHECK(line == "0,1");
    std::size_t rows = 1;
    while (std::getline(in, line))
    {
      ++rows;
    }
    CHECK(rows == r.report()["result"]["iters"].get<std::size_t>() + 1);
  }

  TEST_CASE("exit codes")
  {
    CHECK(invoke({"solve", "--matrix", "/nonexistent/a.mtx"}).code == kExitBadInput);
    CHECK(invoke({"solve"}).code == kExitBadInput);
    CHECK(invoke({"solve", "--diag-test", "n=10", "--bogus"}).code == kExitBadInput);
    CHECK(invoke({"solve", "--diag-test", "n=10", "--variant", "legendre"}).code == kExitBadInput);
    CHECK(invoke({}).code == kExitBadInput);
    CHECK(invoke({"--help"}).code == kExitOk);
    CHECK(invoke({"solve", "--diag-test", "n=50000", "--bounds", "1,50000", "--max-iters", "3"}).code ==
          kExitNotConverged);
    const auto dir = scratch("alpha");
    CHECK(invoke({"generate", "--nf", "20", "--avg-block", "8", "--alpha", "5", "--out-dir",
               (dir / "net").string()})
            .code == kExitInadmissible);
  }

  TEST_CASE("generated network solves end to end")
  {
    const auto dir = scratch("dfn");
    const auto gen = invoke({"generate", "--nf", "12", "--avg-block", "20", "--rng-seed", "3",
                          "--out-dir", (dir / "net").string()});
    REQUIRE(gen.code == kExitOk);
    CHECK(gen.report()["system"]["nfractures"] == 12);
    CHECK(fs::exists(dir / "net" / "C.blk"));

    const auto r = invoke({"solve", "--dfn", (dir / "net").string(), "--degree", "15", "--xi", "1e-3"});
    REQUIRE(r.code == kExitOk);
    const auto j = r.report();
    CHECK(j["problem"]["jacobi_scaled"] == true);
    CHECK(j["dfn_residual"]["passed"] == true);
    CHECK(j["dfn_residual"]["total"].get<double>() <= 1e-8);

    CHECK(invoke({"solve", "--dfn", (dir / "net").string(), "--rhs", "q.txt"}).code == kExitBadInput);
  }

  TEST_CASE("sweep grid")
  {
    const auto dir = scratch("sweep");
    const auto csv = (dir / "grid.csv").string();
    const auto r = invoke({"sweep", "--diag-test", "n=20000", "--bounds", "1,20000", "--xis",
                        "0,1e-3", "--degrees", "3,7,15", "--csv", csv});
    REQUIRE(r.code == kExitOk);
    const auto rows = r.report()["rows"];
    REQUIRE(rows.size() == 6);
    for (std::size_t base : {0, 3})
    {
      CHECK(rows[base]["iters"] > rows[base + 1]["iters"]);
      CHECK(rows[base + 1]["iters"] > rows[base + 2]["iters"]);
    }
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    CHECK(line == "xi,degree,iters,mvp,ddot,solve_seconds,status");
    std::size_t n = 0;
    while (std::getline(in, line))
    {
      CHECK(line.substr(line.rfind(',') + 1) == "converged");
      ++n;
    }
    CHECK(n == 6);
  }

  TEST_CASE("empty sweep grid writes only the header")
  {
    const auto dir = scratch("sweep_empty");
    const auto csv = (dir / "grid.csv").string();
    const auto r = invoke({"sweep", "--diag-test", "n=100", "--degrees", "", "--csv", csv});
    REQUIRE(r.code == kExitOk);
    CHECK(slurp(csv) == "xi,degree,iters,mvp,ddot,solve_seconds,status\n");
    CHECK(r.report()["rows"].empty());
  }

  TEST_CASE("a failing sweep cell does not stop the sweep")
  {
    const auto r = invoke({"sweep", "--diag-test", "n=1000", "--bounds", "1,1000", "--variant",
                        "newton", "--degrees", "3,5,7"});
    REQUIRE(r.code == kExitOk);
    const auto rows = r.report()["rows"];
    REQUIRE(rows.size() == 3);
    CHECK(rows[0]["status"] == "converged");
    CHECK(rows[1]["status"] == "error");
    CHECK(rows[2]["status"] == "converged");
  }

  TEST_CASE("spectrum of the first Newton level")
  {
    const auto dir = scratch("spectrum");
    {
      std::ofstream ev(dir / "ev.txt");
      for (int i = 1; i <= 19; i += 2)
      {
        ev << 0.1 * i << '\n';
      }
    }
    const auto csv = (dir / "map.csv").string();
    const auto r = invoke({"spectrum", "--eigenvalues", (dir / "ev.txt").string(), "--nlev", "1",
                        "--level", "1", "--csv", csv});
    REQUIRE(r.code == kExitOk);
    const auto j = r.report();
    const double a = 0.1, b = 1.9;
    const double left = 4 * a * b / ((a + b) * (a + b));
    CHECK(j["normalized_smallest"][0].get<double>() ==
          doctest::Approx(j["normalized_smallest"][1].get<double>()).epsilon(1e-12));

    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    CHECK(line == "lambda_original,lambda_mapped");
    std::vector<double> mapped;
    while (std::getline(in, line))
    {
      mapped.push_back(std::stod(line.substr(line.find(',') + 1)));
    }
    REQUIRE(mapped.size() == 10);
    CHECK(mapped.front() == doctest::Approx(left).epsilon(1e-10));
    CHECK(mapped.back() == doctest::Approx(left).epsilon(1e-10));
  }

  TEST_CASE("empty eigenvalue list writes only the header")
  {
    const auto dir = scratch("spectrum_empty");
    std::ofstream(dir / "none.txt").close();
    const auto csv = (dir / "map.csv").string();
    const auto r = invoke({"spectrum", "--eigenvalues", (dir / "none.txt").string(), "--csv", csv});
    REQUIRE(r.code == kExitOk);
    CHECK(slurp(csv) == "lambda_original,lambda_mapped\n");
    CHECK(r.report()["count"] == 0);
  }

  TEST_CASE("scale benchmark")
  {
    const auto r = invoke({"scale-bench", "--diag-test", "n=20000", "--bounds", "1,20000", "--nlev",
                        "3", "--thread-list", "2,1,4"});
    REQUIRE(r.code == kExitOk);
    const auto j = r.report();
    CHECK(j["iters_constant"] == true);
    CHECK(j["reference_threads"] == 1);
    for (const auto &row : j["rows"])
    {
      CHECK(row["iters"] == j["rows"][0]["iters"]);
      if (row["threads"] == 1)
      {
        CHECK(row["efficiency_percent"].get<double>() == doctest::Approx(100.0));
      }
    }
  }

  TEST_CASE("output directory override")
  {
    const auto dir = scratch("outdir");
    ::setenv("POLYCG_OUTPUT_DIR", dir.c_str(), 1);
    const auto r = invoke({"solve", "--diag-test", "n=100", "--output", "rep.json"});
    ::unsetenv("POLYCG_OUTPUT_DIR");
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.empty());
    REQUIRE(fs::exists(dir / "rep.json"));
    CHECK(json::parse(slurp(dir / "rep.json"))["result"]["status"] == "converged");
  }
}
