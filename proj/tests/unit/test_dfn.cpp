// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <filesystem>

#include "oracles.hpp"
#include "polycg/dfn.hpp"
#include "polycg/error.hpp"
#include "polycg/pcg.hpp"
#include "polycg/polyprec.hpp"

using namespace polycg;

namespace
{

CsrMatrix scalar(double v)
{
  return CsrMatrix::from_triplets(1, 1, {{0, 0, v}});
}

// A = [2], Gh = [0], Gu = [3], B = C = [1], alpha = 1.
DfnBlockSystem tiny()
{
  DfnBlockSystem s;
  s.a = BlockDiagMatrix({scalar(2.0)});
  s.gh = BlockDiagMatrix({scalar(0.0)});
  s.gu = scalar(3.0);
  s.b = scalar(1.0);
  s.c = scalar(1.0);
  s.u_block_sizes = {1};
  s.alpha = 1.0;
  s.q = {1.0};
  return s;
}

CsrMatrix grid(std::size_t nx, std::size_t ny)
{
  std::vector<Triplet> t;
  for (std::size_t x = 0; x < nx; ++x)
  {
    for (std::size_t y = 0; y < ny; ++y)
    {
      const std::size_t i = x * ny + y;
      t.push_back({i, i, 4.0});
      if (x + 1 < nx)
      {
        t.push_back({i, i + ny, -1.0});
        t.push_back({i + ny, i, -1.0});
      }
      if (y + 1 < ny)
      {
        t.push_back({i, i + 1, -1.0});
        t.push_back({i + 1, i, -1.0});
      }
    }
  }
  return CsrMatrix::from_triplets(nx * ny, nx * ny, std::move(t));
}

SyntheticParams small_params(std::uint64_t seed)
{
  SyntheticParams p;
  p.nf = 5;
  p.avg_block = 9;
  p.trace_density = 0.6;
  p.alpha = 0.05;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_SUITE("dfn")
{
  TEST_CASE("Cholesky of a scalar block")
  {
    const BlockCholesky chol(BlockDiagMatrix({scalar(4.0)}));
    std::vector<double> x{2.0};
    chol.solve_lower(x);
    CHECK(x[0] == 1.0);
    std::vector<double> y(1);
    chol.solve(std::vector<double>{8.0}, y);
    CHECK(y[0] == 2.0);
  }

  TEST_CASE("block factors match dense Cholesky")
  {
    // Small blocks go through the dense path, the 12x12 grid (144 rows) through the envelope.
    const BlockDiagMatrix a({grid(2, 2), grid(3, 2), grid(12, 12), oracle::random_spd(70, 0.1, 3)});
    const BlockCholesky chol(a);
    const Eigen::MatrixXd d = oracle::dense(a);
    const Eigen::LLT<Eigen::MatrixXd> llt(d);
    const auto b = random_vector(a.dim(), 4);

    std::vector<double> x = b;
    chol.solve_lower(x);
    const Eigen::VectorXd ref = llt.matrixL().solve(oracle::vec(b));
    CHECK(oracle::rel_err(oracle::vec(x), ref) <= 1e-13);

    std::vector<double> z(a.dim());
    chol.solve(b, z);
    CHECK(oracle::rel_err(oracle::vec(z), llt.solve(oracle::vec(b))) <= 1e-13);
  }

  TEST_CASE("indefinite blocks are reported by index")
  {
    const auto bad = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}});
    try
    {
      const BlockCholesky chol(BlockDiagMatrix({bad}));
      FAIL("expected a factorization error");
    }
    catch (const FactorizationError &e)
    {
      CHECK(e.block() == 0);
    }
    try
    {
      const BlockCholesky chol(BlockDiagMatrix({grid(2, 2), grid(2, 3), bad}));
      FAIL("expected a factorization error");
    }
    catch (const FactorizationError &e)
    {
      CHECK(e.block() == 2);
    }
  }

  TEST_CASE("Schur operator on the scalar system")
  {
    const auto s = tiny();
    s.validate();
    const BlockCholesky chol(s.a);
    const SchurOperator op(s, chol);
    CHECK(op(std::vector<double>{1.0})[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(op.diagonal()[0] == doctest::Approx(2.0).epsilon(1e-15));
  }

  TEST_CASE("decoupled system reduces to Gu")
  {
    DfnBlockSystem s;
    s.a = BlockDiagMatrix({grid(2, 2), grid(2, 3)});
    s.gh = BlockDiagMatrix({grid(2, 2), grid(2, 3)});
    s.gu = oracle::random_spd(4, 0.5, 1);
    s.b = CsrMatrix::from_triplets(10, 4, {});
    s.c = CsrMatrix::from_triplets(10, 4, {});
    s.u_block_sizes = {2, 2};
    s.q = random_vector(10, 1);
    s.validate();
    const BlockCholesky chol(s.a);
    const SchurOperator op(s, chol);
    const auto r = random_vector(4, 2);
    CHECK(op(r) == spmv(s.gu, r));
    CHECK(op.diagonal() == s.gu.diagonal());
  }

  TEST_CASE("Schur operator and diagonal match the dense closed form")
  {
    for (std::uint64_t seed = 1; seed <= 4; ++seed)
    {
      const auto s = generate_synthetic(small_params(seed));
      const BlockCholesky chol(s.a);
      const SchurOperator op(s, chol);
      const Eigen::MatrixXd ref = oracle::schur_dense(s);
      CHECK(oracle::rel_err(oracle::dense(static_cast<const LinearOperator &>(op)), ref) <= 1e-12);
      CHECK(oracle::rel_err(oracle::vec(op.diagonal()), Eigen::VectorXd(ref.diagonal())) <= 1e-12);
      CHECK(probe_symmetry(op, 4) <= 1e-12 * ref.norm());

      const auto d = op.diagonal();
      const ScaledOperator scaled(op, d);
      const Eigen::MatrixXd sd = oracle::dense(static_cast<const LinearOperator &>(scaled));
      for (Eigen::Index i = 0; i < sd.rows(); ++i)
      {
        CHECK(sd(i, i) == doctest::Approx(1.0).epsilon(1e-13));
      }

      const Eigen::VectorXd rhs_ref = [&] {
        const Eigen::MatrixXd a = oracle::dense(s.a);
        const Eigen::LLT<Eigen::MatrixXd> llt(a);
        const Eigen::VectorXd aq = llt.solve(oracle::vec(s.q));
        return Eigen::VectorXd(s.alpha * oracle::dense(s.b).transpose() * aq -
                               oracle::dense(s.c).transpose() *
                                 llt.solve(oracle::dense(s.gh) * aq));
      }();
      CHECK(oracle::rel_err(oracle::vec(op.rhs()), rhs_ref) <= 1e-12);
    }
  }

  TEST_CASE("head recovery")
  {
    const auto s0 = [] {
      auto s = generate_synthetic(small_params(3));
      std::fill(s.q.begin(), s.q.end(), 0.0);
      return s;
    }();
    const BlockCholesky c0(s0.a);
    const auto hp0 = recover_heads(s0, c0, std::vector<double>(s0.nu(), 0.0));
    CHECK(hp0.h == std::vector<double>(s0.nh(), 0.0));
    CHECK(hp0.p == std::vector<double>(s0.nh(), 0.0));

    // Scalar system: compare with the dense 3x3 solve.
    const auto s = tiny();
    const BlockCholesky chol(s.a);
    const SchurOperator op(s, chol);
    const double u = op.rhs()[0] / op(std::vector<double>{1.0})[0];
    const auto hp = recover_heads(s, chol, std::vector<double>{u});
    const Eigen::MatrixXd k = oracle::block_system_dense(s);
    const Eigen::Vector3d f(1.0, 0.0, 0.0);
    const Eigen::VectorXd x = k.lu().solve(f);
    CHECK(hp.h[0] == doctest::Approx(x(0)).epsilon(1e-14));
    CHECK(hp.p[0] == doctest::Approx(x(1)).epsilon(1e-14));
    CHECK(u == doctest::Approx(x(2)).epsilon(1e-14));
    CHECK(block_residual(s, hp.h, hp.p, std::vector<double>{u}).total <= 1e-15);
  }

  TEST_CASE("end-to-end solve on a small network")
  {
    const auto s = generate_synthetic(small_params(2));
    const BlockCholesky chol(s.a);
    const SchurOperator op(s, chol);
    const auto d = op.diagonal();
    const ScaledOperator scaled(op, d);
    const auto b = scaled.scale_rhs(op.rhs());
    const auto bounds = estimate_extremes(scaled, 1e-3);
    const PolyPreconditioner p(build_newton(with_safety_margin(bounds, 1e-3), 3), scaled);
    SolveConfig cfg;
    cfg.tol = 1e-11;
    CounterSet c;
    const auto res = pcg_solve(scaled, p, b, cfg, c);
    REQUIRE(res.report.converged());
    const auto u = scaled.unscale_solution(res.x);
    const auto hp = recover_heads(s, chol, u);
    CHECK(block_residual(s, hp.h, hp.p, u).total <= 1e-8);

    const Eigen::MatrixXd k = oracle::block_system_dense(s);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(k.rows());
    f.head(static_cast<Eigen::Index>(s.nh())) = oracle::vec(s.q);
    const Eigen::VectorXd x = k.lu().solve(f);
    CHECK(oracle::rel_err(oracle::vec(u), x.tail(static_cast<Eigen::Index>(s.nu()))) <= 1e-8);
  }

  TEST_CASE("generator structure and determinism")
  {
    SyntheticParams p;
    p.nf = 2;
    p.avg_block = 4;
    p.seed = 11;
    const auto s = generate_synthetic(p);
    CHECK_NOTHROW(s.validate());
    CHECK(s.nfractures() == 2);
    CHECK(s.nh() >= 8);
    CHECK(s.nh() <= 12);
    CHECK(s.nu() >= 2);
    CHECK(s.nu() % 2 == 0);

    const auto again = generate_synthetic(p);
    CHECK(again.a.assemble() == s.a.assemble());
    CHECK(again.b == s.b);
    CHECK(again.c == s.c);
    CHECK(again.gu == s.gu);
    CHECK(again.q == s.q);

    // E = B - C never touches the columns of a fracture inside its own rows.
    const auto big = generate_synthetic(small_params(9));
    for (const auto &t : big.b.triplets())
    {
      if (big.c.at(t.row, t.col) == 0.0)
      {
        std::size_t f = 0;
        while (t.row >= big.a.block_offset(f) + big.a.block_size(f))
        {
          ++f;
        }
        const std::size_t lo = big.u_block_offset(f);
        CHECK((t.col < lo || t.col >= lo + big.u_block_sizes[f]));
      }
    }

    // Gh is singular, Gu is semidefinite.
    const Eigen::VectorXd gh_ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(oracle::dense(big.gh)).eigenvalues();
    CHECK(std::abs(gh_ev(0)) <= 1e-12);
    const Eigen::VectorXd gu_ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(oracle::dense(big.gu)).eigenvalues();
    CHECK(gu_ev(0) >= -1e-12);
  }

  TEST_CASE("generated Schur complement is positive definite")
  {
    SyntheticParams p;
    p.nf = 50;
    p.avg_block = 12;
    p.seed = 5;
    const auto s = generate_synthetic(p);
    const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(oracle::schur_dense(s)).eigenvalues();
    CHECK(ev(0) > 0.0);
  }

  TEST_CASE("generator rejects bad parameters")
  {
    SyntheticParams p;
    p.nf = 1;
    CHECK_THROWS_AS(generate_synthetic(p), InputError);
    p = SyntheticParams{};
    p.alpha = 0.0;
    CHECK_THROWS_AS(generate_synthetic(p), InputError);
    p = SyntheticParams{};
    p.alpha = 5.0;
    CHECK_THROWS_AS(generate_synthetic(p), InadmissibleAlphaError);
  }

  TEST_CASE("save and load")
  {
    const auto s = generate_synthetic(small_params(4));
    const auto dir = std::filesystem::temp_directory_path() / "polycg_unit" / "dfn_rt";
    std::filesystem::remove_all(dir);
    save_dfn(s, dir);
    const auto t = load_dfn(dir);
    CHECK(t.a.assemble() == s.a.assemble());
    CHECK(t.gh.assemble() == s.gh.assemble());
    CHECK(t.gu == s.gu);
    CHECK(t.b == s.b);
    CHECK(t.c == s.c);
    CHECK(t.u_block_sizes == s.u_block_sizes);
    CHECK(t.alpha == s.alpha);
    CHECK(t.q == s.q);
    CHECK_THROWS_AS(load_dfn(dir / "nope"), InputError);
  }

  TEST_CASE("validation catches layout errors")
  {
    auto s = tiny();
    s.c = CsrMatrix::from_triplets(1, 1, {{0, 0, 2.0}});
    CHECK_THROWS_AS(s.validate(), InputError);

    DfnBlockSystem t;
    t.a = BlockDiagMatrix({grid(2, 2), grid(2, 2)});
    t.gh = t.a;
    t.gu = CsrMatrix::identity(2);
    t.c = CsrMatrix::from_triplets(8, 2, {{0, 1, 1.0}});
    t.b = t.c;
    t.u_block_sizes = {1, 1};
    t.q = std::vector<double>(8, 1.0);
    CHECK_THROWS_AS(t.validate(), InputError);

    t.c = CsrMatrix::from_triplets(8, 2, {{0, 0, 1.0}});
    t.b = t.c;
    CHECK_NOTHROW(t.validate());
    t.q.pop_back();
    CHECK_THROWS_AS(t.validate(), DimensionError);
  }
}
