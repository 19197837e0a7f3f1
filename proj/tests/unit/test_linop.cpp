// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "polycg/error.hpp"
#include "polycg/linop.hpp"

using namespace polycg;

TEST_SUITE("linop")
{
  TEST_CASE("scaled identity")
  {
    const IdentityOperator id(2);
    const std::vector<double> d{4, 4};
    const auto s = make_scaled_operator(id, d);
    const auto y = s(std::vector<double>{1, 1});
    CHECK(y[0] == doctest::Approx(0.25));
    CHECK(y[1] == doctest::Approx(0.25));
  }

  TEST_CASE("Jacobi scaling of a diagonal matrix is the identity")
  {
    const std::vector<double> dv{1, 4};
    const auto m = CsrMatrix::diagonal(dv);
    const MatrixOperator a(m);
    const auto s = make_scaled_operator(a, m.diagonal());
    const auto x = random_vector(2, 5);
    const auto y = s(x);
    CHECK(y[0] == doctest::Approx(x[0]).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(x[1]).epsilon(1e-15));
  }

  TEST_CASE("scaled operator spectrum matches dense oracle")
  {
    const auto m = oracle::random_spd(20, 0.3, 4);
    const MatrixOperator a(m);
    const auto d = m.diagonal();
    const auto s = make_scaled_operator(a, d);
    const Eigen::MatrixXd dense = oracle::dense(m);
    Eigen::VectorXd w(20);
    for (int i = 0; i < 20; ++i)
    {
      w(i) = 1.0 / std::sqrt(d[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd ref = w.asDiagonal() * dense * w.asDiagonal();
    const Eigen::VectorXd ev_ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ref).eigenvalues();
    const Eigen::MatrixXd got = oracle::dense(static_cast<const LinearOperator &>(s));
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(got).eigenvalues();
    CHECK(oracle::rel_err(ev, ev_ref) <= 1e-12);
  }

  TEST_CASE("scale and unscale helpers")
  {
    const IdentityOperator id(3);
    const std::vector<double> d{1, 4, 16};
    const auto s = make_scaled_operator(id, d);
    const auto r = s.scale_rhs(std::vector<double>{1, 1, 1});
    CHECK(r == std::vector<double>{1.0, 0.5, 0.25});
    const auto x = s.unscale_solution(std::vector<double>{1, 2, 4});
    CHECK(x == std::vector<double>{1.0, 1.0, 1.0});
  }

  TEST_CASE("scaling rejects bad weights")
  {
    const IdentityOperator id(2);
    CHECK_THROWS_AS(make_scaled_operator(id, std::vector<double>{1, 0}), InputError);
    CHECK_THROWS_AS(make_scaled_operator(id, std::vector<double>{1, -2}), InputError);
    CHECK_THROWS_AS(make_scaled_operator(id, std::vector<double>{1}), DimensionError);
  }

  TEST_CASE("symmetry probe")
  {
    const IdentityOperator id(5);
    CHECK(probe_symmetry(id, 8) <= 1e-15);

    const auto m = oracle::random_spd(30, 0.2, 9);
    const MatrixOperator a(m);
    CHECK(probe_symmetry(a, 8) <= 1e-13);

    const FunctionOperator nilpotent(
      2,
      [](std::span<const double> x, std::span<double> y)
      {
        y[0] = x[1];
        y[1] = 0.0;
      },
      false);
    CHECK(probe_symmetry(nilpotent, 8) >= 0.1);
  }

  TEST_CASE("counted operator")
  {
    CounterSet c;
    const IdentityOperator id(3);
    const CountedOperator counted(id, c);
    std::vector<double> x{1, 2, 3}, y(3);
    counted.apply(x, y);
    counted.apply(y, x);
    CHECK(c.mvp == 2);
    CHECK(x == std::vector<double>{1, 2, 3});
  }

  TEST_CASE("operator rejects wrong lengths")
  {
    const auto m = CsrMatrix::identity(3);
    const MatrixOperator a(m);
    std::vector<double> x(2), y(3);
    CHECK_THROWS_AS(a.apply(x, y), DimensionError);
    CHECK_THROWS_AS(MatrixOperator(CsrMatrix::from_triplets(2, 3, {})), DimensionError);
  }

  TEST_CASE("random vectors are reproducible")
  {
    CHECK(random_vector(10, 3) == random_vector(10, 3));
    CHECK(random_vector(10, 3) != random_vector(10, 4));
  }
}
