#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "quanta/eigensolver.hpp"
#include "quanta/rng.hpp"

using quanta::linalg::symmetric_eigen;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed) {
  quanta::RngStream rng(seed, 0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = 2.0 * rng.next_double() - 1.0;
      a(i, j) = v;
      a(j, i) = v;
    }
  return a;
}

}  // namespace

TEST_CASE("tiny analytic cases") {
  {
    Eigen::MatrixXd a(1, 1);
    a << 4.2;
    const auto r = symmetric_eigen(a);
    CHECK(r.eigenvalues[0] == doctest::Approx(4.2));
    CHECK(std::fabs(r.eigenvectors(0, 0)) == doctest::Approx(1.0));
  }
  {
    Eigen::MatrixXd a(2, 2);
    a << 2, 1, 1, 2;
    const auto r = symmetric_eigen(a);
    CHECK(r.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-12));
    // Eigenvector of 3 is (1,1)/sqrt(2) up to sign.
    CHECK(std::fabs(r.eigenvectors(0, 1)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
  {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a.diagonal() << 3.0, -1.0, 2.0;
    const auto r = symmetric_eigen(a);
    CHECK(r.eigenvalues[0] == doctest::Approx(-1.0));
    CHECK(r.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(r.eigenvalues[2] == doctest::Approx(3.0));
  }
}

TEST_CASE("residuals, orthogonality, and ordering on random matrices") {
  for (int n : {5, 40, 160}) {
    const Eigen::MatrixXd a = random_symmetric(n, 100 + n);
    const auto r = symmetric_eigen(a);

    for (int j = 1; j < n; ++j) CHECK(r.eigenvalues[j] >= r.eigenvalues[j - 1]);

    const double scale = r.eigenvalues.cwiseAbs().maxCoeff();
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd v = r.eigenvectors.col(j);
      const double residual = (a * v - r.eigenvalues[j] * v).norm();
      CHECK(residual <= 1e-8 * std::max(1.0, scale) * v.norm());
    }

    const Eigen::MatrixXd gram =
        r.eigenvectors.transpose() * r.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-9);

    CHECK(r.eigenvalues.sum() == doctest::Approx(a.trace()).epsilon(1e-9));

    // Full reconstruction.
    const Eigen::MatrixXd rebuilt = r.eigenvectors *
                                    r.eigenvalues.asDiagonal() *
                                    r.eigenvectors.transpose();
    CHECK((rebuilt - a).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, scale));
  }
}

TEST_CASE("agrees with an independent dense solver") {
  const int n = 120;
  const Eigen::MatrixXd a = random_symmetric(n, 7);
  const auto ours = symmetric_eigen(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> reference(a);
  REQUIRE(reference.info() == Eigen::Success);
  for (int j = 0; j < n; ++j) {
    CHECK(ours.eigenvalues[j] ==
          doctest::Approx(reference.eigenvalues()[j]).epsilon(1e-9));
  }
}

TEST_CASE("rejects non-square input") {
  Eigen::MatrixXd a(2, 3);
  a.setZero();
  CHECK_THROWS_AS(symmetric_eigen(a), std::invalid_argument);
}
