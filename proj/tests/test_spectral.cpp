#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ising/rng.hpp"
#include "ising/spectral.hpp"

using namespace ising;

namespace {

Matrix random_symmetric(int n, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
  return scale * 0.5 * (A + A.transpose()) / std::sqrt(n);
}

}  // namespace

TEST_CASE("diagonal example splits by eigenvalue sign and threshold") {
  Matrix J = Matrix::Zero(3, 3);
  J.diagonal() << 2.0, 0.3, -1.5;
  SpectralSplit s = decompose(J, 2.0);
  CHECK(s.d == 1);
  CHECK(s.spike_threshold() == Catch::Approx(0.5));
  Matrix Jp = Matrix::Zero(3, 3);
  Jp.diagonal() << 2.0, 0.3, 0.0;
  Matrix Jm = Matrix::Zero(3, 3);
  Jm.diagonal() << 0.0, 0.0, 1.5;
  Matrix Jperp = Matrix::Zero(3, 3);
  Jperp.diagonal() << 0.0, 0.3, 0.0;
  CHECK((s.J_plus - Jp).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.J_minus - Jm).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.J_perp - Jperp).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(std::abs(s.Q(0, 0)) - 1.0) < 1e-12);
  CHECK(s.minus_trace == Catch::Approx(1.5));
}

TEST_CASE("zero matrix decomposes to all-zero parts") {
  SpectralSplit s = decompose(Matrix::Zero(4, 4), 2.0);
  CHECK(s.d == 0);
  CHECK(s.J_plus.norm() == 0.0);
  CHECK(s.J_minus.norm() == 0.0);
  CHECK(s.X.norm() == 0.0);
  CHECK_FALSE(s.has_negative_part());
}

TEST_CASE("rank-one mean-field matrix gives a single spike") {
  const int n = 4;
  Matrix J = Matrix::Constant(n, n, 1.5 / n);
  SpectralSplit s = decompose(J, std::numeric_limits<double>::infinity());
  CHECK(s.d == 1);
  CHECK(s.eigvals[n - 1] == Catch::Approx(1.5));
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(s.Q(i, 0)) == Catch::Approx(0.5));
  CHECK(s.perp_op_norm < 1e-10);
}

TEST_CASE("c = infinity means spike threshold 1") {
  Matrix J = Matrix::Zero(2, 2);
  J.diagonal() << 0.9, 0.3;
  SpectralSplit s = decompose(J, std::numeric_limits<double>::infinity());
  CHECK(s.d == 0);
  CHECK(s.spike_threshold() == Catch::Approx(1.0));
  J(0, 0) = 1.2;
  SpectralSplit s2 = decompose(J, std::numeric_limits<double>::infinity());
  CHECK(s2.d == 1);
}

TEST_CASE("default threshold picks c=2 only for indefinite matrices") {
  Matrix psd = Matrix::Zero(2, 2);
  psd.diagonal() << 0.5, 0.1;
  CHECK(std::isinf(default_threshold_c(psd)));
  Matrix indef = psd;
  indef(1, 1) = -0.1;
  CHECK(default_threshold_c(indef) == Catch::Approx(2.0));
}

TEST_CASE("decompose validates input") {
  Matrix asym(2, 2);
  asym << 0, 1, 0, 0;
  CHECK_THROWS_AS(decompose(asym, 2.0), InvalidInputError);
  CHECK_THROWS_AS(decompose(Matrix::Zero(2, 2), 1.0), InvalidInputError);
  CHECK_THROWS_AS(decompose(Matrix::Zero(2, 3), 2.0), InvalidInputError);
}

TEST_CASE("random splits satisfy every structural invariant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 20;
    Matrix J = random_symmetric(n, 1.3, seed);
    SpectralSplit s = decompose(J, 2.0);
    SplitDiagnostics diag = validate_split(s, J);
    INFO("seed " << seed);
    CHECK(diag.ok);
    CHECK(diag.reconstruction_err < 1e-8);
    CHECK(diag.psd_slack > -1e-10);
    CHECK(diag.cross_product_norm < 1e-8);
    CHECK(diag.factor_err < 1e-8);
    CHECK(diag.par_err < 1e-8);
    CHECK(s.perp_op_norm <= s.spike_threshold() + 1e-8);
    // every eigenvalue is accounted for exactly once
    int spikes = 0;
    for (int i = 0; i < n; ++i)
      if (s.eigvals[i] > s.spike_threshold() + kEigClampTol) ++spikes;
    CHECK(spikes == s.d);
    CHECK(s.minus_trace ==
          Catch::Approx(-s.eigvals.cwiseMin(0.0).sum()).margin(1e-10));
  }
}

TEST_CASE("X is the symmetric square root and commutes with the projector") {
  Matrix J = random_symmetric(8, 1.5, 3);
  SpectralSplit s = decompose(J, 2.0);
  CHECK((s.X - s.X.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(((1.0 / s.n) * s.X * s.X - s.J_plus).cwiseAbs().maxCoeff() < 1e-9);
  if (s.d > 0) {
    // X^T Q = sqrt(n) Q diag(sqrt(lambda_spike)) = A
    CHECK((s.X.transpose() * s.Q - s.A).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("validate_split flags a corrupted basis") {
  Matrix J = random_symmetric(6, 1.6, 5);
  SpectralSplit s = decompose(J, 2.0);
  if (s.d == 0) {
    J(0, 0) += 2.0;
    s = decompose(J, 2.0);
  }
  REQUIRE(s.d > 0);
  s.Q.col(0).setZero();
  SplitDiagnostics diag = validate_split(s, J);
  CHECK_FALSE(diag.ok);
  CHECK(diag.orthonormality_defect > 0.5);
}

TEST_CASE("decompose commutes with coordinate relabeling") {
  const int n = 6;
  Matrix J = random_symmetric(n, 1.4, 8);
  Matrix P = Matrix::Zero(n, n);
  const int perm[6] = {3, 1, 5, 0, 4, 2};
  for (int i = 0; i < n; ++i) P(perm[i], i) = 1.0;
  SpectralSplit s1 = decompose(J, 2.0);
  SpectralSplit s2 = decompose(Matrix(P.transpose() * J * P), 2.0);
  CHECK(s2.d == s1.d);
  CHECK((P.transpose() * s1.J_plus * P - s2.J_plus).cwiseAbs().maxCoeff() <
        1e-9);
  CHECK((P.transpose() * s1.J_minus * P - s2.J_minus).cwiseAbs().maxCoeff() <
        1e-9);
}

TEST_CASE("diagnostics serialize to JSON") {
  SpectralSplit s = decompose(Matrix::Zero(3, 3), 2.0);
  nlohmann::json j = diagnostics_to_json(validate_split(s, Matrix::Zero(3, 3)));
  CHECK(j.at("ok").get<bool>());
  CHECK(j.contains("reconstruction_err"));
}
