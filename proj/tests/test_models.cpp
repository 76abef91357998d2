#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ising/brute_force.hpp"
#include "ising/glauber.hpp"
#include "ising/models.hpp"
#include "ising/spectral.hpp"

using namespace ising;

TEST_CASE("mean-field couplings and spectrum") {
  IsingModel m = curie_weiss(2, 1.0);
  CHECK(m.J(0, 0) == Catch::Approx(0.5));
  CHECK(m.J(0, 1) == Catch::Approx(0.5));
  CHECK(curie_weiss(3, 0.0).J.norm() == 0.0);
  SpectralSplit s =
      decompose(curie_weiss(6, 1.5).J, std::numeric_limits<double>::infinity());
  CHECK(s.d == 1);
  CHECK(s.eigvals[5] == Catch::Approx(1.5));
  CHECK(s.eigvals.head(5).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(curie_weiss(0, 1.0), InvalidInputError);
  CHECK_THROWS_AS(curie_weiss(2, -1.0), InvalidInputError);
}

TEST_CASE("mean-field magnetization is symmetric and bimodal above beta=1") {
  const int n = 12;
  const double beta = 1.5;
  IsingModel m = curie_weiss(n, beta);
  const DiscreteDistribution d = brute_force_distribution(m);
  std::vector<double> mag(n + 1, 0.0);  // distribution of (sum sigma + n)/2
  for (std::uint32_t idx = 0; idx < (1u << n); ++idx)
    mag[__builtin_popcount(idx)] += std::exp(d.log_p[idx]);
  for (int k = 0; k <= n; ++k)
    CHECK(mag[k] == Catch::Approx(mag[n - k]).margin(1e-10));
  // mode near n (1 + y)/2 with y the positive root of y = tanh(beta y)
  double y = 0.5;
  for (int it = 0; it < 200; ++it) y = std::tanh(beta * y);
  const int mode_pred = static_cast<int>(std::round(0.5 * n * (1.0 + y)));
  int mode = n / 2 + 1;
  for (int k = n / 2 + 2; k <= n; ++k)
    if (mag[k] > mag[mode]) mode = k;
  CHECK(std::abs(mode - mode_pred) <= 1);
  CHECK(mag[mode] > mag[n / 2]);
}

TEST_CASE("Hebbian couplings from patterns") {
  Vector ones = Vector::Ones(4);
  IsingModel m = hopfield({ones}, 2.0);
  CHECK((m.J - Matrix::Constant(4, 4, 0.25)).cwiseAbs().maxCoeff() < 1e-12);

  // orthogonal patterns give equal spikes beta/2
  Vector p1(4), p2(4);
  p1 << 1, 1, 1, 1;
  p2 << 1, 1, -1, -1;
  SpectralSplit s = decompose(hopfield({p1, p2}, 1.6).J,
                              std::numeric_limits<double>::infinity());
  CHECK(s.eigvals[3] == Catch::Approx(0.8));
  CHECK(s.eigvals[2] == Catch::Approx(0.8));
  CHECK(s.eigvals.head(2).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(5);
  std::vector<Vector> pats{uniform_spins(10, rng), uniform_spins(10, rng)};
  Eigen::FullPivLU<Matrix> lu(hopfield(pats, 1.0).J);
  CHECK(lu.rank() <= 2);

  Vector short_pat = Vector::Ones(3);
  CHECK_THROWS_AS(hopfield({ones, short_pat}, 1.0), InvalidInputError);
}

TEST_CASE("ferromagnet plus noise family") {
  IsingModel pure = sk_ferro(6, 1.2, 0.0, 3);
  CHECK((pure.J - curie_weiss(6, 1.2).J).cwiseAbs().maxCoeff() < 1e-12);

  IsingModel a = sk_ferro(8, 0.5, 0.3, 11);
  IsingModel b = sk_ferro(8, 0.5, 0.3, 11);
  CHECK((a.J - b.J).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.J - sk_ferro(8, 0.5, 0.3, 12).J).cwiseAbs().maxCoeff() > 0.0);

  // GOE scaling: ||beta2 W||_op concentrates near 2 beta2
  int within = 0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    IsingModel m = sk_ferro(200, 0.0, 0.2, 100 + s);
    if (op_norm_of(m.J) <= 0.2 * 2.0 * 1.2) ++within;
  }
  CHECK(within >= static_cast<int>(0.95 * seeds));
  CHECK_THROWS_AS(sk_ferro(1, 1.0, 0.1, 1), InvalidInputError);
}

TEST_CASE("graph couplings carry the chosen sign") {
  Matrix cycle2 = Matrix::Zero(2, 2);
  cycle2(0, 1) = cycle2(1, 0) = 1.0;
  IsingModel anti = graph_ising(cycle2, 0.3, -1);
  CHECK(anti.J(0, 1) == Catch::Approx(-0.3));
  IsingModel ferro = graph_ising(cycle2, 0.3, +1);
  CHECK(ferro.J(0, 1) == Catch::Approx(0.3));

  Matrix A = random_regular_adjacency(10, 3, 7);
  for (int i = 0; i < 10; ++i) CHECK(A.row(i).sum() == Catch::Approx(3.0));
  SpectralSplit s =
      decompose(graph_ising(A, 0.4, +1).J, std::numeric_limits<double>::infinity());
  CHECK(s.eigvals[9] == Catch::Approx(0.4 * 3.0).margin(1e-9));

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(graph_ising(bad, 0.3, -1), InvalidInputError);
  Matrix loop = cycle2;
  loop(0, 0) = 1.0;
  CHECK_THROWS_AS(graph_ising(loop, 0.3, 1), InvalidInputError);
  CHECK_THROWS_AS(graph_ising(cycle2, 0.3, 2), InvalidInputError);
}

TEST_CASE("posterior couplings from features and graph") {
  Rng rng(9);
  const int n = 6, p = 2;
  Matrix B(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) B(i, j) = rng.normal();
  IsingModel gmm = posterior_model(Matrix(), B, 0.0, 1.0, p);
  Eigen::FullPivLU<Matrix> lu(gmm.J);
  CHECK(lu.rank() <= p);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gmm.J, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);

  CHECK(posterior_model(Matrix(), B, 0.0, 0.0, p).J.norm() == 0.0);

  CsbmSample cs = csbm_sample(n, p, 0.4, 1.0, 17);
  IsingModel full = posterior_model(cs.A, cs.B, 0.4, 1.0, p);
  CHECK(full.n == n);
  CHECK((full.J - full.J.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(posterior_model(Matrix::Zero(3, 3), B, 0.4, 1.0, p),
                  InvalidInputError);
}

TEST_CASE("number-partitioning instances concentrate on zero signings") {
  IsingModel m = subset_sum_instance({1, 1, 2}, 1.0);
  CHECK(m.J(0, 0) == Catch::Approx(-6.0));
  CHECK(m.h.norm() == 0.0);
  // ground states are the signings with <a, sigma> = 0
  const DiscreteDistribution d = brute_force_distribution(m);
  double zero_mass = 0.0;
  Vector a(3);
  a << 1, 1, 2;
  std::uint32_t best = 0;
  for (std::uint32_t idx = 0; idx < 8; ++idx) {
    if (d.log_p[idx] > d.log_p[best]) best = idx;
    if (a.dot(index_to_spins(idx, 3)) == 0.0)
      zero_mass += std::exp(d.log_p[idx]);
  }
  CHECK(a.dot(index_to_spins(best, 3)) == 0.0);
  // mass outside the solution set <= 2^n e^{-beta n} when a solution exists
  CHECK(1.0 - zero_mass <= 8.0 * std::exp(-3.0));

  // no zero signing: unimodal at the minimizers of <a, sigma>^2
  IsingModel odd = subset_sum_instance({1, 3}, 1.0);
  const DiscreteDistribution d2 = brute_force_distribution(odd);
  const double p_min =
      std::exp(d2.log_p[0b01]) + std::exp(d2.log_p[0b10]);
  CHECK(p_min > 0.999);

  // field encodes the target value b
  IsingModel with_b = subset_sum_instance({1, 1, 2}, 1.0, 1);
  CHECK(with_b.h[2] == Catch::Approx(2.0 * 1.0 * 1.0 * 3.0 * 2.0));
}

TEST_CASE("negative spike threshold defaults engage for subset-sum") {
  IsingModel m = subset_sum_instance({1, 2}, 1.0);
  CHECK(default_threshold_c(m.J) == Catch::Approx(2.0));
  SpectralSplit s = decompose(m.J, 2.0);
  CHECK(s.has_negative_part());
  CHECK(s.d == 0);
}
