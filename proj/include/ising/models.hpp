#pragma once

#include <cmath>
#include <iostream>
#include <vector>

#include "ising/model.hpp"
#include "ising/rng.hpp"

namespace ising {

// Mean-field ferromagnet J_ij = beta/n; single spike eigenvalue beta.
inline IsingModel curie_weiss(int n, double beta) {
  if (n < 1) throw InvalidInputError("curie_weiss: n must be >= 1");
  if (beta < 0.0) throw InvalidInputError("curie_weiss: beta must be >= 0");
  return make_model(Matrix::Constant(n, n, beta / n), Vector::Zero(n));
}

// Hebbian couplings J = (beta/2n) sum_v eta_v eta_v^T.
inline IsingModel hopfield(const std::vector<Vector>& patterns, double beta,
                           Vector bias = Vector()) {
  if (patterns.empty()) throw InvalidInputError("hopfield: no patterns");
  const int n = static_cast<int>(patterns.front().size());
  Matrix J = Matrix::Zero(n, n);
  for (const Vector& eta : patterns) {
    if (eta.size() != n)
      throw InvalidInputError("hopfield: pattern length mismatch");
    J += eta * eta.transpose();
  }
  J *= beta / (2.0 * n);
  if (bias.size() == 0) bias = Vector::Zero(n);
  if (bias.size() != n)
    throw InvalidInputError("hopfield: bias length mismatch");
  return make_model(std::move(J), std::move(bias));
}

// Ferromagnet plus GOE noise: J_ij = beta1/n + beta2 W_ij with W
// off-diagonal N(0, 1/n) and diagonal N(0, 2/n).
inline IsingModel sk_ferro(int n, double beta1, double beta2,
                           std::uint64_t seed) {
  if (n < 2) throw InvalidInputError("sk_ferro: n must be >= 2");
  Rng rng = Rng(seed).derive(0x534b);
  Matrix W(n, n);
  const double off_sd = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    W(i, i) = std::sqrt(2.0) * off_sd * rng.normal();
    for (int j = i + 1; j < n; ++j) W(i, j) = W(j, i) = off_sd * rng.normal();
  }
  return make_model(Matrix::Constant(n, n, beta1 / n) + beta2 * W,
                    Vector::Zero(n));
}

// J = sign * beta * A for a simple graph adjacency A.
inline IsingModel graph_ising(const Matrix& adjacency, double beta, int sign,
                              Vector h = Vector()) {
  if (sign != 1 && sign != -1)
    throw InvalidInputError("graph_ising: sign must be +1 or -1");
  if (adjacency.rows() != adjacency.cols())
    throw InvalidInputError("graph_ising: adjacency not square");
  if ((adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw InvalidInputError("graph_ising: adjacency not symmetric");
  if (adjacency.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw InvalidInputError("graph_ising: adjacency has nonzero diagonal");
  const int n = static_cast<int>(adjacency.rows());
  if (h.size() == 0) h = Vector::Zero(n);
  return make_model(Matrix(sign * beta * adjacency), std::move(h));
}

// Posterior couplings J = lambda A + (p mu / (n (1 + mu))) B B^T.
inline IsingModel posterior_model(const Matrix& A, const Matrix& B,
                                  double lambda, double mu, int p) {
  const int n = static_cast<int>(B.rows());
  Matrix J = (p * mu / (n * (1.0 + mu))) * (B * B.transpose());
  if (lambda != 0.0) {
    if (A.rows() != n || A.cols() != n)
      throw InvalidInputError("posterior_model: A shape mismatch");
    J += lambda * A;
  }
  return make_model(std::move(J), Vector::Zero(n));
}

// Number-partitioning encoding: J = -2 beta n a a^T, h = 2 b beta n a.
// Expected computationally hard for beta >= 1; stress testing only.
inline IsingModel subset_sum_instance(const std::vector<long long>& a,
                                      double beta, long long b = 0) {
  const int n = static_cast<int>(a.size());
  if (n < 1) throw InvalidInputError("subset_sum_instance: empty a");
  Vector av(n);
  for (int i = 0; i < n; ++i) av[i] = static_cast<double>(a[i]);
  std::cerr << "warning: subset-sum instances are expected-hard; "
               "use for stress testing only\n";
  return make_model(Matrix(-2.0 * beta * n * (av * av.transpose())),
                    Vector(2.0 * b * beta * n * av));
}

// Random d-regular multigraph adjacency via a pairing model; multi-edges
// and self-loops are retried away, so keep n*degree modest.
inline Matrix random_regular_adjacency(int n, int degree, std::uint64_t seed) {
  if (n < 2 || degree < 1 || (n * degree) % 2 != 0 || degree >= n)
    throw InvalidInputError("random_regular_adjacency: bad (n, degree)");
  Rng rng = Rng(seed).derive(0x5252);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<int> stubs;
    for (int v = 0; v < n; ++v)
      for (int k = 0; k < degree; ++k) stubs.push_back(v);
    for (std::size_t i = stubs.size(); i > 1; --i)
      std::swap(stubs[i - 1], stubs[rng.below(i)]);
    Matrix A = Matrix::Zero(n, n);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < stubs.size() && ok; i += 2) {
      const int u = stubs[i], v = stubs[i + 1];
      if (u == v || A(u, v) > 0.0) ok = false;
      A(u, v) = A(v, u) = 1.0;
    }
    if (ok) return A;
  }
  throw EstimatorError("random_regular_adjacency: pairing retries exhausted");
}

// Generative contextual-SBM draw: spins v, weights u ~ N(0, I_p / p),
// B = sqrt(mu/n) v u^T + Z with Z entries N(0, 1/p), and a noisy
// rank-one graph observation A = (lambda/n) v v^T + W, W GOE-scaled.
struct CsbmSample {
  SpinConfig v;
  Matrix A;
  Matrix B;
};

inline CsbmSample csbm_sample(int n, int p, double lambda, double mu,
                              std::uint64_t seed) {
  Rng rng = Rng(seed).derive(0x4353424d);
  CsbmSample out;
  out.v.resize(n);
  for (int i = 0; i < n; ++i) out.v[i] = rng.coin(0.5) ? 1.0 : -1.0;
  Matrix W(n, n);
  const double sd = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    W(i, i) = std::sqrt(2.0) * sd * rng.normal();
    for (int j = i + 1; j < n; ++j) W(i, j) = W(j, i) = sd * rng.normal();
  }
  out.A = (lambda / n) * (out.v * out.v.transpose()) + W;
  Vector u(p);
  for (int k = 0; k < p; ++k)
    u[k] = rng.normal() / std::sqrt(static_cast<double>(p));
  out.B.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < p; ++k)
      out.B(i, k) = std::sqrt(mu / n) * out.v[i] * u[k] +
                    rng.normal() / std::sqrt(static_cast<double>(p));
  return out;
}

}  // namespace ising
