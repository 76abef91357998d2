#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <string>

#include <json.hpp>

#include "ising/errors.hpp"

namespace ising {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Spin configuration in {-1,+1}^n, stored as doubles for linear algebra.
using SpinConfig = Eigen::VectorXd;

inline bool is_valid_spins(const SpinConfig& sigma) {
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] != 1.0 && sigma[i] != -1.0) return false;
  return true;
}

// p(sigma) proportional to exp(0.5 <sigma, J sigma> + <h, sigma>).
struct IsingModel {
  int n = 0;
  Matrix J;
  Vector h;
};

inline constexpr double kSymTol = 1e-10;

// Builds a model, symmetrizing J and warning if the asymmetry was real.
inline IsingModel make_model(Matrix J, Vector h) {
  if (J.rows() != J.cols()) throw InvalidInputError("J must be square");
  if (J.rows() != h.size())
    throw InvalidInputError("dimensions of J and h disagree");
  if (J.rows() < 1) throw InvalidInputError("n must be >= 1");
  const double asym = (J - J.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymTol)
    std::cerr << "warning: J asymmetry " << asym << " exceeds " << kSymTol
              << "; symmetrizing\n";
  Matrix Js = 0.5 * (J + J.transpose());
  return IsingModel{static_cast<int>(Js.rows()), std::move(Js), std::move(h)};
}

// 0.5 <sigma, J sigma> + <h, sigma>
inline double energy(const IsingModel& m, const SpinConfig& sigma) {
  if (sigma.size() != m.n) throw InvalidInputError("energy: dimension mismatch");
  return 0.5 * sigma.dot(m.J * sigma) + m.h.dot(sigma);
}

// State index encoding: bit i of the index is (sigma_i + 1) / 2.
inline std::uint32_t spins_to_index(const SpinConfig& sigma) {
  std::uint32_t idx = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > 0.0) idx |= (1u << i);
  return idx;
}

inline SpinConfig index_to_spins(std::uint32_t idx, int n) {
  SpinConfig sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = (idx & (1u << i)) ? 1.0 : -1.0;
  return sigma;
}

// ---- JSON model format ----
// {"n": int, "J": row-major n*n array, "h": n array}
// Optional eigenform: {"n", "J_factors": {"U": row-major n*k, "lambda": k}, "h"}

inline IsingModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("n")) throw InvalidInputError("model JSON: missing \"n\"");
  const int n = j.at("n").get<int>();
  if (n < 1) throw InvalidInputError("model JSON: n must be >= 1");
  Vector h = Vector::Zero(n);
  if (j.contains("h")) {
    const auto& hv = j.at("h");
    if (static_cast<int>(hv.size()) != n)
      throw InvalidInputError("model JSON: h has wrong length");
    for (int i = 0; i < n; ++i) h[i] = hv[i].get<double>();
  }
  Matrix J;
  if (j.contains("J_factors")) {
    const auto& f = j.at("J_factors");
    const auto& lam = f.at("lambda");
    const int k = static_cast<int>(lam.size());
    const auto& uv = f.at("U");
    if (static_cast<int>(uv.size()) != n * k)
      throw InvalidInputError("model JSON: U has wrong size");
    Matrix U(n, k);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < k; ++c) U(r, c) = uv[r * k + c].get<double>();
    Vector l(k);
    for (int c = 0; c < k; ++c) l[c] = lam[c].get<double>();
    J = U * l.asDiagonal() * U.transpose();
  } else if (j.contains("J")) {
    const auto& jv = j.at("J");
    if (static_cast<int>(jv.size()) != n * n)
      throw InvalidInputError("model JSON: J has wrong size");
    J.resize(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) J(r, c) = jv[r * n + c].get<double>();
  } else {
    throw InvalidInputError("model JSON: missing \"J\" or \"J_factors\"");
  }
  return make_model(std::move(J), std::move(h));
}

inline nlohmann::json model_to_json(const IsingModel& m) {
  nlohmann::json j;
  j["n"] = m.n;
  std::vector<double> flat(static_cast<std::size_t>(m.n) * m.n);
  for (int r = 0; r < m.n; ++r)
    for (int c = 0; c < m.n; ++c) flat[r * m.n + c] = m.J(r, c);
  j["J"] = flat;
  j["h"] = std::vector<double>(m.h.data(), m.h.data() + m.n);
  return j;
}

// FNV-1a over the canonical serialization; used to guard cell-file reuse.
inline std::uint64_t model_hash(const IsingModel& m) {
  const std::string s = model_to_json(m).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace ising
