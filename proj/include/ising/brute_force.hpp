#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ising/math.hpp"
#include "ising/model.hpp"

namespace ising {

inline constexpr int kBruteForceMaxN = 25;

// Exact 2^n-state distribution, log-probabilities indexed by the binary
// state encoding (bit i = (sigma_i + 1) / 2).
struct DiscreteDistribution {
  int n = 0;
  std::vector<double> log_p;
};

namespace detail {

inline void check_capacity(int n, int cap, const char* what) {
  if (n > cap)
    throw CapacityError(std::string(what) + ": n > " + std::to_string(cap));
}

// Enumerates all states in Gray-code order so each step flips one spin and
// the energy updates in O(n). visit(state_index, energy).
template <class Visit>
void enumerate_energies(const IsingModel& m, Visit&& visit) {
  const int n = m.n;
  SpinConfig sigma = SpinConfig::Constant(n, -1.0);
  Vector local = m.J * sigma;  // (J sigma)
  double e = 0.5 * sigma.dot(local) + m.h.dot(sigma);
  std::uint32_t idx = 0;  // standard binary index of the current sigma
  const std::uint64_t total = 1ull << n;
  visit(0u, e);
  for (std::uint64_t t = 1; t < total; ++t) {
    const int i = __builtin_ctzll(t);  // bit flipped by the Gray step
    const double delta =
        -2.0 * sigma[i] * local[i] + 2.0 * m.J(i, i) - 2.0 * sigma[i] * m.h[i];
    e += delta;
    local += (-2.0 * sigma[i]) * m.J.col(i);
    sigma[i] = -sigma[i];
    idx ^= (1u << i);
    visit(idx, e);
  }
}

}  // namespace detail

inline double brute_force_log_partition(const IsingModel& m) {
  detail::check_capacity(m.n, kBruteForceMaxN, "brute_force_log_partition");
  double mx = -std::numeric_limits<double>::infinity();
  detail::enumerate_energies(m, [&](std::uint32_t, double e) {
    if (e > mx) mx = e;
  });
  double s = 0.0;
  detail::enumerate_energies(
      m, [&](std::uint32_t, double e) { s += std::exp(e - mx); });
  return mx + std::log(s);
}

inline DiscreteDistribution brute_force_distribution(const IsingModel& m) {
  detail::check_capacity(m.n, kBruteForceMaxN, "brute_force_distribution");
  DiscreteDistribution d;
  d.n = m.n;
  d.log_p.assign(1ull << m.n, 0.0);
  detail::enumerate_energies(
      m, [&](std::uint32_t idx, double e) { d.log_p[idx] = e; });
  const double lz = log_sum_exp(d.log_p);
  for (double& v : d.log_p) v -= lz;
  return d;
}

// Exact E[sigma] and Cov(sigma).
inline std::pair<Vector, Matrix> brute_force_mean_cov(const IsingModel& m) {
  const DiscreteDistribution d = brute_force_distribution(m);
  const int n = m.n;
  Vector mean = Vector::Zero(n);
  Matrix second = Matrix::Zero(n, n);
  for (std::uint64_t idx = 0; idx < d.log_p.size(); ++idx) {
    const double p = std::exp(d.log_p[idx]);
    const SpinConfig s = index_to_spins(static_cast<std::uint32_t>(idx), n);
    mean += p * s;
    second += p * (s * s.transpose());
  }
  return {mean, second - mean * mean.transpose()};
}

// Mean only; avoids the n x n accumulation.
inline Vector brute_force_mean(const IsingModel& m) {
  const DiscreteDistribution d = brute_force_distribution(m);
  Vector mean = Vector::Zero(m.n);
  for (std::uint64_t idx = 0; idx < d.log_p.size(); ++idx)
    mean += std::exp(d.log_p[idx]) *
            index_to_spins(static_cast<std::uint32_t>(idx), m.n);
  return mean;
}

inline double tv_distance(const DiscreteDistribution& p,
                          const DiscreteDistribution& q) {
  if (p.log_p.size() != q.log_p.size())
    throw InvalidInputError("tv_distance: support mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.log_p.size(); ++i)
    s += std::abs(std::exp(p.log_p[i]) - std::exp(q.log_p[i]));
  return 0.5 * s;
}

// TV between an empirical histogram (counts over state indices) and an
// exact distribution.
inline double tv_to_counts(const DiscreteDistribution& p,
                           const std::vector<std::uint64_t>& counts,
                           std::uint64_t total) {
  if (counts.size() != p.log_p.size())
    throw InvalidInputError("tv_to_counts: support mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    s += std::abs(static_cast<double>(counts[i]) / total - std::exp(p.log_p[i]));
  return 0.5 * s;
}

}  // namespace ising
