#pragma once

#include <cmath>
#include <optional>

#include "ising/brute_force.hpp"
#include "ising/math.hpp"
#include "ising/model.hpp"
#include "ising/rng.hpp"

namespace ising {

struct ChainConfig {
  long long steps = 1;
  std::uint64_t seed = 0;
  std::optional<SpinConfig> initial;  // default: uniform random
};

// Energy change from flipping site i; the diagonal of J cancels
// (sigma_i^2 = 1), hence the +2 J_ii term.
inline double flip_delta_energy(const IsingModel& m, const SpinConfig& sigma,
                                int i) {
  return -2.0 * sigma[i] * (m.J.row(i).dot(sigma)) + 2.0 * m.J(i, i) -
         2.0 * sigma[i] * m.h[i];
}

// Heat-bath acceptance p(sigma^(i)) / (p(sigma^(i)) + p(sigma)).
inline double flip_probability(const IsingModel& m, const SpinConfig& sigma,
                               int i) {
  if (i < 0 || i >= m.n) throw InvalidInputError("flip_probability: bad index");
  if (sigma.size() != m.n)
    throw InvalidInputError("flip_probability: dimension mismatch");
  return logistic(flip_delta_energy(m, sigma, i));
}

// Independent spins with sigma_i = +1 w.p. e^{h_i} / (e^{h_i} + e^{-h_i}).
inline SpinConfig sample_product(const Vector& field, Rng& rng) {
  SpinConfig sigma(field.size());
  for (Eigen::Index i = 0; i < field.size(); ++i)
    sigma[i] = rng.uniform() < logistic(2.0 * field[i]) ? 1.0 : -1.0;
  return sigma;
}

inline SpinConfig uniform_spins(int n, Rng& rng) {
  SpinConfig sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = rng.coin(0.5) ? 1.0 : -1.0;
  return sigma;
}

// Single-site heat-bath chain with a cached local field J*sigma, so a
// step is O(1) to evaluate and O(n) only when a flip is accepted.
class GlauberChain {
 public:
  GlauberChain(const IsingModel& m, SpinConfig init)
      : model_(&m), sigma_(std::move(init)), local_(m.J * sigma_) {}

  void step(Rng& rng) {
    const int i = static_cast<int>(rng.below(model_->n));
    const double delta = -2.0 * sigma_[i] * local_[i] + 2.0 * model_->J(i, i) -
                         2.0 * sigma_[i] * model_->h[i];
    if (rng.uniform() < logistic(delta)) flip(i);
  }

  void run(long long steps, Rng& rng) {
    for (long long t = 0; t < steps; ++t) step(rng);
  }

  void reset(SpinConfig init) {
    sigma_ = std::move(init);
    local_ = model_->J * sigma_;
  }

  const SpinConfig& state() const { return sigma_; }

 private:
  void flip(int i) {
    local_ += (-2.0 * sigma_[i]) * model_->J.col(i);
    sigma_[i] = -sigma_[i];
  }

  const IsingModel* model_;
  SpinConfig sigma_;
  Vector local_;
};

inline SpinConfig glauber_run(const IsingModel& m, const ChainConfig& cfg) {
  if (cfg.steps < 1) throw InvalidInputError("glauber_run: steps must be >= 1");
  Rng rng(cfg.seed);
  SpinConfig init = cfg.initial ? *cfg.initial : uniform_spins(m.n, rng);
  if (init.size() != m.n)
    throw InvalidInputError("glauber_run: initial state has wrong size");
  GlauberChain chain(m, std::move(init));
  chain.run(cfg.steps, rng);
  return chain.state();
}

// Step counts. The n^2 form covers any PSD bulk with ||J||_op <= 1; the
// gap form is sharper when ||J||_op < 1 strictly.
inline long long mixing_steps_psd_unit(int n, double eps, double constant = 20.0) {
  return static_cast<long long>(
      std::ceil(constant * n * static_cast<double>(n) * std::log(n / eps)));
}

inline long long mixing_steps_gap(int n, double eps, double op_norm,
                                  double constant = 20.0) {
  const double gap = 1.0 - op_norm;
  if (!(gap > 0.0)) return mixing_steps_psd_unit(n, eps, constant);
  return static_cast<long long>(std::ceil(constant * n * std::log(n / eps) / gap));
}

// Explicit one-step kernel; test oracle only.
inline Matrix transition_matrix(const IsingModel& m) {
  if (m.n > 10) throw CapacityError("transition_matrix: n > 10");
  const std::uint32_t states = 1u << m.n;
  Matrix K = Matrix::Zero(states, states);
  for (std::uint32_t idx = 0; idx < states; ++idx) {
    const SpinConfig sigma = index_to_spins(idx, m.n);
    double stay = 0.0;
    for (int i = 0; i < m.n; ++i) {
      const double p = flip_probability(m, sigma, i);
      K(idx, idx ^ (1u << i)) += p / m.n;
      stay += (1.0 - p) / m.n;
    }
    K(idx, idx) += stay;
  }
  return K;
}

}  // namespace ising
