#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "ising/brute_force.hpp"
#include "ising/glauber.hpp"
#include "ising/math.hpp"
#include "ising/model.hpp"
#include "ising/parallel.hpp"
#include "ising/rng.hpp"
#include "ising/spectral.hpp"

namespace ising {

// Variational problem for the tilt neutralizing the negative part:
// G(u) = log E_{P_{J_perp, base_field}}[exp(-<u, J_minus sigma>)]
//        + 0.5 <u, J_minus u>,
// whose critical points solve u = E_{P_{J_perp, base_field - J_minus u}}[sigma].
struct TiltProblem {
  Matrix J_perp;
  Matrix J_minus;  // PSD; regularized copy when built via make_tilt_problem
  Vector base_field;
  double c = 2.0;
  double epsilon = 0.1;
  double delta = 0.1;

  int n() const { return static_cast<int>(base_field.size()); }
};

// Regularizes J_minus by (eps/(c n)) I so it is strictly positive definite.
// A diagonal shift of J leaves the spin distribution unchanged, so this
// costs nothing downstream; only Tr(J_minus) grows by eps/c.
inline TiltProblem make_tilt_problem(const SpectralSplit& split,
                                     Vector base_field, double eps,
                                     double delta) {
  if (!(std::isfinite(split.c)))
    throw InvalidInputError("make_tilt_problem: c must be finite");
  TiltProblem p;
  p.J_perp = split.J_perp;
  p.J_minus = split.J_minus +
              (eps / (split.c * split.n)) * Matrix::Identity(split.n, split.n);
  p.base_field = std::move(base_field);
  p.c = split.c;
  p.epsilon = eps;
  p.delta = delta;
  return p;
}

struct TiltSolution {
  Vector u;
  Vector tilt;  // -J_minus * u
  double grad_norm_estimate = 0.0;
  long long sgd_iterations = 0;
  long long samples_used = 0;
  bool verified = true;
};

// Draws an (approximate) sample from P_{J_perp, field}.
using FieldSampler = std::function<SpinConfig(const Vector& field, Rng&)>;

// Exact product sampler when the bulk coupling vanishes; otherwise a
// persistent warm-started Glauber chain run `steps` per call.
inline FieldSampler make_field_sampler(const Matrix& J_perp,
                                       double perp_op_norm, double tv_target,
                                       long long steps_override = 0) {
  const int n = static_cast<int>(J_perp.rows());
  if (J_perp.norm() == 0.0) {
    return [](const Vector& field, Rng& rng) {
      return sample_product(field, rng);
    };
  }
  long long steps = steps_override > 0
                        ? steps_override
                        : mixing_steps_gap(n, tv_target, perp_op_norm);
  struct State {
    IsingModel model;
    std::unique_ptr<GlauberChain> chain;
  };
  auto st = std::make_shared<State>();
  st->model = IsingModel{n, J_perp, Vector::Zero(n)};
  return [st, steps](const Vector& field, Rng& rng) {
    st->model.h = field;
    if (!st->chain)
      st->chain = std::make_unique<GlauberChain>(st->model,
                                                 uniform_spins(st->model.n, rng));
    st->chain->run(steps, rng);
    return st->chain->state();
  };
}

// One stochastic gradient draw: -J_minus (sigma - u) with
// sigma ~ P_{J_perp, base_field - J_minus u}. Unbiased under exact sampling.
inline Vector gradient_oracle(const TiltProblem& p, const Vector& u,
                              const FieldSampler& sampler, Rng& rng) {
  const SpinConfig sigma = sampler(p.base_field - p.J_minus * u, rng);
  return -(p.J_minus * (sigma - u));
}

struct TiltConfig {
  long long max_iters = 20000;          // per-trajectory cap
  long long phase2_samples = 0;         // 0: ceil(64/eps^2)
  long long sampler_steps = 0;          // 0: mixing-time formula
  long long refine_samples = 2000;      // mean-refinement pass; 0 disables
  double tv_target = 0.0;               // 0: delta / (2 * total oracle budget)
};

namespace detail {

inline double tilt_smoothness(const TiltProblem& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.J_minus, Eigen::EigenvaluesOnly);
  const double op = es.eigenvalues().cwiseAbs().maxCoeff();
  return p.c * op * op + op;
}

inline double tilt_sigma_g(const TiltProblem& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.J_minus, Eigen::EigenvaluesOnly);
  return 2.0 * es.eigenvalues().cwiseAbs().maxCoeff() * std::sqrt(p.n());
}

}  // namespace detail

// Two-phase randomized stochastic gradient: S independent trajectories
// from u = 0, each stopped at a uniformly random iterate; phase two
// re-estimates each candidate's gradient norm with fresh samples and
// keeps the smallest. A final mean-refinement pass replaces u by the
// sampled mean under the chosen tilt, which pins coordinates in the
// null space of J_minus that the gradient cannot see.
inline TiltSolution solve_tilt(const TiltProblem& p, const Rng& rng,
                               const TiltConfig& cfg = {}, int threads = 1) {
  const int n = p.n();
  TiltSolution sol;
  sol.u = Vector::Zero(n);
  sol.tilt = Vector::Zero(n);
  if (p.J_minus.norm() == 0.0) return sol;

  const double L = detail::tilt_smoothness(p);
  const double sigma_g = detail::tilt_sigma_g(p);
  const int S = std::max(1, static_cast<int>(
                                std::ceil(std::log2(2.0 / p.delta))));
  const long long N_it = std::min<long long>(
      cfg.max_iters, static_cast<long long>(
                         std::ceil(10.0 * L * L * n / (p.epsilon * p.epsilon))));
  const long long K2 = cfg.phase2_samples > 0
                           ? cfg.phase2_samples
                           : static_cast<long long>(
                                 std::ceil(64.0 / (p.epsilon * p.epsilon)));
  const double D_tilde = std::sqrt(static_cast<double>(n));
  const double step = std::min(
      1.0 / (2.0 * L),
      D_tilde / (sigma_g * std::sqrt(static_cast<double>(std::max<long long>(
                     N_it, 1)))));
  const double tv = cfg.tv_target > 0.0
                        ? cfg.tv_target
                        : p.delta / (2.0 * static_cast<double>(S) *
                                     (N_it + K2 + cfg.refine_samples));

  std::vector<Vector> candidates(S);
  std::vector<long long> iters(S, 0);
  parallel_for(threads, S, [&](std::int64_t s) {
    Rng traj_rng = rng.derive({0x54494c54, static_cast<std::uint64_t>(s)});
    FieldSampler sampler =
        make_field_sampler(p.J_perp, op_norm_of(p.J_perp), tv, cfg.sampler_steps);
    const long long stop = 1 + static_cast<long long>(traj_rng.below(
                                   static_cast<std::uint64_t>(N_it)));
    Vector u = Vector::Zero(n);
    for (long long t = 0; t < stop; ++t)
      u -= step * gradient_oracle(p, u, sampler, traj_rng);
    candidates[s] = u;
    iters[s] = stop;
  });

  std::vector<double> norms(S, 0.0);
  parallel_for(threads, S, [&](std::int64_t s) {
    Rng est_rng = rng.derive({0x50483200, static_cast<std::uint64_t>(s)});
    FieldSampler sampler =
        make_field_sampler(p.J_perp, op_norm_of(p.J_perp), tv, cfg.sampler_steps);
    Vector g = Vector::Zero(n);
    for (long long k = 0; k < K2; ++k)
      g += gradient_oracle(p, candidates[s], sampler, est_rng);
    norms[s] = (g / static_cast<double>(K2)).norm();
  });

  int best = 0;
  for (int s = 1; s < S; ++s)
    if (norms[s] < norms[best]) best = s;
  sol.u = candidates[best];
  sol.grad_norm_estimate = norms[best];
  for (long long it : iters) sol.sgd_iterations += it;
  sol.samples_used = sol.sgd_iterations + static_cast<long long>(S) * K2;
  sol.verified = norms[best] <= p.epsilon;

  if (cfg.refine_samples > 0) {
    Rng ref_rng = rng.derive(0x524546);
    FieldSampler sampler =
        make_field_sampler(p.J_perp, op_norm_of(p.J_perp), tv, cfg.sampler_steps);
    const Vector field = p.base_field - p.J_minus * sol.u;
    Vector mean = Vector::Zero(n);
    for (long long k = 0; k < cfg.refine_samples; ++k)
      mean += sampler(field, ref_rng);
    sol.u = mean / static_cast<double>(cfg.refine_samples);
    sol.samples_used += cfg.refine_samples;
  }
  sol.tilt = -(p.J_minus * sol.u);
  return sol;
}

// ---- brute-force oracles (tests and small-n verification) ----

inline IsingModel tilted_model(const TiltProblem& p, const Vector& u) {
  return IsingModel{p.n(), p.J_perp,
                    Vector(p.base_field - p.J_minus * u)};
}

// || u - E_{P_{J_perp, base - J_minus u}}[sigma] ||_inf
inline double fixed_point_residual(const TiltProblem& p, const Vector& u) {
  return (u - brute_force_mean(tilted_model(p, u))).cwiseAbs().maxCoeff();
}

// log E_{P_{J_perp, base - J_minus u}}[exp(-0.5 <s-u, J_minus (s-u)>)];
// the log acceptance mass of rejection against the tilted proposal.
inline double log_importance_bound(const TiltProblem& p, const Vector& u) {
  const IsingModel m = tilted_model(p, u);
  detail::check_capacity(m.n, kBruteForceMaxN, "log_importance_bound");
  const DiscreteDistribution d = brute_force_distribution(m);
  std::vector<double> terms;
  terms.reserve(d.log_p.size());
  for (std::uint64_t idx = 0; idx < d.log_p.size(); ++idx) {
    const Vector v =
        index_to_spins(static_cast<std::uint32_t>(idx), m.n) - u;
    terms.push_back(d.log_p[idx] - 0.5 * v.dot(p.J_minus * v));
  }
  return log_sum_exp(terms);
}

// Exact G(u) by enumeration.
inline double brute_force_G(const TiltProblem& p, const Vector& u) {
  const IsingModel base{p.n(), p.J_perp, p.base_field};
  detail::check_capacity(base.n, kBruteForceMaxN, "brute_force_G");
  const DiscreteDistribution d = brute_force_distribution(base);
  std::vector<double> terms;
  terms.reserve(d.log_p.size());
  for (std::uint64_t idx = 0; idx < d.log_p.size(); ++idx) {
    const Vector s = index_to_spins(static_cast<std::uint32_t>(idx), base.n);
    terms.push_back(d.log_p[idx] - u.dot(p.J_minus * s));
  }
  return log_sum_exp(terms) + 0.5 * u.dot(p.J_minus * u);
}

// Exact gradient: J_minus (u - E_{tilted}[sigma]).
inline Vector brute_force_G_gradient(const TiltProblem& p, const Vector& u) {
  return p.J_minus * (u - brute_force_mean(tilted_model(p, u)));
}

}  // namespace ising
