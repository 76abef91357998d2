#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ising/errors.hpp"
#include "ising/math.hpp"
#include "ising/model.hpp"
#include "ising/parallel.hpp"
#include "ising/rng.hpp"

namespace ising {

// Temperature ladder beta_l = (l-1)/n for l = 1..M, M = n+1.
struct AnnealingSchedule {
  int M = 1;
  int n = 1;

  double beta(int level) const { return static_cast<double>(level - 1) / n; }
};

inline AnnealingSchedule default_schedule(int n) {
  return AnnealingSchedule{n + 1, n};
}

struct EstimatorParams {
  long long N = 1;   // samples per level
  int R = 1;         // independent trials, median taken
  double log_Z1 = 0.0;
};

// N = ceil(320 e M / eps^2) covers a per-level second-moment ratio of e;
// R = ceil(32 log(1/delta)) drives the median failure probability to delta.
inline EstimatorParams default_params(double eps, double delta, int M,
                                      double log_Z1) {
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("default_params: eps, delta must be in (0,1)");
  EstimatorParams p;
  p.N = static_cast<long long>(
      std::ceil(320.0 * std::exp(1.0) * M / (eps * eps)));
  p.R = static_cast<int>(std::ceil(32.0 * std::log(1.0 / delta)));
  p.log_Z1 = log_Z1;
  return p;
}

using LevelSampler = std::function<SpinConfig(Rng&)>;
using LogRatio = std::function<double(const SpinConfig&)>;

// log( (1/N) sum_k exp(log_g(x_k)) ), the one-level ratio estimate.
inline double estimate_level_ratio(const LevelSampler& sampler,
                                   const LogRatio& log_g, long long N,
                                   Rng& rng) {
  if (N < 1) throw InvalidInputError("estimate_level_ratio: N must be >= 1");
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(N));
  for (long long k = 0; k < N; ++k) vals.push_back(log_g(sampler(rng)));
  return log_sum_exp(vals) - std::log(static_cast<double>(N));
}

// Telescoped ladder: returns log Z-hat_l for l = 2..M+1 as medians over R
// trials. sampler_factory(level, trial_rng) builds a fresh sampler for
// that trial so chains do not leak state across trials.
struct AnnealResult {
  std::vector<double> log_Z;  // index l-2 holds log Z-hat_l, l = 2..M+1
  int failed_trials = 0;
};

inline AnnealResult anneal_partition(
    const AnnealingSchedule& schedule,
    const std::function<LevelSampler(int level, Rng&)>& sampler_factory,
    const std::function<LogRatio(int level)>& log_g_factory,
    const EstimatorParams& params, const Rng& rng, int threads = 1) {
  const int M = schedule.M;
  if (M < 1) throw InvalidInputError("anneal_partition: M must be >= 1");
  if (params.R < 1) throw InvalidInputError("anneal_partition: R must be >= 1");

  std::vector<std::vector<double>> trial_ladders(params.R);
  std::vector<char> failed(params.R, 0);
  parallel_for(threads, params.R, [&](std::int64_t r) {
    Rng trial_rng = rng.derive({0x414e4e, static_cast<std::uint64_t>(r)});
    std::vector<double> ladder;
    ladder.reserve(M);
    double acc = params.log_Z1;
    try {
      for (int level = 1; level <= M; ++level) {
        Rng level_rng = trial_rng.derive(static_cast<std::uint64_t>(level));
        LevelSampler sampler = sampler_factory(level, level_rng);
        acc += estimate_level_ratio(sampler, log_g_factory(level), params.N,
                                    level_rng);
        ladder.push_back(acc);
      }
      trial_ladders[r] = std::move(ladder);
    } catch (const SamplerFailure&) {
      failed[r] = 1;
    }
  });

  AnnealResult out;
  for (char f : failed) out.failed_trials += f;
  if (out.failed_trials > params.R / 2)
    throw EstimatorError("anneal_partition: majority of trials failed (" +
                         std::to_string(out.failed_trials) + "/" +
                         std::to_string(params.R) + ")");
  out.log_Z.resize(M);
  for (int level = 0; level < M; ++level) {
    std::vector<double> vals;
    for (int r = 0; r < params.R; ++r)
      if (!failed[r]) vals.push_back(trial_ladders[r][level]);
    out.log_Z[level] = median_of(std::move(vals));
  }
  return out;
}

}  // namespace ising
