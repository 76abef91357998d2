#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ising/glauber.hpp"
#include "ising/hs_grid.hpp"
#include "ising/math.hpp"
#include "ising/model.hpp"
#include "ising/rng.hpp"
#include "ising/spectral.hpp"

namespace ising {

struct TemperingState {
  int level = 1;
  long long cell = 0;
  SpinConfig sigma;
};

struct SamplerReport {
  std::vector<SpinConfig> samples;
  long long trials = 0;
  long long steps_total = 0;
  double acceptance_rate = 0.0;
  double max_final_accept_log_prob = -std::numeric_limits<double>::infinity();
};

struct TemperingConfig {
  long long T_override = 0;       // steps per trajectory
  double C_T = 4.0;
  long long trial_budget = 0;     // per requested sample; 0: formula
  double accept_tol = 1e-9;       // slack before a positive log-prob errors
};

// Ladder accessor: levels 1..M_eff read the stored ladder directly;
// M_eff+1 is the top estimate (last entry) even when the ladder was
// collapsed because the bulk coupling vanishes.
inline double ladder_log_Z(const CellData& cell, int level, int M_eff) {
  if (level == M_eff + 1) return cell.log_Z.back();
  return cell.log_Z[static_cast<std::size_t>(level - 1)];
}

// When J_perp = 0 every ladder level is the same distribution, so the
// chain runs on a single level without changing the accepted sample law.
inline int effective_levels(const SpectralSplit& split,
                            const AnnealingSchedule& schedule) {
  return split.J_perp.norm() == 0.0 ? 1 : schedule.M;
}

// Tempering chain on {1..M_eff} x Grid x {-1,+1}^n with cached
// J_perp*sigma and <sigma, J_perp sigma>.
class TemperingChain {
 public:
  TemperingChain(const IsingModel& model, const SpectralSplit& split,
                 const GridSpec& grid, const std::vector<CellData>& cells,
                 int M_eff)
      : model_(&model),
        split_(&split),
        grid_(&grid),
        cells_(&cells),
        M_eff_(M_eff),
        schedule_(default_schedule(model.n)) {}

  void init(Rng& rng) {
    state_.level = 1;
    state_.cell = static_cast<long long>(
        rng.below(static_cast<std::uint64_t>(grid_->num_cells)));
    state_.sigma = sample_product((*cells_)[state_.cell].field, rng);
    refresh_cache();
  }

  void step(Rng& rng) {
    const double move = rng.uniform();
    if (move < 0.25) {
      if (state_.level < M_eff_) try_level_move(state_.level + 1, rng);
      return;
    }
    if (move < 0.5) {
      if (state_.level > 1) try_level_move(state_.level - 1, rng);
      return;
    }
    if (state_.level == 1 && rng.coin(0.5)) {
      state_.cell = static_cast<long long>(
          rng.below(static_cast<std::uint64_t>(grid_->num_cells)));
      state_.sigma = sample_product((*cells_)[state_.cell].field, rng);
      refresh_cache();
    }
    glauber_flip(rng);
  }

  const TemperingState& state() const { return state_; }
  double beta(int level) const { return schedule_.beta(level); }

 private:
  void try_level_move(int target, Rng& rng) {
    const CellData& cell = (*cells_)[state_.cell];
    const double log_alpha =
        (beta(target) - beta(state_.level)) * 0.5 * quad_ +
        ladder_log_Z(cell, state_.level, M_eff_) -
        ladder_log_Z(cell, target, M_eff_);
    if (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha)
      state_.level = target;
  }

  void glauber_flip(Rng& rng) {
    const int i = static_cast<int>(rng.below(model_->n));
    const Vector& field = (*cells_)[state_.cell].field;
    const double b = beta(state_.level);
    const double delta =
        b * (-2.0 * state_.sigma[i] * local_[i] + 2.0 * split_->J_perp(i, i)) -
        2.0 * state_.sigma[i] * field[i];
    if (rng.uniform() < logistic(delta)) {
      quad_ += -4.0 * state_.sigma[i] * local_[i] + 4.0 * split_->J_perp(i, i);
      local_ += (-2.0 * state_.sigma[i]) * split_->J_perp.col(i);
      state_.sigma[i] = -state_.sigma[i];
    }
  }

  void refresh_cache() {
    local_ = split_->J_perp * state_.sigma;
    quad_ = state_.sigma.dot(local_);
  }

  const IsingModel* model_;
  const SpectralSplit* split_;
  const GridSpec* grid_;
  const std::vector<CellData>* cells_;
  int M_eff_;
  AnnealingSchedule schedule_;
  TemperingState state_;
  Vector local_;
  double quad_ = 0.0;
};

// log of the terminal acceptance probability
//   Z-hat_M(y*) g_top(sigma) / (4 e max_y Z-hat_{M+1}(y) e^{c Tr J_- + 1}),
// which must be <= 0 whenever the ladder estimates are sane.
inline double final_accept_log_prob(const SpectralSplit& split,
                                    const GridSpec& grid,
                                    const std::vector<CellData>& cells,
                                    const TemperingState& state, int M_eff,
                                    double log_max_top,
                                    double accept_tol = 1e-9) {
  if (state.level != M_eff)
    throw InvalidInputError("final_accept_log_prob: state not at top level");
  const CellData& cell = cells[state.cell];
  const double c_trace =
      std::isfinite(split.c) ? split.c * split.minus_trace : 0.0;
  const double v = ladder_log_Z(cell, M_eff, M_eff) +
                   log_g_top(split, grid, cell, state.sigma) -
                   std::log(4.0) - 1.0 - log_max_top - c_trace - 1.0;
  if (v > accept_tol)
    throw ConsistencyError(
        "final_accept_log_prob: positive log-probability " +
        std::to_string(v) + "; ladder estimates are inconsistent");
  return std::min(v, 0.0);
}

inline double max_top_log_Z(const std::vector<CellData>& cells) {
  double m = -std::numeric_limits<double>::infinity();
  for (const CellData& c : cells)
    if (!c.failed) m = std::max(m, c.log_Z.back());
  return m;
}

inline long long default_trajectory_steps(const IsingModel& model,
                                          const SpectralSplit& split,
                                          int M_eff, double eps, double C_T) {
  const double lg =
      std::log(std::max(model.n * std::max(split.op_norm, 1.0) / eps, 2.0));
  if (M_eff == 1) {
    // Single-level chain: the hot-level resets make it mix in O(n log) time.
    return static_cast<long long>(std::ceil(C_T * model.n * lg)) + 1;
  }
  const double n4 = std::pow(static_cast<double>(model.n), 4.0);
  return static_cast<long long>(
             std::ceil(C_T * n4 * std::max(split.d, 1) * lg)) +
         1;
}

inline SamplerReport sample(const IsingModel& model, const SpectralSplit& split,
                            const GridSpec& grid, const EstimateResult& est,
                            double eps, long long num_samples,
                            std::uint64_t seed,
                            const TemperingConfig& cfg = {}) {
  if (est.model_hash != model_hash(model))
    throw InvalidInputError("sample: estimate was computed for another model");
  if (est.cells.empty())
    throw InvalidInputError("sample: estimate carries no cell ladders");
  if (static_cast<long long>(est.cells.size()) != grid.num_cells)
    throw InvalidInputError("sample: estimate cells do not match the grid");
  const AnnealingSchedule schedule = default_schedule(model.n);
  const int M_eff = effective_levels(split, schedule);
  const double log_max_top = max_top_log_Z(est.cells);
  const long long T =
      cfg.T_override > 0
          ? cfg.T_override
          : default_trajectory_steps(model, split, M_eff, eps, cfg.C_T);
  const double c_trace =
      std::isfinite(split.c) ? split.c * split.minus_trace : 0.0;
  const long long budget_per_sample =
      cfg.trial_budget > 0
          ? cfg.trial_budget
          : static_cast<long long>(std::ceil(
                64.0 * model.n * std::exp(c_trace) *
                static_cast<double>(grid.num_cells)));

  SamplerReport rep;
  rep.samples.reserve(static_cast<std::size_t>(num_samples));
  const Rng root(seed);
  TemperingChain chain(model, split, grid, est.cells, M_eff);
  for (long long s = 0; s < num_samples; ++s) {
    bool accepted = false;
    for (long long trial = 0; trial < budget_per_sample; ++trial) {
      Rng rng = root.derive({static_cast<std::uint64_t>(s),
                             static_cast<std::uint64_t>(trial)});
      chain.init(rng);
      for (long long t = 0; t < T; ++t) chain.step(rng);
      rep.steps_total += T;
      ++rep.trials;
      if (chain.state().level != M_eff) continue;
      const double a =
          final_accept_log_prob(split, grid, est.cells, chain.state(), M_eff,
                                log_max_top, cfg.accept_tol);
      rep.max_final_accept_log_prob =
          std::max(rep.max_final_accept_log_prob, a);
      if (std::log(rng.uniform()) < a) {
        rep.samples.push_back(chain.state().sigma);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw SamplerFailure("sample: trial budget " +
                           std::to_string(budget_per_sample) +
                           " exhausted after " + std::to_string(rep.trials) +
                           " total trials");
  }
  rep.acceptance_rate =
      rep.trials > 0
          ? static_cast<double>(rep.samples.size()) / rep.trials
          : 0.0;
  return rep;
}

// Generic rejection sampler: accepts x ~ proposal with probability
// exp(log_density_ratio(x) - log_C). Geometric trials, success >= 1/(2C)
// when the proposal is within TV eps/(2C) of the true one.
template <class T>
struct RejectionResult {
  T sample;
  long long trials = 0;
};

template <class T>
RejectionResult<T> rejection_sample_generic(
    const std::function<T(Rng&)>& proposal,
    const std::function<double(const T&)>& log_density_ratio, double log_C,
    Rng& rng, long long max_trials = 1000000) {
  for (long long t = 1; t <= max_trials; ++t) {
    T x = proposal(rng);
    const double lr = log_density_ratio(x);
    if (lr > log_C + 1e-9)
      throw ConsistencyError("rejection_sample_generic: density ratio " +
                             std::to_string(lr) + " above stated bound " +
                             std::to_string(log_C));
    if (std::log(rng.uniform()) < lr - log_C)
      return {std::move(x), t};
  }
  throw SamplerFailure("rejection_sample_generic: no acceptance within " +
                       std::to_string(max_trials) + " trials");
}

// ---- explicit extended-space kernel (test oracle, tiny instances) ----

// State index = (level-1) * |Grid| * 2^n + cell * 2^n + spin index.
inline Matrix extended_kernel(const IsingModel& model,
                              const SpectralSplit& split, const GridSpec& grid,
                              const std::vector<CellData>& cells, int M_eff) {
  if (model.n > 6 || grid.num_cells > 4 || M_eff > 6)
    throw CapacityError("extended_kernel: instance too large");
  const long long spins = 1ll << model.n;
  const long long per_level = grid.num_cells * spins;
  const long long total = M_eff * per_level;
  const AnnealingSchedule schedule = default_schedule(model.n);

  // Per (level, cell) single-site heat-bath kernels.
  std::vector<Matrix> G(static_cast<std::size_t>(M_eff * grid.num_cells));
  for (int l = 1; l <= M_eff; ++l)
    for (long long y = 0; y < grid.num_cells; ++y)
      G[(l - 1) * grid.num_cells + y] = transition_matrix(IsingModel{
          model.n, Matrix(schedule.beta(l) * split.J_perp), cells[y].field});

  // Product-law reset distribution per cell.
  Matrix reset(grid.num_cells, spins);
  for (long long y = 0; y < grid.num_cells; ++y)
    for (long long s = 0; s < spins; ++s) {
      const SpinConfig sig = index_to_spins(static_cast<std::uint32_t>(s),
                                            model.n);
      double lp = 0.0;
      for (int i = 0; i < model.n; ++i)
        lp += -log1pexp(-2.0 * sig[i] * cells[y].field[i]);
      reset(y, s) = std::exp(lp);
    }

  Matrix K = Matrix::Zero(total, total);
  for (int l = 1; l <= M_eff; ++l)
    for (long long y = 0; y < grid.num_cells; ++y)
      for (long long s = 0; s < spins; ++s) {
        const long long from = (l - 1) * per_level + y * spins + s;
        const SpinConfig sig =
            index_to_spins(static_cast<std::uint32_t>(s), model.n);
        const double quad = sig.dot(split.J_perp * sig);
        // Up and down proposals, 1/4 each.
        for (int dir : {+1, -1}) {
          const int tgt = l + dir;
          if (tgt < 1 || tgt > M_eff) {
            K(from, from) += 0.25;
            continue;
          }
          const double log_alpha =
              (schedule.beta(tgt) - schedule.beta(l)) * 0.5 * quad +
              ladder_log_Z(cells[y], l, M_eff) -
              ladder_log_Z(cells[y], tgt, M_eff);
          const double alpha = std::min(1.0, std::exp(log_alpha));
          K(from, (tgt - 1) * per_level + y * spins + s) += 0.25 * alpha;
          K(from, from) += 0.25 * (1.0 - alpha);
        }
        // Heat-bath half-move, with the hot-level reset.
        const Matrix& Gl = G[(l - 1) * grid.num_cells + y];
        for (long long s2 = 0; s2 < spins; ++s2)
          K(from, (l - 1) * per_level + y * spins + s2) +=
              (l == 1 ? 0.25 : 0.5) * Gl(s, s2);
        if (l == 1) {
          for (long long y2 = 0; y2 < grid.num_cells; ++y2) {
            const Matrix& G2 = G[y2];
            for (long long s1 = 0; s1 < spins; ++s1) {
              const double p_reset =
                  reset(y2, s1) / static_cast<double>(grid.num_cells);
              if (p_reset == 0.0) continue;
              for (long long s2 = 0; s2 < spins; ++s2)
                K(from, y2 * spins + s2) += 0.25 * p_reset * G2(s1, s2);
            }
          }
        }
      }
  return K;
}

// Stationary law of the extended chain: pi(l, y, sigma) proportional to
// exp(beta_l 0.5 <s,J_perp s> + <h(y), s>) / Z-hat_l(y).
inline std::vector<double> extended_stationary_log(
    const IsingModel& model, const SpectralSplit& split, const GridSpec& grid,
    const std::vector<CellData>& cells, int M_eff) {
  const long long spins = 1ll << model.n;
  const AnnealingSchedule schedule = default_schedule(model.n);
  std::vector<double> lp;
  lp.reserve(static_cast<std::size_t>(M_eff * grid.num_cells * spins));
  for (int l = 1; l <= M_eff; ++l)
    for (long long y = 0; y < grid.num_cells; ++y)
      for (long long s = 0; s < spins; ++s) {
        const SpinConfig sig =
            index_to_spins(static_cast<std::uint32_t>(s), model.n);
        lp.push_back(schedule.beta(l) * 0.5 * sig.dot(split.J_perp * sig) +
                     cells[y].field.dot(sig) -
                     ladder_log_Z(cells[y], l, M_eff));
      }
  const double lz = log_sum_exp(lp);
  for (double& v : lp) v -= lz;
  return lp;
}

}  // namespace ising
