#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <vector>

#include <json.hpp>

#include "ising/annealing.hpp"
#include "ising/brute_force.hpp"
#include "ising/glauber.hpp"
#include "ising/math.hpp"
#include "ising/model.hpp"
#include "ising/parallel.hpp"
#include "ising/rng.hpp"
#include "ising/spectral.hpp"
#include "ising/tilt.hpp"

namespace ising {

// Uniform grid of hypercube cells covering [-L, L]^d in the spike
// subspace coordinates; d = 0 degenerates to a single cell at the origin.
struct GridSpec {
  int d = 0;
  double L = 0.0;
  double eta = 1.0;
  int cells_per_dim = 1;
  long long num_cells = 1;

  Vector cell_center(long long idx) const {
    Vector y(d);
    for (int j = 0; j < d; ++j) {
      const long long digit = idx % cells_per_dim;
      idx /= cells_per_dim;
      y[j] = -L + (static_cast<double>(digit) + 0.5) * eta;
    }
    return y;
  }
};

struct GridOverrides {
  double eta = 0.0;           // 0: theoretical bound
  double L = 0.0;             // 0: tail-mass formula
  long long cell_budget = 100000;
  bool force = false;
};

// L catches all but ~eps/2 of the Gaussian mass; eta keeps the exponent
// variation over one cell bounded. The cutoff is then rounded up so
// 2L/eta is integral.
inline GridSpec build_grid(const SpectralSplit& split, double eps,
                           const GridOverrides& ov = {}) {
  if (!(eps > 0.0 && eps < 1.0))
    throw InvalidInputError("build_grid: eps must be in (0,1)");
  GridSpec g;
  g.d = split.d;
  if (g.d == 0) return g;
  const int n = split.n;
  const double op = split.op_norm;
  double L = ov.L > 0.0
                 ? ov.L
                 : std::sqrt(op) +
                       std::sqrt(2.0 * std::log(4.0 * n * std::max(g.d, 1) /
                                                eps) /
                                 n);
  double eta_bound = 1.0 / (n * g.d * L + 2.0 * n * std::sqrt(op * g.d));
  double eta = ov.eta > 0.0 ? ov.eta : eta_bound;
  if (eta > 2.0 * L)
    throw InvalidInputError("build_grid: eta exceeds the grid extent 2L");
  g.cells_per_dim = static_cast<int>(std::ceil(2.0 * L / eta));
  g.eta = eta;
  g.L = 0.5 * g.cells_per_dim * eta;
  g.num_cells = 1;
  for (int j = 0; j < g.d; ++j) {
    g.num_cells *= g.cells_per_dim;
    if (g.num_cells > ov.cell_budget && !ov.force)
      throw CapacityError("build_grid: cell count " +
                          std::to_string(std::pow(g.cells_per_dim, g.d)) +
                          " exceeds budget " + std::to_string(ov.cell_budget));
  }
  return g;
}

// log Z of the zero-coupling model with the given field.
inline double log_Z1(const Vector& field) {
  double s = field.size() * 0.6931471805599453094172321;
  for (Eigen::Index i = 0; i < field.size(); ++i) s += log_cosh(field[i]);
  return s;
}

// (1/2n) <sigma, J_perp sigma>; in [0, 1/2] whenever 0 <= J_perp <= I.
inline double log_g_bulk(const SpectralSplit& split, const SpinConfig& sigma) {
  return 0.5 / split.n * sigma.dot(split.J_perp * sigma);
}

// log of  integral over the box of side eta at y_star of
// exp(<a, y - y_star> - (n/2) ||y||^2) dy, factorized per coordinate.
inline double log_gaussian_box(const Vector& a, const Vector& y_star,
                               double eta, int n) {
  if (a.size() != y_star.size())
    throw InvalidInputError("log_gaussian_box: dimension mismatch");
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double lo = y_star[j] - 0.5 * eta, hi = y_star[j] + 0.5 * eta;
    s += -a[j] * y_star[j] + log_gauss_interval(a[j], lo, hi, n);
  }
  return s;
}

struct CellData {
  Vector y_star;
  Vector tilt;
  Vector field;                // tilt + A y_star + h
  std::vector<double> log_Z;   // index l-1 holds log Z-hat_l, l = 1..M+1
  bool tilt_verified = true;
  bool failed = false;
};

// Top ratio function: the negative-part correction, the tilt
// cancellation, and the Gaussian box factor with a = Q^T X sigma.
inline double log_g_top(const SpectralSplit& split, const GridSpec& grid,
                        const CellData& cell, const SpinConfig& sigma) {
  double v = log_gaussian_box(split.A.transpose() * sigma, cell.y_star,
                              grid.eta, split.n);
  if (split.has_negative_part())
    v += -0.5 * sigma.dot(split.J_minus * sigma) - cell.tilt.dot(sigma);
  return v;
}

struct EstimateOptions {
  double eps = 0.2;
  double delta = 0.1;
  long long N_override = 0;
  int R_override = 0;
  long long burn_override = 0;   // Glauber steps before the first sample
  long long thin_override = 0;   // Glauber steps between samples
  TiltConfig tilt;
  int threads = 1;
  double max_cell_failure_frac = 0.01;
};

struct EstimateResult {
  double log_Z_hat = 0.0;
  int d = 0;
  GridSpec grid;
  std::vector<CellData> cells;
  std::uint64_t model_hash = 0;
  bool brute_forced = false;
  double wall_time = 0.0;
};

namespace detail {

// Ladder sampler for p_{beta_l J_perp, field}: exact product draw at
// beta = 0 (or zero bulk), else a persistent heat-bath chain started
// from the product law, burned in once, thinned between samples.
inline std::function<LevelSampler(int, Rng&)> make_ladder_factory(
    const std::shared_ptr<std::vector<IsingModel>>& level_models,
    const Vector& field, const AnnealingSchedule& schedule,
    double perp_op_norm, const EstimateOptions& opts) {
  return [level_models, field, schedule, perp_op_norm,
          opts](int level, Rng& init_rng) -> LevelSampler {
    const double beta = schedule.beta(level);
    if (beta == 0.0 || (*level_models)[level - 1].J.norm() == 0.0) {
      return [field](Rng& rng) { return sample_product(field, rng); };
    }
    const double gap_norm = beta * perp_op_norm;
    const long long burn =
        opts.burn_override > 0
            ? opts.burn_override
            : mixing_steps_gap(schedule.n, opts.eps / (4.0 * schedule.M),
                               gap_norm);
    const long long thin = opts.thin_override > 0 ? opts.thin_override : burn;
    auto chain = std::make_shared<GlauberChain>(
        (*level_models)[level - 1], sample_product(field, init_rng));
    auto burned = std::make_shared<bool>(false);
    return [chain, burned, burn, thin](Rng& rng) {
      if (!*burned) {
        chain->run(burn, rng);
        *burned = true;
      } else {
        chain->run(thin, rng);
      }
      return chain->state();
    };
  };
}

}  // namespace detail

// Estimates one cell's ladder log Z-hat_l, l = 1..M+1.
inline CellData estimate_cell(const IsingModel& model,
                              const SpectralSplit& split, const GridSpec& grid,
                              long long cell_idx, const EstimateOptions& opts,
                              const Rng& rng) {
  CellData cell;
  cell.y_star = grid.cell_center(cell_idx);
  const Vector base = model.h + split.A * cell.y_star;
  cell.tilt = Vector::Zero(model.n);
  if (split.has_negative_part()) {
    TiltProblem prob =
        make_tilt_problem(split, base, opts.eps, opts.delta);
    TiltSolution ts = solve_tilt(prob, rng.derive(0x55), opts.tilt);
    cell.tilt = ts.tilt;
    cell.tilt_verified = ts.verified;
  }
  cell.field = cell.tilt + base;

  const AnnealingSchedule schedule = default_schedule(model.n);
  EstimatorParams params =
      default_params(opts.eps, opts.delta, schedule.M, log_Z1(cell.field));
  if (opts.N_override > 0) params.N = opts.N_override;
  if (opts.R_override > 0) params.R = opts.R_override;

  const bool zero_bulk = split.J_perp.norm() == 0.0;
  cell.log_Z.assign(schedule.M + 1, params.log_Z1);
  if (zero_bulk) {
    // Every ladder level is the same product distribution and the bulk
    // ratios are exactly 1; only the top ratio needs sampling.
    std::vector<double> trial_vals;
    for (int r = 0; r < params.R; ++r) {
      Rng trial_rng = rng.derive({0x544f50, static_cast<std::uint64_t>(r)});
      LevelSampler sampler = [&cell](Rng& rr) {
        return sample_product(cell.field, rr);
      };
      trial_vals.push_back(estimate_level_ratio(
          sampler,
          [&](const SpinConfig& s) { return log_g_top(split, grid, cell, s); },
          params.N, trial_rng));
    }
    cell.log_Z[schedule.M] = params.log_Z1 + median_of(std::move(trial_vals));
    return cell;
  }

  auto level_models = std::make_shared<std::vector<IsingModel>>();
  level_models->reserve(schedule.M);
  for (int level = 1; level <= schedule.M; ++level)
    level_models->push_back(IsingModel{
        model.n, Matrix(schedule.beta(level) * split.J_perp), cell.field});

  auto factory = detail::make_ladder_factory(level_models, cell.field,
                                             schedule, split.perp_op_norm,
                                             opts);
  auto log_gs = [&](int level) -> LogRatio {
    if (level < schedule.M)
      return [&split](const SpinConfig& s) { return log_g_bulk(split, s); };
    return [&](const SpinConfig& s) { return log_g_top(split, grid, cell, s); };
  };
  AnnealResult ar = anneal_partition(schedule, factory, log_gs, params,
                                     rng.derive(0x414e), 1);
  for (int level = 2; level <= schedule.M + 1; ++level)
    cell.log_Z[level - 1] = ar.log_Z[level - 2];
  return cell;
}

inline EstimateResult estimate_all_cells(const IsingModel& model,
                                         const SpectralSplit& split,
                                         const GridSpec& grid,
                                         const EstimateOptions& opts,
                                         std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  EstimateResult res;
  res.d = grid.d;
  res.grid = grid;
  res.model_hash = model_hash(model);

  if (opts.eps <= std::pow(2.0, -model.n) && model.n <= kBruteForceMaxN) {
    res.log_Z_hat = brute_force_log_partition(model);
    res.brute_forced = true;
    res.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return res;
  }

  const Rng root(seed);
  res.cells.resize(grid.num_cells);
  parallel_for(opts.threads, grid.num_cells, [&](std::int64_t idx) {
    const Rng cell_rng =
        root.derive({0x43454c4c, static_cast<std::uint64_t>(idx)});
    try {
      res.cells[idx] = estimate_cell(model, split, grid, idx, opts, cell_rng);
    } catch (const EstimatorError&) {
      res.cells[idx].y_star = grid.cell_center(idx);
      res.cells[idx].failed = true;
    } catch (const SamplerFailure&) {
      res.cells[idx].y_star = grid.cell_center(idx);
      res.cells[idx].failed = true;
    }
  });

  long long failed = 0;
  std::vector<double> tops;
  tops.reserve(res.cells.size());
  for (const CellData& c : res.cells) {
    if (c.failed)
      ++failed;
    else
      tops.push_back(c.log_Z.back());
  }
  if (failed > static_cast<long long>(opts.max_cell_failure_frac *
                                      static_cast<double>(grid.num_cells)))
    throw EstimatorError("estimate_all_cells: " + std::to_string(failed) +
                         " of " + std::to_string(grid.num_cells) +
                         " cells failed");
  res.log_Z_hat = 0.5 * grid.d * std::log(model.n / (2.0 * M_PI)) +
                  log_sum_exp(tops);
  res.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

// ---- persistence of estimates (reused by the sampler CLI) ----

inline nlohmann::json result_to_json(const EstimateResult& r) {
  nlohmann::json j;
  j["log_Z_hat"] = r.log_Z_hat;
  j["d"] = r.d;
  j["model_hash"] = r.model_hash;
  j["brute_forced"] = r.brute_forced;
  j["wall_time"] = r.wall_time;
  j["grid"] = {{"d", r.grid.d},
               {"L", r.grid.L},
               {"eta", r.grid.eta},
               {"cells_per_dim", r.grid.cells_per_dim},
               {"num_cells", r.grid.num_cells}};
  j["cells"] = nlohmann::json::array();
  for (const CellData& c : r.cells) {
    nlohmann::json jc;
    jc["y_star"] = std::vector<double>(c.y_star.data(),
                                       c.y_star.data() + c.y_star.size());
    jc["tilt"] =
        std::vector<double>(c.tilt.data(), c.tilt.data() + c.tilt.size());
    jc["field"] =
        std::vector<double>(c.field.data(), c.field.data() + c.field.size());
    jc["log_Z"] = c.log_Z;
    jc["tilt_verified"] = c.tilt_verified;
    jc["failed"] = c.failed;
    j["cells"].push_back(std::move(jc));
  }
  return j;
}

inline EstimateResult result_from_json(const nlohmann::json& j) {
  EstimateResult r;
  r.log_Z_hat = j.at("log_Z_hat").get<double>();
  r.d = j.at("d").get<int>();
  r.model_hash = j.at("model_hash").get<std::uint64_t>();
  r.brute_forced = j.value("brute_forced", false);
  r.wall_time = j.value("wall_time", 0.0);
  const auto& jg = j.at("grid");
  r.grid.d = jg.at("d").get<int>();
  r.grid.L = jg.at("L").get<double>();
  r.grid.eta = jg.at("eta").get<double>();
  r.grid.cells_per_dim = jg.at("cells_per_dim").get<int>();
  r.grid.num_cells = jg.at("num_cells").get<long long>();
  for (const auto& jc : j.at("cells")) {
    CellData c;
    auto vec = [](const nlohmann::json& a) {
      Vector v(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
      return v;
    };
    c.y_star = vec(jc.at("y_star"));
    c.tilt = vec(jc.at("tilt"));
    c.field = vec(jc.at("field"));
    c.log_Z = jc.at("log_Z").get<std::vector<double>>();
    c.tilt_verified = jc.value("tilt_verified", true);
    c.failed = jc.value("failed", false);
    r.cells.push_back(std::move(c));
  }
  return r;
}

}  // namespace ising
