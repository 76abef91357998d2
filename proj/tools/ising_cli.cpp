#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ising/ising.hpp"

namespace {

// Exit codes: 0 ok, 2 invalid input, 3 I/O, 4 parse, 5 capacity,
// 6 numeric, 7 estimator, 8 sampler failure.
enum ExitCode {
  kOk = 0,
  kInvalidInput = 2,
  kIoError = 3,
  kParseError = 4,
  kCapacity = 5,
  kNumeric = 6,
  kEstimator = 7,
  kSampler = 8,
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return nlohmann::json::parse(in);
}

void write_text_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path);
  out << text << "\n";
}

int threads_from(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("ISING_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

struct EstimateFlags {
  std::string model_path, cells_out;
  double eps = 0.2, delta = 0.1, c = 0.0;
  double grid_L = 0.0, grid_eta = 0.0;
  long long cell_budget = 100000;
  long long N = 0, burn = 0, thin = 0;
  int R = 0;
  std::uint64_t seed = 1;
  int threads = 0;
};

void add_estimate_flags(CLI::App* cmd, EstimateFlags& f) {
  cmd->add_option("--model", f.model_path, "model JSON file")->required();
  cmd->add_option("--eps", f.eps, "multiplicative accuracy target");
  cmd->add_option("--delta", f.delta, "failure probability");
  cmd->add_option("--c", f.c, "spike threshold parameter (0: auto)");
  cmd->add_option("--grid-L", f.grid_L, "grid cutoff override");
  cmd->add_option("--grid-eta", f.grid_eta, "grid cell side override");
  cmd->add_option("--cell-budget", f.cell_budget, "max grid cells");
  cmd->add_option("--samples-per-level", f.N, "annealing samples override");
  cmd->add_option("--trials", f.R, "annealing trials override");
  cmd->add_option("--burn", f.burn, "Glauber burn-in override");
  cmd->add_option("--thin", f.thin, "Glauber thinning override");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--threads", f.threads, "worker threads (0: ISING_THREADS)");
}

struct Pipeline {
  ising::IsingModel model;
  ising::SpectralSplit split;
  ising::GridSpec grid;
  ising::EstimateOptions opts;
};

Pipeline build_pipeline(const EstimateFlags& f) {
  if (!(f.eps > 0.0 && f.eps < 1.0) || !(f.delta > 0.0 && f.delta < 1.0))
    throw ising::InvalidInputError("eps and delta must be in (0,1)");
  Pipeline p;
  p.model = ising::model_from_json(read_json_file(f.model_path));
  const double c =
      f.c > 0.0 ? f.c : ising::default_threshold_c(p.model.J);
  p.split = ising::decompose(p.model.J, c);
  ising::GridOverrides gov;
  gov.L = f.grid_L;
  gov.eta = f.grid_eta;
  gov.cell_budget = f.cell_budget;
  p.grid = ising::build_grid(p.split, f.eps, gov);
  p.opts.eps = f.eps;
  p.opts.delta = f.delta;
  p.opts.N_override = f.N;
  p.opts.R_override = f.R;
  p.opts.burn_override = f.burn;
  p.opts.thin_override = f.thin;
  p.opts.threads = threads_from(f.threads);
  return p;
}

int run_gen_model(const std::string& kind, int n, double beta, double beta1,
                  double beta2, int num_patterns, int degree, int sign, int p,
                  double lambda, double mu, const std::string& subset_a,
                  long long subset_b, std::uint64_t seed,
                  const std::string& out) {
  ising::IsingModel m;
  if (kind == "curie-weiss") {
    m = ising::curie_weiss(n, beta);
  } else if (kind == "hopfield") {
    ising::Rng rng = ising::Rng(seed).derive(0x504154);
    std::vector<ising::Vector> pats;
    for (int v = 0; v < num_patterns; ++v)
      pats.push_back(ising::uniform_spins(n, rng));
    m = ising::hopfield(pats, beta);
  } else if (kind == "sk-ferro") {
    m = ising::sk_ferro(n, beta1, beta2, seed);
  } else if (kind == "graph") {
    m = ising::graph_ising(ising::random_regular_adjacency(n, degree, seed),
                           beta, sign);
  } else if (kind == "posterior") {
    const ising::CsbmSample s = ising::csbm_sample(n, p, lambda, mu, seed);
    m = ising::posterior_model(s.A, s.B, lambda, mu, p);
  } else if (kind == "subset-sum") {
    std::vector<long long> a;
    std::stringstream ss(subset_a);
    std::string tok;
    while (std::getline(ss, tok, ',')) a.push_back(std::stoll(tok));
    m = ising::subset_sum_instance(a, beta, subset_b);
  } else {
    throw ising::InvalidInputError("unknown model kind: " + kind);
  }
  write_text_file(out, ising::model_to_json(m).dump(2));
  return kOk;
}

int run_estimate(const EstimateFlags& f, const std::string& out) {
  Pipeline p = build_pipeline(f);
  const ising::EstimateResult res =
      ising::estimate_all_cells(p.model, p.split, p.grid, p.opts, f.seed);
  nlohmann::json j = ising::result_to_json(res);
  j["eps"] = f.eps;
  j["c"] = p.split.c;
  write_text_file(out, j.dump(2));
  return kOk;
}

int run_sample(const EstimateFlags& f, const std::string& cells_path,
               long long num_samples, long long T, long long trial_budget,
               const std::string& out) {
  Pipeline p = build_pipeline(f);
  ising::EstimateResult est;
  if (!cells_path.empty()) {
    est = ising::result_from_json(read_json_file(cells_path));
    if (est.model_hash != ising::model_hash(p.model))
      throw ising::InvalidInputError(
          "--cells file was computed for a different model");
    p.grid = est.grid;  // the stored ladders belong to the stored grid
  } else {
    est = ising::estimate_all_cells(p.model, p.split, p.grid, p.opts, f.seed);
  }
  ising::TemperingConfig cfg;
  cfg.T_override = T;
  cfg.trial_budget = trial_budget;
  const ising::SamplerReport rep =
      ising::sample(p.model, p.split, p.grid, est, f.eps, num_samples,
                    f.seed ^ 0x53414d50ull, cfg);
  std::ostringstream lines;
  for (const ising::SpinConfig& s : rep.samples) {
    nlohmann::json js;
    std::vector<int> spins(p.model.n);
    for (int i = 0; i < p.model.n; ++i) spins[i] = s[i] > 0 ? 1 : -1;
    js["sigma"] = spins;
    lines << js.dump() << "\n";
  }
  nlohmann::json trailer;
  trailer["trials"] = rep.trials;
  trailer["steps_total"] = rep.steps_total;
  trailer["acceptance_rate"] = rep.acceptance_rate;
  trailer["num_samples"] = rep.samples.size();
  lines << trailer.dump();
  write_text_file(out, lines.str());
  return kOk;
}

int run_oracle_compare(const EstimateFlags& f, long long num_samples,
                       long long T, const std::string& out) {
  Pipeline p = build_pipeline(f);
  if (p.model.n > ising::kBruteForceMaxN)
    throw ising::CapacityError("oracle-compare: n > 25");
  const double oracle = ising::brute_force_log_partition(p.model);
  const ising::EstimateResult est =
      ising::estimate_all_cells(p.model, p.split, p.grid, p.opts, f.seed);
  nlohmann::json j;
  j["log_Z_oracle"] = oracle;
  j["log_Z_hat"] = est.log_Z_hat;
  j["abs_delta_log_Z"] = std::abs(est.log_Z_hat - oracle);
  j["d"] = p.split.d;
  if (num_samples > 0 && p.model.n <= 20) {
    ising::TemperingConfig cfg;
    cfg.T_override = T;
    const ising::SamplerReport rep = ising::sample(
        p.model, p.split, p.grid, est, f.eps, num_samples,
        f.seed ^ 0x53414d50ull, cfg);
    std::vector<std::uint64_t> counts(1ull << p.model.n, 0);
    for (const ising::SpinConfig& s : rep.samples)
      ++counts[ising::spins_to_index(s)];
    j["tv_empirical"] = ising::tv_to_counts(
        ising::brute_force_distribution(p.model), counts, rep.samples.size());
    j["acceptance_rate"] = rep.acceptance_rate;
  }
  if (p.split.has_negative_part() && p.model.n <= ising::kBruteForceMaxN &&
      !est.cells.empty()) {
    const ising::Vector base =
        p.model.h + p.split.A * est.cells.front().y_star;
    ising::TiltProblem tp =
        ising::make_tilt_problem(p.split, base, f.eps, f.delta);
    const ising::Vector u =
        est.cells.front().tilt.size() > 0 && p.split.minus_trace > 0.0
            ? ising::Vector(-p.split.J_minus.completeOrthogonalDecomposition()
                                 .solve(est.cells.front().tilt))
            : ising::Vector::Zero(p.model.n);
    j["tilt_fixed_point_residual"] = ising::fixed_point_residual(tp, u);
  }
  write_text_file(out, j.dump(2));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partition function estimation and sampling for Ising models "
               "with a bounded spectral bulk plus few outlier eigenvalues"};
  app.require_subcommand(1);

  // gen-model
  auto* gen = app.add_subcommand("gen-model", "generate a model JSON file");
  std::string kind, subset_a = "1,1,2", gen_out;
  int n = 8, num_patterns = 1, degree = 3, sign = 1, p_dim = 2;
  double beta = 1.0, beta1 = 1.0, beta2 = 0.0, lambda = 0.0, mu = 1.0;
  long long subset_b = 0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", kind,
                  "curie-weiss|hopfield|sk-ferro|graph|posterior|subset-sum")
      ->required();
  gen->add_option("--n", n, "dimension");
  gen->add_option("--beta", beta, "inverse temperature");
  gen->add_option("--beta1", beta1, "ferromagnetic strength (sk-ferro)");
  gen->add_option("--beta2", beta2, "noise strength (sk-ferro)");
  gen->add_option("--num-patterns", num_patterns, "patterns (hopfield)");
  gen->add_option("--degree", degree, "graph degree");
  gen->add_option("--sign", sign, "+1 ferromagnetic, -1 antiferromagnetic");
  gen->add_option("--p", p_dim, "feature dimension (posterior)");
  gen->add_option("--lambda", lambda, "graph signal strength (posterior)");
  gen->add_option("--mu", mu, "feature signal strength (posterior)");
  gen->add_option("--a", subset_a, "comma-separated integers (subset-sum)");
  gen->add_option("--b", subset_b, "target value (subset-sum)");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output path (default: stdout)");

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "estimate log Z");
  EstimateFlags ef;
  std::string est_out;
  add_estimate_flags(est_cmd, ef);
  est_cmd->add_option("--out", est_out, "output path (default: stdout)");

  // sample
  auto* sam_cmd = app.add_subcommand("sample", "draw samples");
  EstimateFlags sf;
  std::string sam_out, cells_path;
  long long num_samples = 1, T_override = 0, trial_budget = 0;
  add_estimate_flags(sam_cmd, sf);
  sam_cmd->add_option("--num-samples", num_samples, "samples to draw");
  sam_cmd->add_option("--cells", cells_path, "reuse an estimate JSON file");
  sam_cmd->add_option("--T", T_override, "tempering steps override");
  sam_cmd->add_option("--trial-budget", trial_budget,
                      "restart budget per sample");
  sam_cmd->add_option("--out", sam_out, "output path (default: stdout)");

  // oracle-compare
  auto* cmp_cmd =
      app.add_subcommand("oracle-compare", "compare against brute force");
  EstimateFlags cf;
  std::string cmp_out;
  long long cmp_samples = 0, cmp_T = 0;
  add_estimate_flags(cmp_cmd, cf);
  cmp_cmd->add_option("--num-samples", cmp_samples,
                      "also draw samples and report empirical TV");
  cmp_cmd->add_option("--T", cmp_T, "tempering steps override");
  cmp_cmd->add_option("--out", cmp_out, "output path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return run_gen_model(kind, n, beta, beta1, beta2, num_patterns, degree,
                           sign, p_dim, lambda, mu, subset_a, subset_b,
                           gen_seed, gen_out);
    if (est_cmd->parsed()) return run_estimate(ef, est_out);
    if (sam_cmd->parsed())
      return run_sample(sf, cells_path, num_samples, T_override, trial_budget,
                        sam_out);
    if (cmp_cmd->parsed())
      return run_oracle_compare(cf, cmp_samples, cmp_T, cmp_out);
  } catch (const ising::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const ising::CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCapacity;
  } catch (const ising::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const ising::EstimatorError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEstimator;
  } catch (const ising::SamplerFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSampler;
  } catch (const ising::ConsistencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEstimator;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  return kOk;
}
