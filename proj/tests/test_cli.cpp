#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ising/brute_force.hpp"
#include "ising/model.hpp"

namespace {

std::string cli_path() {
  const char* p = std::getenv("ISING_CLI");
  REQUIRE(p != nullptr);
  return p;
}

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string out_path = "/tmp/ising_cli_test_out.txt";
  const std::string cmd =
      cli_path() + " " + args + " > " + out_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(status), ss.str()};
}

const std::string kModelPath = "/tmp/ising_cli_test_model.json";

}  // namespace

TEST_CASE("gen-model writes a loadable model that round-trips") {
  RunResult r = run("gen-model --kind curie-weiss --n 6 --beta 1.5 --out " +
                    kModelPath);
  REQUIRE(r.exit_code == 0);
  std::ifstream in(kModelPath);
  nlohmann::json j = nlohmann::json::parse(in);
  ising::IsingModel m = ising::model_from_json(j);
  CHECK(m.n == 6);
  CHECK(m.J(0, 0) == Catch::Approx(0.25));

  RunResult again = run("gen-model --kind curie-weiss --n 6 --beta 1.5");
  CHECK(again.exit_code == 0);
  nlohmann::json j2 = nlohmann::json::parse(again.out);
  CHECK(ising::model_hash(ising::model_from_json(j2)) == ising::model_hash(m));
}

TEST_CASE("all generator kinds produce valid models") {
  for (const std::string kind :
       {"hopfield --num-patterns 2", "sk-ferro --beta1 0.5 --beta2 0.2",
        "graph --degree 3 --sign -1 --beta 0.2", "posterior --p 2 --mu 1.0",
        "subset-sum --a 1,1,2,3,5,2 --beta 1"}) {
    RunResult r = run("gen-model --n 6 --seed 3 --kind " + kind);
    INFO(kind);
    REQUIRE(r.exit_code == 0);
    nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(ising::model_from_json(j).n == 6);
  }
  CHECK(run("gen-model --kind nonsense --n 4").exit_code == 2);
}

TEST_CASE("estimate reports log Z close to the oracle") {
  REQUIRE(run("gen-model --kind curie-weiss --n 6 --beta 1.2 --out " +
              kModelPath)
              .exit_code == 0);
  RunResult r = run("estimate --model " + kModelPath +
                    " --eps 0.2 --delta 0.2 --grid-eta 0.3 "
                    "--samples-per-level 3000 --trials 7 --seed 4");
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.contains("log_Z_hat"));
  CHECK(j.at("d").get<int>() == 1);
  CHECK(j.contains("wall_time"));
  std::ifstream in(kModelPath);
  const double oracle = ising::brute_force_log_partition(
      ising::model_from_json(nlohmann::json::parse(in)));
  CHECK(std::abs(j.at("log_Z_hat").get<double>() - oracle) < 0.3);
}

TEST_CASE("estimate error paths map to distinct exit codes") {
  CHECK(run("estimate --model /tmp/definitely_missing.json").exit_code == 3);
  const std::string bad = "/tmp/ising_cli_bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run("estimate --model " + bad).exit_code == 4);
  std::ofstream(bad) << "{\"n\": 2}";
  CHECK(run("estimate --model " + bad).exit_code == 2);
  REQUIRE(run("gen-model --kind curie-weiss --n 6 --beta 1.2 --out " +
              kModelPath)
              .exit_code == 0);
  CHECK(run("estimate --model " + kModelPath + " --eps 2.0").exit_code == 2);
  CHECK(run("estimate --model " + kModelPath + " --grid-eta 50").exit_code ==
        2);
  CHECK(run("estimate --model " + kModelPath + " --cell-budget 2").exit_code ==
        5);
}

TEST_CASE("sample emits JSON lines plus a trailer and honors --cells") {
  REQUIRE(run("gen-model --kind curie-weiss --n 5 --beta 1.2 --out " +
              kModelPath)
              .exit_code == 0);
  const std::string cells = "/tmp/ising_cli_cells.json";
  REQUIRE(run("estimate --model " + kModelPath +
              " --eps 0.3 --grid-eta 0.5 --samples-per-level 2000 "
              "--trials 5 --seed 9 --out " +
              cells)
              .exit_code == 0);
  RunResult r = run("sample --model " + kModelPath + " --cells " + cells +
                    " --num-samples 20 --T 60 --seed 10");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.out);
  std::string line, last;
  int rows = 0;
  while (std::getline(lines, line))
    if (!line.empty()) {
      last = line;
      ++rows;
    }
  CHECK(rows == 21);  // 20 samples + trailer
  nlohmann::json trailer = nlohmann::json::parse(last);
  CHECK(trailer.at("num_samples").get<int>() == 20);
  CHECK(trailer.at("acceptance_rate").get<double>() > 0.0);

  // zero samples: empty body, trailer only, exit 0
  RunResult zero = run("sample --model " + kModelPath + " --cells " + cells +
                       " --num-samples 0 --T 60");
  CHECK(zero.exit_code == 0);
  CHECK(nlohmann::json::parse(zero.out).at("num_samples").get<int>() == 0);

  // cells from a different model are refused
  const std::string other = "/tmp/ising_cli_other_model.json";
  REQUIRE(run("gen-model --kind curie-weiss --n 5 --beta 0.9 --out " + other)
              .exit_code == 0);
  CHECK(run("sample --model " + other + " --cells " + cells +
            " --num-samples 1 --T 60")
            .exit_code == 2);
}

TEST_CASE("oracle-compare reports the deltas") {
  REQUIRE(run("gen-model --kind curie-weiss --n 5 --beta 1.2 --out " +
              kModelPath)
              .exit_code == 0);
  RunResult r = run("oracle-compare --model " + kModelPath +
                    " --eps 0.3 --grid-eta 0.5 --samples-per-level 2000 "
                    "--trials 5 --num-samples 500 --T 60 --seed 2");
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("abs_delta_log_Z").get<double>() < 0.4);
  CHECK(j.at("tv_empirical").get<double>() < 0.2);
}
