#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taumlmc/cli.hpp"

using namespace taumlmc;

namespace {

const std::string kDecay = TAUMLMC_MODEL_DIR "/decay.txt";
const std::string kDimer = TAUMLMC_MODEL_DIR "/dimerization.txt";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> result;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) result.push_back(line);
  return result;
}

// First line that is not part of the provenance header.
std::size_t body_start(const std::vector<std::string>& ls) {
  std::size_t i = 0;
  while (i < ls.size() && ls[i].starts_with("#")) ++i;
  return i;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  for (const char* word : {"simulate", "couple", "mlmc", "sweep", "fit", "meanfield", "complexity"}) {
    CHECK(help.out.find(word) != std::string::npos);
  }
  const auto sub_help = run({"mlmc", "--help"});
  CHECK(sub_help.code == 0);
  for (const char* flag : {"--eps", "--estimator", "--M", "--f", "--allocation", "--seed", "--workers", "--out"}) {
    CHECK(sub_help.out.find(flag) != std::string::npos);
  }
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"mlmc", "--model", kDecay, "--eps", "0.1", "--f", "X[A]", "--frob"}).code == 1);
  CHECK(run({"mlmc", "--model", kDecay, "--f", "X[A]"}).code == 1);
  CHECK(run({"mlmc", "--model", "/nonexistent/model.txt", "--eps", "0.1", "--f", "X[A]"}).code == 1);
  CHECK(run({"simulate", "--model", kDecay, "--method", "leap"}).code == 1);
}

TEST_CASE("runtime errors exit 2") {
  const auto bad_species = run({"mlmc", "--model", kDecay, "--eps", "0.1", "--f", "X[Q]"});
  CHECK(bad_species.code == 2);
  CHECK(bad_species.err.starts_with("error: "));
  CHECK(run({"simulate", "--model", kDecay, "--method", "tau", "--h", "0.3"}).code == 2);

  const auto dir = std::filesystem::temp_directory_path() / "taumlmc_cli_test";
  std::filesystem::create_directories(dir);
  const auto bad_model = dir / "bad.txt";
  std::ofstream(bad_model) << "species A\nreaction A -> B @ 1\n";
  const auto r = run({"simulate", "--model", bad_model.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("mlmc on decay writes JSON") {
  const auto dir = std::filesystem::temp_directory_path() / "taumlmc_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "mlmc.json";
  std::filesystem::remove(path);
  const auto r = run({"mlmc", "--model", kDecay, "--N", "1000", "--eps", "0.01", "--f", "X[A]",
                      "--seed", "3", "--out", path.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["provenance"]["tool"] == kToolVersion);
  CHECK(j["provenance"]["command"] == "mlmc");
  CHECK(j["provenance"]["config"]["seed"] == "3");
  CHECK(j["provenance"]["config"]["N"] == "1000");
  CHECK(j["provenance"]["config"].contains("model_fnv1a"));
  CHECK(j["kind"] == "biased");
  const double estimate = j["estimate"];
  // Tau-leap bias at the finest level is bounded by the eps split, so a loose
  // band around exp(-1) is safe.
  CHECK(std::abs(estimate - std::exp(-1.0)) < 0.05);
  double cost = 0.0;
  for (const auto& level : j["levels"]) {
    CHECK(level.contains("h"));
    CHECK(level.contains("n"));
    CHECK(level.contains("mean"));
    CHECK(level.contains("var"));
    cost += level["cost"].get<double>();
  }
  CHECK(j["total_cost"].get<double>() == cost);
}

TEST_CASE("CSV outputs carry provenance and columns") {
  {
    const auto ls = lines(run({"simulate", "--model", kDecay, "--N", "100", "--paths", "2",
                               "--record", "0.5"}).out);
    REQUIRE(ls.size() > 3);
    CHECK(ls[0] == std::string("# ") + kToolVersion);
    CHECK(ls[1] == "# command: simulate");
    const auto b = body_start(ls);
    CHECK(ls[b] == "path,time,A");
    CHECK(ls.size() - b - 1 == 6);
    CHECK(ls[b + 1] == "0,0,100");
  }
  {
    const auto ls = lines(run({"couple", "--model", kDimer, "--N", "1000", "--kind", "exact-tau",
                               "--level", "1", "--pairs", "4", "--t-end", "0.3"}).out);
    const auto b = body_start(ls);
    CHECK(ls[b] == "pair,fine_A,fine_B,coarse_A,coarse_B,cost");
    CHECK(ls.size() - b - 1 == 4);
  }
  {
    const auto ls = lines(run({"meanfield", "--model", kDecay, "--h", "0.25"}).out);
    const auto b = body_start(ls);
    CHECK(ls[b] == "time,A");
    CHECK(ls.back() == "1,0.31640625");
  }
  {
    const auto ls = lines(run({"complexity", "--model", kDecay, "--N", "100", "--eps", "0.05,0.03",
                               "--f", "X[A]"}).out);
    const auto b = body_start(ls);
    CHECK(ls[b] == "eps,finest_level,estimate,variance,cost,single_level_cost");
    CHECK(ls.size() - b - 1 == 2);
  }
}

TEST_CASE("sweep then fit") {
  const auto dir = std::filesystem::temp_directory_path() / "taumlmc_cli_test";
  std::filesystem::create_directories(dir);
  const auto table = dir / "sweep.csv";
  const auto s = run({"sweep", "--model", kDimer, "--N", "1000,10000", "--h", "0.01,0.003",
                      "--pairs", "200", "--M", "3", "--t-end", "0.3", "--f", "X[A]",
                      "--kind", "tau-tau", "--out", table.string()});
  REQUIRE(s.code == 0);
  const auto f = run({"fit", "--in", table.string()});
  REQUIRE(f.code == 0);
  const auto j = nlohmann::json::parse(f.out);
  CHECK(j["provenance"]["command"] == "fit");
  const double a = j["a"];
  const double b = j["b"];
  CHECK(a < -0.5);
  CHECK(a > -1.5);
  CHECK(b > 0.4);
  CHECK(b < 1.5);
  CHECK(j.contains("C"));
  CHECK(j.contains("residual_rms"));
}

TEST_CASE("same seed gives the same bytes") {
  const std::vector<std::string> args{"mlmc", "--model", kDecay, "--N", "300", "--eps", "0.03",
                                      "--f", "X[A]", "--estimator", "unbiased", "--seed", "9"};
  const auto a = run(args);
  const auto b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  auto other = args;
  other.back() = "10";
  CHECK(run(other).out != a.out);
}
