#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mslab/experiment.hpp"
#include "support.hpp"

using namespace mslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mslab_test_experiment";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MSLAB_CLI_PATH + "\" " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string sorted_jsonl(ExperimentConfig cfg, int workers) {
  cfg.workers = workers;
  auto r = run(cfg);
  REQUIRE(r.exit_code == kExitOk);
  canonical_sort(r.records);
  return format_jsonl(r.records);
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(R"(# orbital run
experiment = orbital-volume
laws = [two_point(1, -1, 0.5), semicircular(1)]
N = [3, 5]
m = 2
delta = [0.1, 0.2]
R = 2.5
samples = 40
seed = 9
)");
  CHECK(cfg.experiment == "orbital-volume");
  REQUIRE(cfg.laws.size() == 2);
  CHECK(cfg.laws[0] == "two_point(1, -1, 0.5)");
  CHECK(cfg.N == std::vector<int>{3, 5});
  CHECK(cfg.delta == std::vector<double>{0.1, 0.2});
  CHECK(cfg.R == std::vector<double>{2.5});
  CHECK(cfg.samples == 40);
  CHECK(cfg.seed == 9);
  CHECK(validate(cfg).empty());

  CHECK_THROWS_AS(parse_config("experiment = orbital-volume\nN = 3\nN = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = orbital-volume\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("laws = [semicircular(1)]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = orbital-volume\nN = [3, x]\n"), ConfigError);
}

TEST_CASE("validation problems") {
  auto base = parse_config("experiment = orbital-volume\nlaws = [two_point(1,-1,0.5), two_point(1,-1,0.5)]\n");
  CHECK(validate(base).empty());

  auto zero = base;
  set_config_value(zero, "samples", "0");
  CHECK_FALSE(validate(zero).empty());
  const auto r = run(zero);
  CHECK(r.exit_code == kExitUsage);
  CHECK(r.records.empty());

  auto deep = base;
  set_config_value(deep, "m", "13");
  CHECK_FALSE(validate(deep).empty());

  auto unknown = base;
  unknown.experiment = "entropy-oracle";
  CHECK_FALSE(validate(unknown).empty());
  CHECK(run(unknown).exit_code == kExitUsage);

  // A two-variable group can only enter through a law file, and has no spectral
  // distribution for the diagonalized strategy.
  const NCLaw pair = empirical_law({HermitianTuple({HermitianMatrix::diagonal({1, -1}), HermitianMatrix::diagonal({0, 1})})}, 2);
  const auto law_file = scratch("pair_law.json");
  write_json_file(law_file.string(), law_to_json(pair));
  auto multi = parse_config("experiment = orbital-volume\nlaws = [semicircular(1)]\njoint = file:" + law_file.string() + "\n");
  const auto problems = validate(multi);
  REQUIRE_FALSE(problems.empty());
  bool mentions = false;
  for (const auto& p : problems) mentions = mentions || p.find("diagonalized") != std::string::npos;
  CHECK(mentions);

  auto chi = parse_config("experiment = chi-volume\nlaws = [semicircular(1)]\n");
  CHECK_FALSE(validate(chi).empty());  // needs a finite R
  set_config_value(chi, "R", "[2]");
  CHECK(validate(chi).empty());
}

TEST_CASE("orbital-volume records for a single group") {
  auto cfg = parse_config(
      "experiment = orbital-volume\nlaws = [two_point(1, -1, 0.5)]\nN = [2, 4, 6]\nm = 3\ndelta = 0.1\nsamples = 200\nseed = 3\n");
  const auto r = run(cfg);
  REQUIRE(r.exit_code == kExitOk);
  REQUIRE(r.records.size() == 3);
  for (const auto& j : r.records) {
    CHECK(j["p_hat"].get<double>() == 1.0);
    CHECK(j["status"] == "ok");
    CHECK(j["experiment"] == "orbital-volume");
    CHECK(j["seed"] == 3);
    CHECK(j.contains("stream"));
    CHECK(j["version"] == version());
    CHECK(j["config"]["samples"] == "200");
  }
}

TEST_CASE("infeasible grid points are flushed as failed records") {
  auto cfg = parse_config(
      "experiment = packing-profile\nlaws = [two_point(1,-1,0.5), two_point(1,-1,0.5)]\nN = 4\nm = 3\n"
      "delta = [0.3, 0.0001]\nepsilon = [0.2]\nsamples = 30\n");
  const auto r = run(cfg);
  CHECK(r.exit_code == kExitFeasibility);
  bool ok = false, failed = false;
  for (const auto& j : r.records) {
    ok = ok || j["status"] == "ok";
    failed = failed || j["status"] == "failed";
  }
  CHECK(ok);
  CHECK(failed);
}

TEST_CASE("records do not depend on the worker count") {
  const std::vector<std::string> configs{
      "experiment = freeness-scan\nlaws = [two_point(1,-1,0.5), two_point(1,-1,0.5)]\nN = [4, 8]\nm = 3\ndelta = 0.2\nsamples = 60\n",
      "experiment = orbital-volume\nlaws = [two_point(1,-1,0.5), semicircular(1)]\nstrategy = best_of_random(3)\nN = 3\nm = 2\n"
      "delta = 0.4\nR = 2.5\nsamples = 80\n",
      "experiment = chi-volume\nlaws = [two_point(1,-1,0.5)]\nN = [1, 2]\nm = 2\ndelta = 0.3\nR = 1.5\nsamples = 500\n",
      "experiment = fubini-check\nlaws = [two_point(1,-1,0.5), two_point(1,-1,0.5)]\nN = 2\nm = 2\ndelta = 0.4\nR = 1.5\n"
      "samples = 60\ninner_samples = 10\n",
      "experiment = brownian-moments\nN = 8\nt = [0.1, 1]\npaths = 12\nsteps = 10\n",
      "experiment = packing-profile\nlaws = [two_point(1,-1,0.5), two_point(1,-1,0.5)]\nN = 3\nm = 2\ndelta = 0.5\n"
      "epsilon = [0.1, 0.4]\nsamples = 40\n",
      "experiment = truncation-check\nlaws = [two_point(1,-1,0.5), two_point(1,-1,0.5)]\nN = 8\nm = 1\ndelta = 0.5\nR = 2\n"
      "spike = 2.2\nsamples = 10\n",
      "experiment = brownian-dimension-proxy\nlaws = [two_point(1,-1,0.5)]\nN = 4\nm = 1\ndelta = 0.3\nepsilon = [0.1, 0.5]\n"
      "samples = 20\nsteps = 5\n",
  };
  for (const auto& text : configs) {
    const auto cfg = parse_config(text);
    CAPTURE(cfg.experiment);
    REQUIRE(validate(cfg).empty());
    const auto one = sorted_jsonl(cfg, 1);
    CHECK(one == sorted_jsonl(cfg, 3));
    CHECK_FALSE(one.empty());
  }
}

TEST_CASE("csv output flattens the config echo") {
  auto cfg = parse_config("experiment = brownian-moments\nN = 4\nt = [0.5]\npaths = 4\nsteps = 4\n");
  const auto r = run(cfg);
  const std::string csv = format_csv(r.records);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header.find("config.experiment") != std::string::npos);
  CHECK(header.find("mean_tr_re") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("json round trips") {
  auto rng = testing::engine(21, 0);
  const auto h = testing::random_hermitian(3, rng, 1.0);
  const CMatrix back = matrix_from_json(matrix_to_json(h.matrix()));
  CHECK(testing::max_abs(back - h.matrix()) == 0.0);
  CHECK_THROWS_AS(hermitian_from_json(Json{{"n", 1}, {"re", {{0.0}}}, {"im", {{1.0}}}}), InvalidInput);

  const NCLaw law = free_product_law({two_point_law(1, -1, 0.5, 3), semicircular_law(1, 3)}, 3);
  const NCLaw again = law_from_json(law_to_json(law));
  CHECK(law_deviation(law, again, 3).max_deviation == 0.0);
  Json broken = law_to_json(law);
  broken["moments"].erase(broken["moments"].begin());
  CHECK_THROWS(law_from_json(broken));

  const std::vector<HermitianTuple> base{HermitianTuple({h}), HermitianTuple({h, h})};
  const auto b2 = base_from_json(base_to_json(base));
  REQUIRE(b2.size() == 2);
  CHECK(b2[1].arity() == 2);
  CHECK(number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("command line") {
  const auto cfg = scratch("cli.conf");
  write_text(cfg, "experiment = brownian-moments\nN = 4\nt = [0.5, 1]\npaths = 6\nsteps = 5\nseed = 2\n");
  const auto out1 = scratch("cli1.jsonl"), out3 = scratch("cli3.jsonl");
  CHECK(cli("--config " + cfg.string() + " --workers 1 --out " + out1.string()) == 0);
  CHECK(cli("--config " + cfg.string() + " --workers 3 --out " + out3.string()) == 0);
  const std::string a = read_text(out1);
  CHECK(a == read_text(out3));
  CHECK(std::count(a.begin(), a.end(), '\n') == 2);

  const auto seeded = scratch("cli_seed.jsonl");
  CHECK(cli("--config " + cfg.string() + " --seed 5 --out " + seeded.string()) == 0);
  CHECK(read_text(seeded).find("\"seed\":5") != std::string::npos);

  const auto csv = scratch("cli.csv");
  CHECK(cli("--config " + cfg.string() + " --format csv --out " + csv.string()) == 0);
  const std::string csv_text = read_text(csv);
  CHECK(csv_text.substr(0, csv_text.find('\n')).find("experiment") != std::string::npos);

  CHECK(cli("--config " + cfg.string() + " --validate-only > /dev/null") == 0);
  const auto bad = scratch("bad.conf");
  write_text(bad, "experiment = brownian-moments\nt = [0.5]\npaths = 0\n");
  CHECK(cli("--config " + bad.string() + " --validate-only > /dev/null") == 2);
  CHECK(cli("--config " + bad.string() + " > /dev/null 2>&1") == 2);
  CHECK(cli("--config " + (scratch("missing.conf")).string() + " 2> /dev/null") == 2);
  CHECK(cli("--version > /dev/null") == 0);

  const auto infeasible = scratch("infeasible.conf");
  write_text(infeasible,
             "experiment = packing-profile\nlaws = [two_point(1,-1,0.5), two_point(1,-1,0.5)]\nN = 4\nm = 3\n"
             "delta = 0.0001\nepsilon = [0.2]\nsamples = 10\n");
  CHECK(cli("--config " + infeasible.string() + " > /dev/null 2>&1") == 3);

  for (const auto& entry : fs::directory_iterator(MSLAB_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    CHECK(cli("--config " + entry.path().string() + " --validate-only > /dev/null") == 0);
  }
}
