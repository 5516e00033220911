#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace oulcut;
using namespace oulcut::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "oulcut_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& name, const json& j) {
  const fs::path p = dir / (name + ".json");
  std::ofstream(p) << j.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_records(const std::string& csv) {
  int n = 0;
  for (size_t i = 0; i + 1 < csv.size(); ++i)
    if (csv[i] == '\r' && csv[i + 1] == '\n') ++n;
  return n;
}

json gaussian_profile() {
  return {{"kind", "Profile"},
          {"seed", 1},
          {"model", {{"type", "brownian"}, {"variance", 1.0}}},
          {"gamma", 1.0},
          {"x0", {1.0}},
          {"c", {{"from", -4}, {"to", 4}, {"count", 25}}}};
}

json bad_eps() {
  return {{"kind", "DistanceCurve"},
          {"seed", 1},
          {"model", {{"type", "brownian"}, {"variance", 1.0}}},
          {"gamma", 1.0},
          {"x0", {1.0}},
          {"eps", {1.5}},
          {"t", {1.0, 2.0}}};
}

json cp_density() {
  return {{"kind", "Profile"},
          {"seed", 1},
          {"model",
           {{"type", "compound_poisson"},
            {"rate", 1.0},
            {"law", {{"kind", "atoms"}, {"points", {1.0}}, {"weights", {1.0}}}}}},
          {"gamma", 1.0},
          {"x0", {1.0}},
          {"method", "density"}};
}

}  // namespace

TEST_CASE("run: minimal Gaussian profile writes 25 points, plot data and a v1 manifest") {
  const auto dir = scratch("profile");
  const auto cfg = write_config(dir, "profile", gaussian_profile());
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  const auto res = run(cfg, opt);
  REQUIRE(res.exit_code == 0);
  const auto csv = slurp(dir / "out" / "profile.csv");
  CHECK(count_records(csv) == 26);
  CHECK(csv.rfind("c,G,stderr,method\r\n", 0) == 0);
  CHECK(count_records(slurp(dir / "out" / "plot_profile.csv")) == 26);
  const auto m = json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(m["schema"] == "v1");
  CHECK(m["kind"] == "Profile");
  CHECK(m["seed"] == 1);
  for (const char* mod : {"levy_models", "matrix_dynamics", "char_engine", "tv_metrics", "cutoff_lab"})
    CHECK(m["invariants"].contains(mod));
  CHECK(m["invariants"]["tv_metrics"]["all_pass"] == true);
  CHECK(m["invariants"]["cutoff_lab"]["limits"]["pass"] == true);
  // G(0) = erf(1/2)
  std::istringstream rows(csv);
  std::string line;
  bool seen = false;
  while (std::getline(rows, line))
    if (line.rfind("0,", 0) == 0) {
      const double g = std::stod(line.substr(2));
      CHECK(g == doctest::Approx(std::erf(0.5)).epsilon(1e-3));
      seen = true;
    }
  CHECK(seen);
}

TEST_CASE("run: epsilon outside (0,1) exits 2 with error JSON") {
  const auto dir = scratch("bad_eps");
  const auto cfg = write_config(dir, "bad", bad_eps());
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  const auto res = run(cfg, opt);
  CHECK(res.exit_code == 2);
  CHECK(res.error["message"] == "epsilon out of (0,1)");
  CHECK(res.error["type"] == "ValidationError");
  const auto written = json::parse(slurp(dir / "out" / "error.json"));
  CHECK(written["exit_code"] == 2);
  CHECK_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("run: density method on compound Poisson noise exits 3 with the (H) report") {
  const auto dir = scratch("cp");
  const auto cfg = write_config(dir, "cp", cp_density());
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  const auto res = run(cfg, opt);
  CHECK(res.exit_code == 3);
  CHECK(res.error["type"] == "DensityRegimeUnavailable");
  CHECK(res.error["report"]["condition"] == to_string(ConditionName::HypothesisH));
  CHECK(res.error["report"]["verdict"] == "FailNumeric");
  CHECK_FALSE(res.error["report"]["evidence"].empty());
}

TEST_CASE("describe: prints plans without writing files") {
  const auto dir = scratch("describe");
  int k = 0;
  for (const auto& j : {gaussian_profile(), bad_eps(), cp_density()}) {
    auto doc = j;
    doc["output_dir"] = (dir / ("out" + std::to_string(k))).string();
    const auto cfg = write_config(dir, "c" + std::to_string(k), doc);
    std::ostringstream os;
    CHECK(describe(cfg, os) == 0);
    CHECK(os.str().find("kind: ") != std::string::npos);
    CHECK(os.str().find("work units") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / ("out" + std::to_string(k))));
    ++k;
  }
  std::ostringstream os;
  const auto broken = dir / "broken.json";
  std::ofstream(broken) << "{ not json";
  CHECK(describe(broken.string(), os) == 2);
}

TEST_CASE("config validation: seed required, overrides, output root") {
  const auto dir = scratch("seed");
  auto j = gaussian_profile();
  j.erase("seed");
  const auto cfg = write_config(dir, "noseed", j);
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  CHECK(run(cfg, opt).exit_code == 2);
  opt.seed_override = 42;
  const auto c = load_config(cfg, opt);
  CHECK(c.seed == 42);

  const auto cfg2 = write_config(dir, "rooted", gaussian_profile());
  setenv(kOutputRootEnv, (dir / "root").c_str(), 1);
  CHECK(load_config(cfg2).output_dir == (dir / "root" / "rooted").string());
  unsetenv(kOutputRootEnv);

  auto unknown = gaussian_profile();
  unknown["kind"] = "Nope";
  CHECK_THROWS_AS(load_config(write_config(dir, "unknown", unknown)), ValidationError);
  CHECK_THROWS_AS(parse_grid(json::array()), ValidationError);
  CHECK(parse_grid({{"from", 0}, {"to", 1}, {"count", 3}}) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK_THROWS_AS(parse_model({{"type", "nope"}}), ValidationError);
  const auto sum = parse_model({{"type", "sum"},
                                {"parts", {{{"type", "brownian"}, {"variance", 1.0}},
                                           {{"type", "stable"}, {"alpha", 1.5}}}}});
  CHECK(sum.jumps().size() == 1);
  CHECK(sum.gaussian()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("csv writer quotes per RFC 4180") {
  CsvWriter w({"a", "b"});
  w.row({"x,y", "say \"hi\""});
  w.row({"1.5", "line\nbreak"});
  CHECK(w.str() == "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n1.5,\"line\nbreak\"\r\n");
  CHECK(num(0.1) == "0.1");
  CHECK(num(-2.5e-10) == "-2.5e-10");
}

TEST_CASE("run: identical config and seed give byte-identical CSV for any worker count") {
  const auto dir = scratch("determinism");
  auto j = gaussian_profile();
  j["method"] = "monte_carlo";
  j["samples"] = 20000;
  j["c"] = {-1.0, 0.0, 1.0};
  const auto cfg = write_config(dir, "mc", j);
  RunOptions a, b;
  a.out_dir = (dir / "a").string();
  a.workers = 1;
  b.out_dir = (dir / "b").string();
  b.workers = 3;
  REQUIRE(run(cfg, a).exit_code == 0);
  REQUIRE(run(cfg, b).exit_code == 0);
  CHECK(slurp(dir / "a" / "profile.csv") == slurp(dir / "b" / "profile.csv"));
  b.seed_override = 99;
  REQUIRE(run(cfg, b).exit_code == 0);
  CHECK(slurp(dir / "a" / "profile.csv") != slurp(dir / "b" / "profile.csv"));
}

TEST_CASE("main_entry: exit codes through the command line") {
  const auto dir = scratch("argv");
  const auto good = write_config(dir, "good", gaussian_profile());
  const auto bad = write_config(dir, "bad", bad_eps());
  const std::string out = (dir / "out").string();
  std::vector<std::string> a1 = {"oulcut_run", "run", good, "--out-dir", out, "--workers", "1"};
  std::vector<std::string> a2 = {"oulcut_run", "run", bad, "--out-dir", out};
  auto call = [](std::vector<std::string>& args) {
    std::vector<char*> argv;
    for (auto& s : args) argv.push_back(s.data());
    return main_entry(static_cast<int>(argv.size()), argv.data());
  };
  CHECK(call(a1) == 0);
  CHECK(call(a2) == 2);
  std::vector<std::string> a3 = {"oulcut_run", "frobnicate"};
  CHECK(call(a3) == 2);
}
