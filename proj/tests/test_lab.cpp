#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flowlab/errors.hpp"
#include "flowlab/lab/commands.hpp"
#include "flowlab/lab/config.hpp"
#include "flowlab/lab/io.hpp"

using namespace flowlab;
using namespace flowlab::lab;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("flowlab_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const ExperimentConfig c = parse_config(R"({"seed": 9, "grid": {"eps_values": [0.3, 0.1]}})");
  CHECK(c.seed == 9);
  CHECK(c.base_map.kind == "cat");
  CHECK(c.grid.eps_values == std::vector<double>{0.3, 0.1});
  CHECK(c.grid.n_values.size() == 12);
  CHECK(parse_config("{}").seed == 1);
}

TEST_CASE("config rejects unknown fields with their path") {
  CHECK(config_error(R"({"sede": 1})").find("/sede") != std::string::npos);
  CHECK(config_error(R"({"grid": {"delta": 0.1, "epsilon": [0.1]}})").find("/grid/epsilon") != std::string::npos);
  CHECK(config_error(R"({"grid": {"delta": "x"}})").find("/grid/delta") != std::string::npos);
  CHECK(config_error(R"({"grid": {"eps_values": [0.1, 0.2]}})").find("/grid") != std::string::npos);
  CHECK(config_error(R"({"base_map": {"kind": "tent"}})").find("/base_map/kind") != std::string::npos);
  CHECK(config_error(R"({"dichotomy": {"p": {"base": [0.1]}}})").find("/dichotomy/p/base") != std::string::npos);
}

TEST_CASE("config syntax errors carry line and column") {
  const std::string msg = config_error("{\n  \"seed\": 1,\n  oops\n}");
  CHECK(msg.find("line 3") != std::string::npos);
}

TEST_CASE("effective config round-trips") {
  const ExperimentConfig c = parse_config(R"({"seed": 4, "entropy": {"alt_delta": 0.3}})");
  const nlohmann::json j = effective_json(c);
  const ExperimentConfig d = config_from_json(j);
  CHECK(effective_json(d) == j);
}

TEST_CASE("CSV cells use 17 significant digits and fixed columns") {
  CsvTable t({"a", "b", "c"});
  t.cell(0.1).cell(3).cell("x,y");
  t.end_row();
  CHECK(t.str() == "a,b,c\n0.10000000000000001,3,\"x,y\"\n");
  t.cell(1.0);
  CHECK_THROWS_AS(t.end_row(), Error);
}

TEST_CASE("every output file has a manifest") {
  ExperimentConfig c = parse_config(R"({"base_map": {"kind": "golden_rotation"}, "profile": {"count": 6}})");
  RunOptions o;
  o.out_dir = scratch("manifest").string();
  for (const std::string cmd : {"flatfn", "recurrence"}) {
    const nlohmann::json summary = run_command(cmd, c, o);
    CHECK(summary["all_checks_pass"].get<bool>());
  }
  int data_files = 0;
  for (const auto& entry : fs::directory_iterator(o.out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 14 && name.substr(name.size() - 14) == ".manifest.json") continue;
    ++data_files;
    const fs::path manifest = entry.path().string() + ".manifest.json";
    REQUIRE(fs::exists(manifest));
    const auto m = nlohmann::json::parse(slurp(manifest));
    CHECK(m["file"] == name);
    CHECK(m["rng_algorithm"] == CounterRng::kAlgorithm);
    CHECK(m["config"]["seed"] == 1);
    CHECK(m.contains("timings"));
  }
  CHECK(data_files >= 6);
}

TEST_CASE("uncertified recurrence is announced in the manifest") {
  ExperimentConfig c = parse_config(R"({"profile": {"count": 4}, "flatfn": {"grid_points": 10}})");
  RunOptions o;
  o.out_dir = scratch("warn").string();
  run_flatfn(c, o);
  const auto m = nlohmann::json::parse(slurp(fs::path(o.out_dir) / "flatfn_values.csv.manifest.json"));
  REQUIRE(m["warnings"].size() >= 1);
  CHECK(m["warnings"][0].get<std::string>().rfind("uncertified recurrence", 0) == 0);
  CHECK(m["derived"]["profile"]["L_values"].size() == 4);
  CHECK(m["derived"]["profile"]["l_sequence"].size() == 4);
  CHECK(m["derived"]["profile"]["betas"].size() == 5);
}

TEST_CASE("outputs do not depend on the worker count") {
  ExperimentConfig c = parse_config(R"({"timechange": {"checks": 40}})");
  RunOptions one{scratch("w1").string(), 1};
  RunOptions four{scratch("w4").string(), 4};
  run_timechange(c, one);
  run_timechange(c, four);
  for (const auto& entry : fs::directory_iterator(one.out_dir)) {
    const std::string name = entry.path().filename().string();
    const fs::path other = fs::path(four.out_dir) / name;
    if (name.find(".manifest.json") != std::string::npos) {
      auto a = nlohmann::json::parse(slurp(entry.path()));
      auto b = nlohmann::json::parse(slurp(other));
      a.erase("timings");
      b.erase("timings");
      CHECK(a == b);
    } else {
      CHECK(slurp(entry.path()) == slurp(other));
    }
  }
}

TEST_CASE("dichotomy refuses a rotation base and leaves a report") {
  ExperimentConfig c = parse_config(R"({"base_map": {"kind": "golden_rotation"}})");
  RunOptions o{scratch("dich").string(), 1};
  CHECK_THROWS_AS(run_dichotomy(c, o), Error);
  CHECK(fs::exists(fs::path(o.out_dir) / "dichotomy_report.json"));
}
