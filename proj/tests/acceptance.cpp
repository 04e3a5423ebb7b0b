// Acceptance run: one PASS/FAIL line per criterion. Every criterion drives the
// same command layer as the CLI, writes its files under the output directory
// given as the first argument, and must finish inside its time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "flowlab/errors.hpp"
#include "flowlab/lab/commands.hpp"
#include "flowlab/lab/config.hpp"

using namespace flowlab;
using namespace flowlab::lab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path g_root;
int g_workers = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

json run(const std::string& command, const std::string& config_text, const std::string& dir, int workers = -1) {
  RunOptions o;
  o.out_dir = (g_root / dir).string();
  o.workers = workers > 0 ? workers : g_workers;
  fs::remove_all(o.out_dir);
  return run_command(command, parse_config(config_text), o);
}

bool check(const json& summary, const char* name) {
  return summary.contains("checks") && summary["checks"].contains(name) && summary["checks"][name].get<bool>();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// --- 1 ------------------------------------------------------------------------

Outcome flat_function() {
  const json s = run("flatfn", R"({"flatfn": {"shells": 11, "per_shell": 100, "derivative_exponents": 4}})", "c1");
  Outcome o;
  o.pass = check(s, "zero_for_nonpositive_t") && check(s, "one_on_1_2") && check(s, "shell_bounds") &&
           check(s, "derivatives_decrease_to_zero");
  double worst = 0.0;
  for (const auto& row : s["shells"]) worst = std::max(worst, row["max_eta"].get<double>() / row["bound"].get<double>());
  o.detail = "eta = 0 on t <= 0, eta = 1 on [1,2], shells k = 0..10 worst max/bound " + fmt("%.3g", worst) +
             ", FD derivatives orders 1-4 shrink over t = 1e-1..1e-4";
  return o;
}

// --- 2 ------------------------------------------------------------------------

Outcome clocks() {
  const json s = run("timechange", R"({
    "timechange": {"checks": 1000, "max_time": 10, "constant_rate": 2,
                   "field": {"kind": "quadratic", "chart_radius": 0.2, "p": {"base": [0.3, 0.3], "height": 0.5}}}})",
                     "c2");
  Outcome o;
  o.pass = check(s, "cocycle_residual") && check(s, "round_trip") && check(s, "constant_clock_laws");
  o.detail = "max cocycle residual " + fmt("%.2e", s["max_scaled_residual"].get<double>()) + " (< 1e-9), round trip " +
             fmt("%.2e", s["max_round_trip_error"].get<double>()) + " (< 1e-8), constant clock c = 2 exact";
  return o;
}

// --- 3 ------------------------------------------------------------------------

const char* kOracleGrid = R"("sampling": {"count": 100000},
  "grid": {"n_values": [1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16], "eps_values": [0.2, 0.1, 0.05]})";

Outcome entropy_oracles() {
  const std::string tail = std::string(kOracleGrid) + R"(, "entropy": {"suspension": false}})";
  const json cat = run("entropy", R"({"base_map": {"kind": "cat"}, )" + tail, "c3_cat");
  const json rot = run("entropy", R"({"base_map": {"kind": "golden_rotation"}, )" + tail, "c3_rotation");
  const json id = run("entropy", R"({"base_map": {"kind": "identity", "dim": 2}, )" + tail, "c3_identity");
  const double h = cat["map"]["estimate"];
  const double oracle = cat["map"]["oracle"];
  Outcome o;
  o.pass = check(cat, "map_matches_oracle") && check(rot, "map_matches_oracle") && check(id, "map_matches_oracle");
  o.detail = "cat " + fmt("%.4f", h) + " vs " + fmt("%.4f", oracle) + " (" + fmt("%+.1f", 100 * (h / oracle - 1)) +
             "%, tol 10%), golden rotation " + fmt("%.4f", rot["map"]["estimate"].get<double>()) + ", identity " +
             fmt("%.4f", id["map"]["estimate"].get<double>()) + " (< 0.02)";
  return o;
}

// --- 4 ------------------------------------------------------------------------

Outcome suspension_equality() {
  const json s = run("entropy", R"({"sampling": {"count": 100000},
    "grid": {"n_values": [1,2,3,4,5,6,7,8,9,10], "eps_values": [0.2, 0.1, 0.05], "time_step": 0.05}})",
                     "c4");
  Outcome o;
  o.pass = check(s, "suspension_matches_map") && check(s, "box_sandwich");
  o.detail = "suspension " + fmt("%.4f", s["suspension"]["estimate"].get<double>()) + " vs map " +
             fmt("%.4f", s["map"]["estimate"].get<double>()) + " (ratio " +
             fmt("%.3f", s["suspension"]["ratio_to_map"].get<double>()) + ", tol 15%), box sandwich on every cell";
  return o;
}

// --- 5 ------------------------------------------------------------------------

Outcome totoki() {
  const std::string grid = R"("sampling": {"count": 100000},
    "grid": {"n_values": [1,2,3,4,5,6,7,8,9,10], "eps_values": [0.2, 0.1, 0.05], "time_step": 0.05})";
  const json c = run("entropy", "{" + grid + R"(, "entropy": {"map": false, "suspension": false,
    "time_change": {"kind": "constant", "value": 0.5}}})",
                     "c5_constant");
  const json q = run("entropy", "{" + grid + R"(, "entropy": {"map": false, "suspension": false,
    "time_change": {"kind": "quadratic", "chart_radius": 0.2, "p": {"base": [0.3, 0.3], "height": 0.5}}}})",
                     "c5_quadratic");
  Outcome o;
  o.pass = check(c, "totoki_ratio") && check(q, "totoki_ratio") && check(q, "K_stable_under_doubling");
  o.detail = "a = 2 ratio " + fmt("%.4f", c["totoki"]["ratio"].get<double>()) + " (tol 5%), quadratic ratio " +
             fmt("%.4f", q["totoki"]["ratio"].get<double>()) + " (tol 25%), K " +
             fmt("%.5f", q["totoki"]["K"].get<double>()) + " drift " +
             fmt("%.2e", q["totoki"]["K_drift"].get<double>()) + " under doubling (< 5%)";
  return o;
}

// --- 6 ------------------------------------------------------------------------

Outcome recurrence() {
  const json s = run("recurrence", R"({"base_map": {"kind": "golden_rotation"},
    "recurrence": {"eps_values": [0.3, 0.2, 0.15, 0.1, 0.05], "centers": 5, "orbit_length": 1000000}})",
                     "c6");
  long long L = -1;
  long long oracle = -1;
  for (const auto& row : s["rows"]) {
    if (std::abs(row["eps"].get<double>() - 0.1) < 1e-12) {
      L = row["L"];
      oracle = row["gap_oracle_L"];
    }
  }
  // mu(B(x, 0.1)) of an arc is exactly 0.2
  const bool bound = 0.2 >= 1.0 / static_cast<double>(L);
  Outcome o;
  o.pass = L == oracle && L > 0 && bound && check(s, "ball_measure_bound") && check(s, "monotone_in_eps");
  o.detail = "L(0.1) = " + std::to_string(L) + ", gap oracle " + std::to_string(oracle) + ", 0.2 >= 1/L = " +
             fmt("%.4f", 1.0 / L) + ", sampled ball measures pass, L monotone over 5 eps";
  return o;
}

// --- 7, 8 ---------------------------------------------------------------------

const char* kDichotomy = R"({
  "base_map": {"kind": "cat"},
  "sampling": {"count": 20000},
  "grid": {"n_values": [1,2,3,4,5,6,7,8], "eps_values": [0.2, 0.1, 0.05], "time_step": 0.05},
  "profile": {"i0": 2, "count": 12, "recurrence": "auto", "recurrence_starts": 16},
  "dichotomy": {
    "p": {"base": [0.3, 0.3], "height": 0.5}, "chart_radius": 0.2,
    "flat_depths": [1, 2, 3, 4, 5, 6],
    "gamma_samples": 10000,
    "gamma_base_map": {"kind": "rotation", "angles": [0.6180339887498949, 0.4142135623730950]},
    "witness_points": 10, "witness_horizon": 20, "witness_rows": 20
  }})";

json g_dichotomy;
double g_dichotomy_gamma_s = 0.0;
double g_dichotomy_total_s = 0.0;
std::string g_dichotomy_error;

void run_dichotomy_once() {
  if (!g_dichotomy.is_null() || !g_dichotomy_error.empty()) return;
  const auto start = std::chrono::steady_clock::now();
  try {
    g_dichotomy = run("dichotomy", kDichotomy, "c7_c8");
  } catch (const std::exception& e) {
    g_dichotomy_error = e.what();
  }
  g_dichotomy_total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path manifest = g_root / "c7_c8" / "dichotomy_report.json.manifest.json";
  if (fs::exists(manifest)) {
    const json m = json::parse(slurp(manifest));
    for (const auto& [stage, secs] : m["timings"].items()) {
      if (stage == "gamma") g_dichotomy_gamma_s = secs.get<double>();
    }
  }
}

Outcome divergence() {
  run_dichotomy_once();
  if (!g_dichotomy_error.empty()) return {false, g_dichotomy_error};
  const json& s = g_dichotomy;
  std::string trace;
  for (const auto& row : s["gamma"]) {
    if (row["field"] != "flat" || row["depth"] == 0) continue;
    trace += trace.empty() ? "" : ", ";
    trace += row["diverged"].get<bool>() ? std::string("Diverged") : fmt("%.3g", row["expected_gamma"].get<double>());
  }
  Outcome o;
  o.pass = check(s, "flat_gamma_diverges") && check(s, "quadratic_gamma_stable") && check(s, "forced_2d_diverges");
  o.detail = "flat E(gamma) i = 1..6: " + trace + "; quadratic drift " +
             fmt("%.2e", s["quadratic_gamma_drift"].get<double>()) + " (< 5%); forced 2D tail ratio " +
             fmt("%.3f", s["tail"]["forced_2d"]["tail_ratio"].get<double>()) + " diverged (gamma stage " +
             fmt("%.0f", g_dichotomy_gamma_s) + " s)";
  return o;
}

Outcome headline() {
  run_dichotomy_once();
  if (!g_dichotomy_error.empty()) return {false, g_dichotomy_error};
  const json& s = g_dichotomy;
  std::string flat;
  for (const auto& row : s["flat"]) {
    flat += flat.empty() ? "" : ", ";
    flat += row.contains("estimate") ? fmt("%.3f", row["estimate"].get<double>()) : std::string("error");
  }
  Outcome o;
  o.pass = check(s, "quadratic_keeps_half_of_psi") && check(s, "flat_decreases_below_0_1") &&
           check(s, "witness_monotone");
  o.detail = "psi " + fmt("%.4f", s["psi"]["estimate"].get<double>()) + ", quadratic " +
             fmt("%.4f", s["quadratic"]["estimate"].get<double>()) + " (>= 50%), flat i = 1..6: " + flat +
             " (nonincreasing, < 0.1), witness tables monotone for 10 points";
  return o;
}

// --- 9 ------------------------------------------------------------------------

// Data files must match byte for byte; manifests may differ only in timings.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    const fs::path other = b / name;
    ++files;
    if (!fs::exists(other)) {
      why = name + " missing";
      return false;
    }
    if (name.find(".manifest.json") != std::string::npos) {
      json x = json::parse(slurp(entry.path()));
      json y = json::parse(slurp(other));
      x.erase("timings");
      y.erase("timings");
      if (x != y) {
        why = name + " differs";
        return false;
      }
    } else if (slurp(entry.path()) != slurp(other)) {
      why = name + " differs";
      return false;
    }
  }
  std::size_t files_b = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(b)) ++files_b;
  if (files != files_b) {
    why = "file sets differ";
    return false;
  }
  return true;
}

Outcome determinism() {
  struct Suite {
    const char* command;
    const char* config;
  };
  const std::vector<Suite> suites = {
      {"flatfn", R"({"seed": 17})"},
      {"timechange", R"({"seed": 17, "timechange": {"checks": 200}})"},
      {"recurrence", R"({"seed": 17, "base_map": {"kind": "golden_rotation"}})"},
      {"entropy", R"({"seed": 17, "sampling": {"count": 5000},
         "grid": {"n_values": [1,2,3,4,5,6], "eps_values": [0.2, 0.1]},
         "entropy": {"time_change": {"kind": "quadratic"}}})"},
      {"dichotomy", R"({"seed": 17, "sampling": {"count": 8000},
         "grid": {"n_values": [1,2,3,4], "eps_values": [0.2, 0.1]},
         "dichotomy": {"flat_depths": [1, 2], "gamma_samples": 500, "witness_points": 3}})"},
  };
  Outcome o;
  o.pass = true;
  int files = 0;
  for (const auto& suite : suites) {
    const std::string base = std::string("c9_") + suite.command;
    run(suite.command, suite.config, base + "_w1", 1);
    run(suite.command, suite.config, base + "_w8", 8);
    run(suite.command, suite.config, base + "_w1_again", 1);
    std::string why;
    const bool same = same_outputs(g_root / (base + "_w1"), g_root / (base + "_w8"), why) &&
                      same_outputs(g_root / (base + "_w1"), g_root / (base + "_w1_again"), why);
    if (!same) {
      o.pass = false;
      o.detail += std::string(suite.command) + ": " + why + "; ";
    }
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(g_root / (base + "_w1"))) ++files;
  }
  if (o.pass) {
    o.detail = "5 commands, " + std::to_string(files) +
               " files identical across reruns and 1 vs 8 workers (manifest timings excluded)";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  g_root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(g_root);
  g_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  const std::vector<Criterion> criteria = {
      {1, "flat function", 5, flat_function},
      {2, "clocks", 30, clocks},
      {3, "entropy oracles", 600, entropy_oracles},
      {4, "suspension equality", 900, suspension_equality},
      {5, "Totoki identity", 1200, totoki},
      {6, "recurrence", 60, recurrence},
      {7, "divergence dichotomy", 600, divergence},
      {8, "headline dichotomy surrogate", 1800, headline},
      {9, "determinism", 1800, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // 7 and 8 share one dichotomy run: 7 is timed by its gamma stage, 8 by the whole run.
    if (c.id == 7) secs = g_dichotomy_gamma_s;
    if (c.id == 8) secs = g_dichotomy_total_s;
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("criterion %d %s %s: %s [%.1f s, budget %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.title,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
