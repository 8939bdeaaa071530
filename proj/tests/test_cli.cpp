#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef _WIN32
#include <sys/wait.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

const fs::path kScratch = "cli_scratch";

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = kScratch / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err = kScratch / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  fs::create_directories(kScratch);
  const std::string cmd = std::string(CLEBSCH_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
#ifdef _WIN32
  r.code = status;
#else
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

json finite_config(const std::string& out_dir) {
  return json{
      {"backend", "finite"},
      {"group", "so3"},
      {"horizon", 1.0},
      {"integrator", {{"scheme", "rk4"}, {"dt", 0.01}}},
      {"system",
       {{"m", 1.0},
        {"spring", 1.0},
        {"q0", {1.0, 0.0, 0.0}},
        {"p0", {0.0, 1.0, 0.0}},
        {"xi", {{"type", "constant"}, {"value", {0.0, 0.0, 0.8}}}}}},
      {"output", {{"cadence", 10}, {"dir", out_dir}}}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

// cases share artifacts (plotscript reuses the run dir), so the scratch
// tree is removed once at the end of the whole run
struct ScratchCleaner : Catch::EventListenerBase {
  using EventListenerBase::EventListenerBase;
  void testRunEnded(const Catch::TestRunStats&) override {
    std::error_code ec;
    fs::remove_all(kScratch, ec);
  }
};

}  // namespace

CATCH_REGISTER_LISTENER(ScratchCleaner)

TEST_CASE("check prints a normalized config that revalidates to itself") {
  const fs::path cfg1 = kScratch / "check_a.json";
  spit(cfg1, finite_config("cli_scratch/check_out").dump(2));
  const CliResult first = run_cli("check " + cfg1.string());
  REQUIRE(first.code == 0);
  const json norm1 = json::parse(first.out);
  CHECK(norm1.at("backend") == "finite");
  CHECK(norm1.at("output").at("cadence") == 10);
  CHECK(norm1.at("integrator").at("newton_tol").get<double>() > 0);

  const fs::path cfg2 = kScratch / "check_b.json";
  spit(cfg2, norm1.dump(2));
  const CliResult second = run_cli("check " + cfg2.string());
  REQUIRE(second.code == 0);
  CHECK(json::parse(second.out) == norm1);
}

TEST_CASE("run writes the time series and summary for a finite scenario") {
  const std::string dir = "cli_scratch/run_finite";
  const fs::path cfg = kScratch / "run_finite.json";
  spit(cfg, finite_config(dir).dump(2));
  const CliResult r = run_cli("run " + cfg.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find(dir) != std::string::npos);

  const std::string csv = slurp(fs::path(dir) / "series.csv");
  REQUIRE(!csv.empty());
  CHECK(csv.find("\r") == std::string::npos);
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "t,H,C_norm,J_1,J_2,J_3");
  std::vector<std::string> rows;
  while (std::getline(ss, line))
    if (!line.empty()) rows.push_back(line);
  REQUIRE(rows.size() == 11);  // 100 steps at cadence 10, plus the initial row
  CHECK(std::stod(split_csv_line(rows.front())[0]) == 0.0);
  CHECK(std::stod(split_csv_line(rows.back())[0]) == Catch::Approx(1.0).margin(1e-12));

  const json summary = json::parse(slurp(fs::path(dir) / "summary.json"));
  CHECK(summary.at("rows") == 11);
  CHECK(summary.at("config").at("backend") == "finite");
  CHECK(summary.at("final").at("t").get<double>() == Catch::Approx(1.0).margin(1e-12));
  CHECK(summary.at("drift").at("energy").get<double>() < 1e-8);
  CHECK(summary.at("drift").contains("constraint"));
  CHECK(summary.at("wall_time_seconds").get<double>() >= 0.0);
}

TEST_CASE("zero horizon produces exactly the initial row") {
  json cfg = finite_config("cli_scratch/run_zero");
  cfg["horizon"] = 0.0;
  const fs::path p = kScratch / "run_zero.json";
  spit(p, cfg.dump(2));
  const CliResult r = run_cli("run " + p.string());
  REQUIRE(r.code == 0);
  const json summary = json::parse(slurp(fs::path("cli_scratch/run_zero") / "summary.json"));
  CHECK(summary.at("rows") == 1);
  CHECK(summary.at("final").at("t") == 0.0);
}

TEST_CASE("the environment variable overrides the configured output directory") {
  json cfg = finite_config("cli_scratch/env_ignored");
  cfg["horizon"] = 0.0;
  const fs::path p = kScratch / "run_env.json";
  spit(p, cfg.dump(2));
  ::setenv("CLEBSCH_OUTPUT_DIR", "cli_scratch/env_used", 1);
  const CliResult r = run_cli("run " + p.string());
  ::unsetenv("CLEBSCH_OUTPUT_DIR");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(fs::path("cli_scratch/env_used") / "series.csv"));
  CHECK(!fs::exists(fs::path("cli_scratch/env_ignored") / "series.csv"));
  // the echoed config keeps the configured directory; only the run moved
  const json summary = json::parse(slurp(fs::path("cli_scratch/env_used") / "summary.json"));
  CHECK(summary.at("config").at("output").at("dir") == "cli_scratch/env_ignored");
  CHECK(summary.at("output_dir") == "cli_scratch/env_used");
}

TEST_CASE("config validation failures name the offending field") {
  // lattice backend rejects the rotation group
  json bad = finite_config("cli_scratch/unused");
  bad["backend"] = "ymh";
  const fs::path p1 = kScratch / "bad_group.json";
  spit(p1, bad.dump(2));
  const CliResult r1 = run_cli("check " + p1.string());
  CHECK(r1.code == 2);
  CHECK(r1.err.find("group") != std::string::npos);

  // unknown keys are rejected, not ignored
  json unknown = finite_config("cli_scratch/unused");
  unknown["systemm"] = json::object();
  const fs::path p2 = kScratch / "bad_key.json";
  spit(p2, unknown.dump(2));
  const CliResult r2 = run_cli("check " + p2.string());
  CHECK(r2.code == 2);
  CHECK(r2.err.find("systemm") != std::string::npos);

  // gr takes no group key
  json gr = {{"backend", "gr"},
             {"group", "su2"},
             {"horizon", 0.0},
             {"integrator", {{"scheme", "rk4"}, {"dt", 0.001}}},
             {"system", {{"scenario", "kasner"}, {"t0", 1.0}}}};
  const fs::path p3 = kScratch / "bad_gr.json";
  spit(p3, gr.dump(2));
  const CliResult r3 = run_cli("check " + p3.string());
  CHECK(r3.code == 2);
  CHECK(r3.err.find("group") != std::string::npos);

  // horizon must divide into whole steps
  json frac = finite_config("cli_scratch/unused");
  frac["horizon"] = 0.505;
  const fs::path p4 = kScratch / "bad_horizon.json";
  spit(p4, frac.dump(2));
  const CliResult r4 = run_cli("check " + p4.string());
  CHECK(r4.code == 2);
  CHECK(r4.err.find("horizon") != std::string::npos);

  // malformed JSON
  const fs::path p5 = kScratch / "bad_syntax.json";
  spit(p5, "{\"backend\": ");
  const CliResult r5 = run_cli("check " + p5.string());
  CHECK(r5.code == 2);
}

TEST_CASE("sweep fits the expected convergence rate of the constraint drift") {
  // the finite catalog is linear, where the stepper conserves energy far
  // below the fit floor; homogeneous su2 lattice data exercises the full
  // quartic nonlinearity and its constraint drift is pure truncation error
  json cfg = {{"backend", "ymh"},
              {"group", "su2"},
              {"horizon", 0.2},
              {"integrator", {{"scheme", "rk4"}, {"dt", 0.005}}},
              {"system",
               {{"n", 4},
                {"a", 1.0},
                {"mu", 0.3},
                {"v", 0.9},
                {"init", {{"type", "homogeneous"}, {"seed", 5}, {"amplitude", 1.0}}}}},
              {"output", {{"cadence", 4}, {"dir", "cli_scratch/sweep_rate"}}},
              {"sweep", {{"metric", "constraint"}}}};
  const fs::path p = kScratch / "sweep_rate.json";
  spit(p, cfg.dump(2));
  const CliResult r = run_cli("sweep " + p.string() + " --dt 0.02,0.01,0.005");
  REQUIRE(r.code == 0);
  const json report = json::parse(slurp(fs::path("cli_scratch/sweep_rate") / "sweep_summary.json"));
  REQUIRE(report.at("slope_applicable") == true);
  const double slope = report.at("slope").get<double>();
  CHECK(slope > 3.5);
  CHECK(slope < 4.5);
  CHECK(report.at("dt_values").size() == 3);
  for (const char* sub : {"dt_0.02", "dt_0.01", "dt_0.005"}) {
    CHECK(fs::exists(fs::path("cli_scratch/sweep_rate") / sub / "series.csv"));
    CHECK(fs::exists(fs::path("cli_scratch/sweep_rate") / sub / "summary.json"));
  }
}

TEST_CASE("sweep reports no slope when the drift sits at round-off") {
  json cfg = finite_config("cli_scratch/sweep_null");
  cfg["horizon"] = 0.4;
  cfg["system"]["spring"] = 0.0;
  cfg["system"]["p0"] = {0.0, 0.0, 0.0};  // energy is identically zero
  const fs::path p = kScratch / "sweep_null.json";
  spit(p, cfg.dump(2));
  const CliResult r = run_cli("sweep " + p.string() + " --dt 0.04,0.02,0.01");
  REQUIRE(r.code == 0);
  const json report = json::parse(slurp(fs::path("cli_scratch/sweep_null") / "sweep_summary.json"));
  CHECK(report.at("slope_applicable") == false);
  CHECK(report.at("slope").is_null());
}

TEST_CASE("sweep rejects bad dt lists") {
  json cfg = finite_config("cli_scratch/sweep_bad");
  cfg["horizon"] = 0.4;
  const fs::path p = kScratch / "sweep_bad.json";
  spit(p, cfg.dump(2));
  CHECK(run_cli("sweep " + p.string() + " --dt 0.04,0.02").code == 2);
  CHECK(run_cli("sweep " + p.string() + " --dt 0.04,0.02,0.015").code == 2);
  CHECK(run_cli("sweep " + p.string() + " --dt 0.04,abc,0.01").code == 2);
}

TEST_CASE("anisotropic cosmology run reports its fitted exponents") {
  json cfg = {{"backend", "gr"},
              {"horizon", 1.0},
              {"integrator", {{"scheme", "rk4"}, {"dt", 0.001}}},
              {"system", {{"scenario", "kasner"}, {"t0", 1.0}}},
              {"output", {{"cadence", 100}, {"dir", "cli_scratch/run_gr"}}}};
  const fs::path p = kScratch / "run_gr.json";
  spit(p, cfg.dump(2));
  const CliResult r = run_cli("run " + p.string());
  REQUIRE(r.code == 0);

  const std::string csv = slurp(fs::path("cli_scratch/run_gr") / "series.csv");
  std::stringstream ss(csv);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "t,H,ham_constraint,diffeo_norm,J_1,J_2,J_3");

  const json summary = json::parse(slurp(fs::path("cli_scratch/run_gr") / "summary.json"));
  const auto fitted = summary.at("fitted_exponents");
  REQUIRE(fitted.size() == 3);
  CHECK(fitted[0].get<double>() == Catch::Approx(2.0 / 3.0).margin(1e-6));
  CHECK(fitted[1].get<double>() == Catch::Approx(2.0 / 3.0).margin(1e-6));
  CHECK(fitted[2].get<double>() == Catch::Approx(-1.0 / 3.0).margin(1e-6));
  CHECK(summary.at("fitted_exponent_sum").get<double>() == Catch::Approx(1.0).margin(1e-6));
  CHECK(summary.at("fitted_exponent_square_sum").get<double>() == Catch::Approx(1.0).margin(1e-6));
  CHECK(std::abs(summary.at("final").at("ham_constraint").get<double>()) < 1e-8);
}

TEST_CASE("lattice runs write checkpoints that later runs resume") {
  json first = {{"backend", "ymh"},
                {"group", "u1"},
                {"horizon", 0.05},
                {"integrator", {{"scheme", "rk4"}, {"dt", 0.01}}},
                {"system",
                 {{"n", 2},
                  {"a", 1.0},
                  {"mu", 0.3},
                  {"v", 1.0},
                  {"init", {{"type", "smooth_random"}, {"seed", 7}, {"amplitude", 0.2}}}}},
                {"output",
                 {{"cadence", 1}, {"dir", "cli_scratch/ymh_a"}, {"checkpoint", "state.ckpt"}}}};
  const fs::path p1 = kScratch / "ymh_a.json";
  spit(p1, first.dump(2));
  const CliResult r1 = run_cli("run " + p1.string());
  REQUIRE(r1.code == 0);
  const json s1 = json::parse(slurp(fs::path("cli_scratch/ymh_a") / "summary.json"));
  CHECK(s1.at("checkpoint").get<std::string>().find("state.ckpt") != std::string::npos);
  REQUIRE(fs::exists(fs::path("cli_scratch/ymh_a") / "state.ckpt"));

  json second = first;
  second["system"]["init"] = {{"type", "checkpoint"}, {"path", "cli_scratch/ymh_a/state.ckpt"}};
  second["output"] = {{"cadence", 1}, {"dir", "cli_scratch/ymh_b"}};
  const fs::path p2 = kScratch / "ymh_b.json";
  spit(p2, second.dump(2));
  const CliResult r2 = run_cli("run " + p2.string());
  REQUIRE(r2.code == 0);

  const std::string csv = slurp(fs::path("cli_scratch/ymh_b") / "series.csv");
  std::stringstream ss(csv);
  std::string header, row0;
  std::getline(ss, header);
  CHECK(header == "t,H,gauss_l2,gauss_linf,J_1");
  std::getline(ss, row0);
  CHECK(std::stod(split_csv_line(row0)[0]) == Catch::Approx(0.05).margin(1e-12));
  const json s2 = json::parse(slurp(fs::path("cli_scratch/ymh_b") / "summary.json"));
  CHECK(s2.at("final").at("t").get<double>() == Catch::Approx(0.10).margin(1e-12));
  CHECK(s2.at("resumed_from_dt").get<double>() == Catch::Approx(0.01));

  // a mismatched lattice shape is a config error, not a crash
  json third = second;
  third["system"]["n"] = 4;
  const fs::path p3 = kScratch / "ymh_c.json";
  spit(p3, third.dump(2));
  const CliResult r3 = run_cli("run " + p3.string());
  CHECK(r3.code == 2);
  CHECK(r3.err.find("system.init.path") != std::string::npos);
}

TEST_CASE("plotscript emits a python script next to the series") {
  const std::string dir = "cli_scratch/run_finite";
  if (!fs::exists(fs::path(dir) / "series.csv")) {
    const fs::path cfg = kScratch / "plot_prep.json";
    spit(cfg, finite_config(dir).dump(2));
    REQUIRE(run_cli("run " + cfg.string()).code == 0);
  }
  const CliResult r = run_cli("plotscript " + dir);
  REQUIRE(r.code == 0);
  const std::string script = slurp(fs::path(dir) / "plot.py");
  CHECK(script.find("series.csv") != std::string::npos);
  CHECK(script.find("matplotlib") != std::string::npos);

  fs::create_directories("cli_scratch/empty_dir");
  CHECK(run_cli("plotscript cli_scratch/empty_dir").code == 2);
}

TEST_CASE("numerical failures exit with their own status") {
  json cfg = finite_config("cli_scratch/stiff");
  cfg["horizon"] = 1.0;
  cfg["integrator"] = {{"scheme", "implicit_midpoint"}, {"dt", 1.0}};
  cfg["system"]["spring"] = 1e6;
  cfg["system"]["p0"] = {0.0, 0.0, 0.0};
  cfg["system"]["xi"]["value"] = {0.0, 0.0, 0.0};
  const fs::path p = kScratch / "stiff.json";
  spit(p, cfg.dump(2));
  const CliResult r = run_cli("run " + p.string());
  CHECK(r.code == 3);
  CHECK(r.err.find("numerical failure") != std::string::npos);
}
