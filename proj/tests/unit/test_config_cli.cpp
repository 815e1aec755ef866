#include "dualrate/cli.hpp"
#include "dualrate/config.hpp"
#include "dualrate/csv.hpp"

#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace dualrate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string output;  // stdout and stderr
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(DUALRATE_CLI_PATH) + " " + args + " 2>&1";
  Outcome out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out.output += buf;
  const int raw = pclose(pipe);
  out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dualrate_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty configuration gives the reference defaults") {
  const auto cfg = resolve_config(std::nullopt, {});
  const auto& e = cfg.experiment;
  CHECK(e.rate.xi == 0.01);
  CHECK(e.rate.ell == 6);
  CHECK(e.rate.C == 2.0);
  CHECK(e.rate.p == 1.0);
  CHECK(e.rate.q1 == 4);
  CHECK(e.rate.q2 == 5);
  CHECK(e.rate.pi1 == 2.0);
  CHECK(e.rate.pi2 == 3.0);
  CHECK(e.noise.sigma == 0.15);
  CHECK(e.replications == 500);
  CHECK(e.order == 5);
}

TEST_CASE("overrides replace single keys") {
  const auto cfg = resolve_config(std::nullopt, {{"C", "2.5", "--C"}});
  CHECK(cfg.experiment.rate.C == 2.5);
  CHECK(cfg.experiment.rate.ell == 6);
}

TEST_CASE("file parsing and precedence") {
  const auto kvs = parse_key_values("# comment\n\nell = 8\nsignal=g3  # trailing\nwindows = 10:12;50:55\n", "f");
  REQUIRE(kvs.size() == 3);
  CHECK(kvs[0].key == "ell");
  CHECK(kvs[0].value == "8");
  CHECK(kvs[1].value == "g3");

  const auto dir = scratch_dir("precedence");
  std::ofstream(dir / "a.cfg") << "ell = 8\nsigma = 0.2\nwindows = 10:12;50:55\n";
  const auto cfg = resolve_config(dir / "a.cfg", {{"sigma", "0.3", "--sigma"}});
  CHECK(cfg.experiment.rate.ell == 8);
  CHECK(cfg.experiment.noise.sigma == 0.3);
  REQUIRE(cfg.experiment.windows.size() == 2);
  CHECK(cfg.experiment.windows[1].hi == 55.0);
}

TEST_CASE("bad keys and values name the key") {
  auto key_of = [](const std::vector<KeyValue>& kv) {
    try {
      (void)resolve_config(std::nullopt, kv);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("none");
  };
  CHECK(key_of({{"ell", "1", "--ell"}}) == "ell");
  CHECK(key_of({{"ell", "six", "--ell"}}) == "ell");
  CHECK(key_of({{"bogus", "1", "--bogus"}}) == "bogus");
  CHECK(key_of({{"windows", "10-12", "--windows"}}) == "windows");
  CHECK(key_of({{"B", "0", "--B"}}) == "B");
  CHECK_THROWS_AS(parse_key_values("no equals sign\n", "f"), ConfigError);
}

TEST_CASE("rendered configuration parses back to itself") {
  auto cfg = resolve_config(std::nullopt, {{"C", "2.5", "--C"}, {"windows", "10:12;50:55", "--windows"}});
  const auto text = render_config(cfg);
  const auto dir = scratch_dir("roundtrip");
  write_text(dir / "r.cfg", render_manifest(cfg, {{"x.csv"}, 1.5, 2}));
  const auto back = resolve_config(dir / "r.cfg", {});
  CHECK(render_config(back) == text);
}

TEST_CASE("seed falls back to the environment") {
  ::setenv("DUALRATE_SEED", "777", 1);
  CHECK(resolve_config(std::nullopt, {}).experiment.seed == 777);
  CHECK(resolve_config(std::nullopt, {{"seed", "5", "--seed"}}).experiment.seed == 5);
  ::unsetenv("DUALRATE_SEED");
  CHECK(resolve_config(std::nullopt, {}).experiment.seed == 20240601);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(std::nan("")).empty());
}

TEST_CASE("error lines are single machine-readable lines") {
  CHECK(error_line("io", "out", "cannot \"write\"") == "error category=io key=out message=\"cannot \\\"write\\\"\"");
  CHECK(exit_code_for(ErrorCategory::calibration) == exit_code::calibration);
  CHECK(exit_code_for(ErrorCategory::no_antecedent) == 9);
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch_dir("cli");
  CHECK(run("").status == exit_code::usage);
  CHECK(run("frobnicate --out x").status == exit_code::usage);
  CHECK(run("emit-signal").status == exit_code::usage);

  const auto bad = run("emit-signal --name g1 --ell 1 --out " + (dir / "s.csv").string());
  CHECK(bad.status == exit_code::validation);
  CHECK(bad.output.find("error category=validation key=ell") != std::string::npos);

  const auto io = run("emit-signal --name g1 --out " + (dir / "missing" / "s.csv").string());
  CHECK(io.status == exit_code::io);
  CHECK(io.output.find("category=io") != std::string::npos);

  const auto cal = run("estimate --signal g1 --calibration_fraction 0.004 --out " + (dir / "e.csv").string());
  CHECK(cal.status == exit_code::validation);
}

TEST_CASE("emit-signal and tabulate-wavelet write CSVs with manifests") {
  const auto dir = scratch_dir("emit");
  const auto out = dir / "g1.csv";
  REQUIRE(run("emit-signal --name g1 --step 0.5 --out " + out.string()).status == 0);
  const auto text = slurp(out);
  CHECK(text.rfind("t,g\n0,0\n", 0) == 0);
  CHECK(text.find("\n25,-2.4") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 202);
  CHECK(fs::exists(dir / "g1.csv.manifest"));

  const auto tab = dir / "db3.csv";
  REQUIRE(run("tabulate-wavelet --order 3 --depth 6 --out " + tab.string()).status == 0);
  const auto t = slurp(tab);
  CHECK(t.rfind("u,phi,psi\n0,", 0) == 0);
  // (L-1) 2^depth + 1 rows plus the header
  CHECK(std::count(t.begin(), t.end(), '\n') == 5 * 64 + 2);
}

TEST_CASE("estimate in constant mode") {
  const auto dir = scratch_dir("estimate");
  const auto out = dir / "est.csv";
  REQUIRE(run("estimate --signal g2 --mode constant --rate 100 --seed 3 --out " + out.string()).status == 0);
  const auto text = slurp(out);
  CHECK(text.rfind("t,ghat,g\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 10002);
  CHECK(slurp(fs::path(out.string() + ".manifest")).find("seed=3") != std::string::npos);
}

TEST_CASE("run writes the study files") {
  const auto dir = scratch_dir("run");
  REQUIRE(run("run --signal g4 --B 2 --jobs 2 --out " + dir.string()).status == 0);
  for (const char* f : {"replications.csv", "mise_full.csv", "mise_windows.csv", "median_g4.csv",
                        "rate_trace_g4.csv", "manifest.cfg"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(slurp(dir / "mise_full.csv").rfind("signal,mode,MISE,mc_stderr\ng4,dual,", 0) == 0);
  CHECK(slurp(dir / "median_g4.csv").rfind("t,y_noisy,g,ghat_dual,ghat_const,rate\n", 0) == 0);
  CHECK(slurp(dir / "rate_trace_g4.csv").rfind("t,regime,rate_hz,witness_level,witness_coeff\n", 0) == 0);
}
