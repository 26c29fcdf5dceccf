// Drives the installed CLI binary end to end; the binary path arrives as
// argv[1] from CTest.
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "grasscode/storage.hpp"

namespace {

std::string g_cli;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const std::string out_path = "cli_stdout.txt";
  const std::string err_path = "cli_stderr.txt";
  const std::string cmd = g_cli + " " + args + " > " + out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return r;
}

std::string slurp_file(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("patterns: table, counts, usage errors") {
  const auto r = run_cli("patterns --t 4 --m 2 --s 4 --json cli_patterns.json");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("n(4,2,4) = 7 patterns") != std::string::npos);
  CHECK(r.out.find("3 rank-safe") != std::string::npos);
  const std::string doc = slurp_file("cli_patterns.json");
  CHECK(doc.find("\"count\": 7") != std::string::npos);
  CHECK(doc.find("\"rank_safe\"") != std::string::npos);
  CHECK(doc.find("\"pivots\"") != std::string::npos);
  std::remove("cli_patterns.json");
  std::remove("cli_patterns.json.manifest.json");

  CHECK(run_cli("patterns --t 2 --m 1 --s 2").out.find("n(2,1,2) = 1 patterns") !=
        std::string::npos);
  CHECK(run_cli("patterns --t 2 --m 3 --s 2").exit_code == 2);  // M > T
  CHECK(run_cli("patterns --t 4 --m 2").exit_code == 2);        // missing flag
}

TEST_CASE("design: sparse writes ellpack plus report; infeasible exits 3") {
  const auto r = run_cli(
      "design --method sparse --t 4 --m 2 --s 4 --card 4 --seed 5 --out cli_sparse.json");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("MCPD=") != std::string::npos);
  const auto c = grasscode::load_constellation("cli_sparse.json");
  CHECK(c.size() == 4);
  CHECK(slurp_file("cli_sparse.json").find("\"ellpack\"") != std::string::npos);
  CHECK(slurp_file("cli_sparse.json.report.json").find("achieved_mcpd") != std::string::npos);
  CHECK(slurp_file("cli_sparse.json.manifest.json").find("\"command\"") != std::string::npos);

  const auto infeasible = run_cli(
      "design --method sparse --t 4 --m 2 --s 2 --card 10 --out cli_infeasible.json");
  CHECK(infeasible.exit_code == 3);

  const auto reused = run_cli(
      "design --method sparse --t 4 --m 2 --s 4 --card 9 --seed 5 --out cli_reuse.json");
  CHECK(reused.exit_code == 0);
  CHECK(reused.err.find("reused") != std::string::npos);
  std::remove("cli_reuse.json");
  std::remove("cli_reuse.json.report.json");
  std::remove("cli_reuse.json.manifest.json");
}

TEST_CASE("design: expmap writes a dense loadable file") {
  const auto r = run_cli("design --method expmap --t 4 --m 2 --card 4 --out cli_expmap.json");
  CHECK(r.exit_code == 0);
  const auto c = grasscode::load_constellation("cli_expmap.json");
  CHECK(c.size() == 4);
  CHECK(slurp_file("cli_expmap.json").find("\"dense\"") != std::string::npos);
}

TEST_CASE("design: GRASSCODE_SEED fallback and config file override") {
  {
    std::ofstream cfg("cli_cfg.json");
    cfg << R"({"restarts": 2, "max_iterations": 150})";
  }
  const auto flagged = run_cli(
      "design --method mcpd --t 4 --m 2 --card 3 --seed 77 --config cli_cfg.json "
      "--out cli_seed_a.json");
  REQUIRE(flagged.exit_code == 0);

  // Same seed through the environment fallback: identical output bytes.
  const int env_exit = std::system(
      (std::string("GRASSCODE_SEED=77 ") + g_cli +
       " design --method mcpd --t 4 --m 2 --card 3 --config cli_cfg.json "
       "--out cli_seed_b.json > /dev/null 2>&1")
          .c_str());
  REQUIRE(WIFEXITED(env_exit));
  REQUIRE(WEXITSTATUS(env_exit) == 0);
  CHECK(slurp_file("cli_seed_a.json") == slurp_file("cli_seed_b.json"));
  for (const char* f : {"cli_cfg.json", "cli_seed_a.json", "cli_seed_a.json.report.json",
                        "cli_seed_a.json.manifest.json", "cli_seed_b.json",
                        "cli_seed_b.json.report.json", "cli_seed_b.json.manifest.json"}) {
    std::remove(f);
  }
}

TEST_CASE("ser and ami: determinism and CSV output") {
  const auto ser1 = run_cli(
      "ser --constellation cli_sparse.json --snr 5,10 --frames 20000 --errors 100000 "
      "--seed 3 --workers 2 --out cli_ser.csv");
  REQUIRE(ser1.exit_code == 0);
  const std::string first = slurp_file("cli_ser.csv");
  CHECK(first.find("snr_db,metric,value,half_width,frames") != std::string::npos);
  CHECK(first.find("ser") != std::string::npos);

  const auto ser2 = run_cli(
      "ser --constellation cli_sparse.json --snr 5,10 --frames 20000 --errors 100000 "
      "--seed 3 --workers 2 --out cli_ser2.csv");
  REQUIRE(ser2.exit_code == 0);
  CHECK(first == slurp_file("cli_ser2.csv"));  // byte-identical rerun
  std::remove("cli_ser.csv");
  std::remove("cli_ser.csv.manifest.json");
  std::remove("cli_ser2.csv");
  std::remove("cli_ser2.csv.manifest.json");

  const auto ami = run_cli(
      "ami --constellation cli_sparse.json --snr 0,30 --frames 5000 --seed 3 "
      "--out cli_ami.csv");
  REQUIRE(ami.exit_code == 0);
  CHECK(slurp_file("cli_ami.csv").find("ami") != std::string::npos);
  std::remove("cli_ami.csv");
  std::remove("cli_ami.csv.manifest.json");

  CHECK(run_cli("ser --constellation cli_sparse.json --frames 10 --out x.csv").exit_code ==
        2);  // missing --snr
  CHECK(run_cli("ser --constellation missing.json --snr 5 --out x.csv").exit_code == 4);
}

TEST_CASE("bounds: proposed column finite on the rank-deficient reference") {
  const auto design = run_cli(
      "design --method rank-deficient --t 4 --m 2 --card 4 --seed 5 --out cli_rd.json");
  REQUIRE(design.exit_code == 0);
  const auto r = run_cli("bounds --constellation cli_rd.json --snr 5,10 --out cli_bounds.csv");
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp_file("cli_bounds.csv");
  CHECK(csv.find("snr_crossover_db") != std::string::npos);
  CHECK(csv.find("6.83") != std::string::npos);  // 6.84 dB to csv precision
  CHECK(csv.find("inf") != std::string::npos);   // conventional column diverges
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  int rows = 0;
  while (std::getline(lines, row)) {
    // union_bound (second column) stays finite.
    const auto first_comma = row.find(',');
    const auto second_comma = row.find(',', first_comma + 1);
    const std::string proposed = row.substr(first_comma + 1, second_comma - first_comma - 1);
    CHECK(proposed.find("inf") == std::string::npos);
    ++rows;
  }
  CHECK(rows == 2);
  std::remove("cli_rd.json");
  std::remove("cli_rd.json.manifest.json");
  std::remove("cli_bounds.csv");
  std::remove("cli_bounds.csv.manifest.json");
}

TEST_CASE("bench runs the correctness gate and reports counts") {
  const auto r = run_cli("bench --t 4 --m 2 --card 4 --frames 500");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("MACs") != std::string::npos);
  CHECK(r.out.find("identical") != std::string::npos);
}

TEST_CASE("cleanup design artifacts") {
  std::remove("cli_sparse.json");
  std::remove("cli_sparse.json.report.json");
  std::remove("cli_sparse.json.manifest.json");
  std::remove("cli_expmap.json");
  std::remove("cli_expmap.json.manifest.json");
  CHECK(true);
}

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  doctest::Context context;
  context.applyCommandLine(1, argv);
  return context.run();
}
