#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "grasscode/analysis.hpp"
#include "grasscode/baselines.hpp"
#include "grasscode/designer.hpp"
#include "grasscode/errors.hpp"
#include "grasscode/grassmann.hpp"
#include "grasscode/schubert.hpp"
#include "grasscode/simulator.hpp"
#include "grasscode/storage.hpp"

namespace {

using namespace grasscode;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::uint64_t seed_or_env(std::uint64_t seed, bool seed_given) {
  if (seed_given) return seed;
  if (const char* env = std::getenv("GRASSCODE_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return seed;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Every command that writes files also drops <first output>.manifest.json
/// recording the full invocation; outputs are located from the manifest by
/// name.
void write_manifest(const std::string& command, const std::vector<std::string>& argv_echo,
                    std::uint64_t seed, const json& config_echo,
                    const std::vector<std::string>& outputs, double wall_time_s) {
  if (outputs.empty()) return;
  json doc;
  doc["command"] = command;
  doc["argv"] = argv_echo;
  doc["seed"] = seed;
  doc["version"] = kVersion;
  doc["config"] = config_echo;
  doc["outputs"] = outputs;
  doc["wall_time_s"] = wall_time_s;
  const std::string path = outputs.front() + ".manifest.json";
  std::ofstream out(path);
  out << doc.dump(1) << "\n";
}

json pattern_to_json(const SparsityPattern& p) {
  json j;
  json pivots = json::array();
  for (int r : p.pivots()) pivots.push_back(r + 1);
  json supports = json::array();
  for (const auto& supp : p.supports) {
    json s = json::array();
    for (int r : supp) s.push_back(r + 1);
    supports.push_back(std::move(s));
  }
  j["pivots"] = std::move(pivots);
  j["supports"] = std::move(supports);
  j["s"] = p.sparsity();
  j["rank_safe"] = is_rank_safe_for_reuse(p);
  return j;
}

int cmd_patterns(int t, int m, int s, const std::string& json_out,
                 const std::vector<std::string>& argv_echo) {
  Stopwatch watch;
  const auto patterns = enumerate_patterns(t, m, s);
  const auto count = count_patterns(t, m, s);
  std::cout << "n(" << t << "," << m << "," << s << ") = " << count << " patterns\n";
  int safe_count = 0;
  for (size_t i = 0; i < patterns.size(); ++i) {
    const auto& p = patterns[i];
    std::cout << (i + 1) << ": supports ";
    for (const auto& supp : p.supports) {
      std::cout << '{';
      for (size_t k = 0; k < supp.size(); ++k) {
        std::cout << supp[k] + 1 << (k + 1 < supp.size() ? "," : "");
      }
      std::cout << "} ";
    }
    const bool safe = is_rank_safe_for_reuse(p);
    safe_count += safe ? 1 : 0;
    std::cout << (safe ? "rank-safe" : "not-reusable") << "\n";
  }
  std::cout << safe_count << " rank-safe\n";
  if (!json_out.empty()) {
    json doc;
    doc["T"] = t;
    doc["M"] = m;
    doc["s"] = s;
    doc["count"] = count;
    json arr = json::array();
    for (const auto& p : patterns) arr.push_back(pattern_to_json(p));
    doc["patterns"] = std::move(arr);
    std::ofstream out(json_out);
    if (!out) throw LoadError("cannot open " + json_out);
    out << doc.dump(1) << "\n";
    write_manifest("patterns", argv_echo, 0, {{"T", t}, {"M", m}, {"s", s}}, {json_out},
                   watch.seconds());
  }
  return 0;
}

json design_config_echo(const DesignConfig& cfg) {
  return json{{"epsilon", cfg.epsilon},
              {"max_iterations", cfg.max_iterations},
              {"restarts", cfg.restarts},
              {"step_size", cfg.step_size},
              {"tolerance", cfg.tolerance},
              {"seed", cfg.seed},
              {"parallel", cfg.parallel}};
}

int cmd_design(const std::string& method, int t, int m, int s, int card,
               const DesignConfig& cfg, const std::string& out_path,
               const std::vector<std::string>& argv_echo) {
  Stopwatch watch;
  Constellation result({GrassmannPoint(CMat::Identity(2, 1))});
  DesignReport report;
  bool has_report = false;
  ConstellationFormat format = ConstellationFormat::kDense;

  if (method == "sparse") {
    if (card > static_cast<long>(count_patterns(t, m, s))) {
      std::cerr << "note: cardinality exceeds the pattern count; rank-safe patterns are "
                   "reused round-robin\n";
    }
    auto [c, r] = design_sparse(t, m, s, card, cfg);
    result = std::move(c);
    report = std::move(r);
    has_report = true;
    format = ConstellationFormat::kEllpack;
    if (!report.rank_ok) {
      std::cerr << "warning: some pairs are rank deficient after design\n";
    }
  } else if (method == "mcd") {
    auto [c, r] = design_mcd_manopt(t, m, card, cfg);
    result = std::move(c);
    report = std::move(r);
    has_report = true;
  } else if (method == "mcpd") {
    auto [c, r] = design_mcpd_manopt(t, m, card, cfg);
    result = std::move(c);
    report = std::move(r);
    has_report = true;
  } else if (method == "expmap") {
    result = expmap_constellation(t, m, card);
  } else if (method == "rank-deficient") {
    result = design_rank_deficient_reference(t, m, card, cfg);
    format = ConstellationFormat::kEllpack;
  } else {
    throw std::invalid_argument("unknown design method '" + method + "'");
  }

  save_constellation(result, out_path, format);
  std::vector<std::string> outputs{out_path};
  if (has_report) {
    const std::string report_path = out_path + ".report.json";
    std::ofstream rep(report_path);
    if (!rep) throw LoadError("cannot open " + report_path);
    rep << design_report_to_json_text(report) << "\n";
    outputs.push_back(report_path);
  }
  const MinPair mcd = min_pairwise(result, PairMetric::kChordal);
  const MinPair mcpd = min_pairwise(result, PairMetric::kChordalProduct);
  std::cout << "method=" << method << " card=" << result.size() << " MCD=" << mcd.value
            << " MCPD=" << mcpd.value << "\n";
  write_manifest("design", argv_echo, cfg.seed, design_config_echo(cfg), outputs,
                 watch.seconds());
  return 0;
}

int cmd_sim(const std::string& metric, const std::string& constellation_path,
            const SimConfig& cfg, const std::string& out_path,
            const std::vector<std::string>& argv_echo) {
  Stopwatch watch;
  const Constellation c = load_constellation(constellation_path);
  SimConfig run = cfg;
  if (run.n_rx == 0) run.n_rx = c.m_antennas();
  const SimResult res = metric == "ser" ? estimate_ser(c, run) : estimate_ami(c, run);
  std::vector<ResultRow> rows;
  for (const SnrPointResult& p : res) {
    rows.push_back({p.snr_db, metric, p.estimate, p.half_width, p.frames});
    std::cout << metric << " @ " << p.snr_db << " dB: " << p.estimate << " +/- "
              << p.half_width << " (" << p.frames << " frames)\n";
  }
  write_results_csv(rows, out_path);
  write_manifest(metric, argv_echo, run.seed,
                 json{{"constellation", constellation_path},
                      {"n_rx", run.n_rx},
                      {"max_frames", run.max_frames},
                      {"target_error_count", run.target_error_count},
                      {"mc_samples", run.mc_samples},
                      {"workers", run.workers}},
                 {out_path}, watch.seconds());
  return 0;
}

int cmd_bounds(const std::string& constellation_path, const std::vector<double>& snrs,
               int n_rx, const std::string& out_path,
               const std::vector<std::string>& argv_echo) {
  Stopwatch watch;
  if (snrs.empty()) throw std::invalid_argument("bounds: empty SNR list");
  const Constellation c = load_constellation(constellation_path);
  if (n_rx == 0) n_rx = c.m_antennas();
  const double crossover = snr_crossover_db(c.t_slots(), c.m_antennas());
  std::vector<BoundsRow> rows;
  for (double snr : snrs) {
    const NoiseModel noise = NoiseModel::from_snr_db(snr);
    BoundsRow row;
    row.snr_db = snr;
    row.lambda_star = lambda_star(noise, c.t_slots(), c.m_antennas());
    row.kappa = kappa(row.lambda_star, noise, c.t_slots(), c.m_antennas());
    row.snr_crossover_db = crossover;
    row.ami_lower_bound = ami_lower_bound(c, noise, n_rx, row.lambda_star);
    row.union_bound_conventional = union_bound_conventional(c, noise, n_rx);
    // Degenerate pairs (identical subspaces) are reported, not fatal.
    double sum = 0.0;
    for (int i = 0; i < c.size(); ++i) {
      for (int j = i + 1; j < c.size(); ++j) {
        try {
          sum += pep_pair_proposed(c[i], c[j], noise, n_rx).bound;
        } catch (const DegeneratePairError&) {
          std::cerr << "warning: pair (" << i << "," << j
                    << ") spans the same subspace; contributing +inf\n";
          sum = std::numeric_limits<double>::infinity();
        }
      }
    }
    row.union_bound = 2.0 / c.size() * sum;
    rows.push_back(row);
  }
  write_bounds_csv(rows, out_path);
  std::cout << "crossover 6.84 dB reference: " << crossover << " dB; wrote " << rows.size()
            << " rows\n";
  write_manifest("bounds", argv_echo, 0,
                 json{{"constellation", constellation_path}, {"n_rx", n_rx}}, {out_path},
                 watch.seconds());
  return 0;
}

int cmd_bench(int t, const std::vector<int>& m_list, int card, long frames) {
  if (m_list.empty()) throw std::invalid_argument("bench: empty M list");
  std::cout << "GLRT detection benchmark: T=" << t << " card=" << card
            << " frames=" << frames << "\n";
  long sparse_macs_first = -1;
  for (int m : m_list) {
    DesignConfig cfg;
    cfg.seed = 7;
    cfg.restarts = 2;
    cfg.max_iterations = 300;
    auto [c, report] = design_sparse(t, m, t, card, cfg);
    (void)report;
    const SparseConstellationStore store = to_sparse_store(c);
    const int n_rx = 2;

    // Correctness gate before timing.
    Rng rng(11);
    for (int k = 0; k < 2000; ++k) {
      CMat y(t, n_rx);
      for (int n = 0; n < n_rx; ++n) {
        for (int r = 0; r < t; ++r) y(r, n) = rng.cnormal();
      }
      if (glrt_detect_dense(y, c) != glrt_detect_sparse(y, store)) {
        throw std::runtime_error("bench: dense/sparse detector mismatch");
      }
    }

    DetectorOpCounts dense_counts, sparse_counts;
    {
      CMat y = CMat::Zero(t, n_rx);
      y(0, 0) = 1.0;
      glrt_detect_dense_counted(y, c, dense_counts);
      glrt_detect_sparse_counted(y, store, sparse_counts);
    }

    std::vector<CMat> inputs;
    inputs.reserve(static_cast<size_t>(frames));
    for (long f = 0; f < frames; ++f) {
      CMat y(t, n_rx);
      for (int n = 0; n < n_rx; ++n) {
        for (int r = 0; r < t; ++r) y(r, n) = rng.cnormal();
      }
      inputs.push_back(std::move(y));
    }
    int sink = 0;
    Stopwatch dense_watch;
    for (const CMat& y : inputs) sink += glrt_detect_dense(y, c);
    const double dense_s = dense_watch.seconds();
    Stopwatch sparse_watch;
    for (const CMat& y : inputs) sink += glrt_detect_sparse(y, store);
    const double sparse_s = sparse_watch.seconds();
    if (sink == -1) std::cout << "";  // keep the detect loops live


    std::cout << "M=" << m << ": dense " << 1e9 * dense_s / frames << " ns/detect ("
              << dense_counts.macs << " MACs), sparse " << 1e9 * sparse_s / frames
              << " ns/detect (" << sparse_counts.macs << " MACs)\n";
    if (sparse_macs_first < 0) {
      sparse_macs_first = sparse_counts.macs;
    } else if (sparse_counts.macs != sparse_macs_first) {
      std::cout << "note: sparse MAC count changed with M\n";
    }
  }

  // Serial reference vs OpenMP workers on the Monte Carlo engine.
  {
    DesignConfig dcfg;
    dcfg.seed = 7;
    dcfg.restarts = 2;
    dcfg.max_iterations = 300;
    auto [c, report] = design_sparse(t, m_list.front(), t, card, dcfg);
    (void)report;
    SimConfig sim;
    sim.snr_db = {10.0};
    sim.n_rx = 2;
    sim.max_frames = std::max(frames, 20000L);
    sim.target_error_count = std::numeric_limits<long>::max();
    sim.seed = 3;
    Stopwatch serial_watch;
    sim.parallel = false;
    const SimResult serial = estimate_ser(c, sim);
    const double serial_s = serial_watch.seconds();
    Stopwatch parallel_watch;
    sim.parallel = true;
    const SimResult parallel = estimate_ser(c, sim);
    const double parallel_s = parallel_watch.seconds();
    const bool identical = serial.front().errors == parallel.front().errors &&
                           serial.front().frames == parallel.front().frames;
    std::cout << "monte-carlo " << sim.max_frames << " frames: serial " << serial_s
              << " s, openmp " << parallel_s << " s, speedup " << serial_s / parallel_s
              << "x, results " << (identical ? "identical" : "DIFFER") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse Grassmannian constellation design, analysis and simulation"};
  app.require_subcommand(1);
  std::vector<std::string> argv_echo(argv, argv + argc);

  // patterns
  auto* patterns = app.add_subcommand("patterns", "enumerate sparsity patterns");
  int p_t = 4, p_m = 2, p_s = 4;
  std::string p_json;
  patterns->add_option("--t", p_t, "time slots T")->required();
  patterns->add_option("--m", p_m, "transmit antennas M")->required();
  patterns->add_option("--s", p_s, "sparsity s")->required();
  patterns->add_option("--json", p_json, "write the pattern table as JSON");

  // design
  auto* design = app.add_subcommand("design", "design a constellation");
  std::string d_method, d_out, d_config;
  int d_t = 4, d_m = 2, d_s = -1, d_card = 4;
  std::uint64_t d_seed = 1;
  bool d_seed_given = false;
  design->add_option("--method", d_method, "sparse|mcd|mcpd|expmap|rank-deficient")
      ->required()
      ->check(CLI::IsMember({"sparse", "mcd", "mcpd", "expmap", "rank-deficient"}));
  design->add_option("--t", d_t)->required();
  design->add_option("--m", d_m)->required();
  design->add_option("--s", d_s, "sparsity (default T)");
  design->add_option("--card", d_card)->required();
  design->add_option("--seed", d_seed)->each([&](const std::string&) { d_seed_given = true; });
  design->add_option("--config", d_config, "JSON config file");
  design->add_option("--out", d_out, "constellation output path")->required();

  // ser / ami
  std::string s_path, s_out;
  std::vector<double> s_snrs;
  long s_frames = 1'000'000;
  long s_errors = 200;
  std::uint64_t s_seed = 1;
  bool s_seed_given = false;
  int s_workers = 4;
  int s_nrx = 0;
  bool s_serial = false;
  auto add_sim_flags = [&](CLI::App* cmd, bool is_ser) {
    cmd->add_option("--constellation", s_path, "constellation file")->required();
    cmd->add_option("--snr", s_snrs, "SNR list in dB")->required()->delimiter(',');
    cmd->add_option("--frames", s_frames,
                    is_ser ? "max frames per SNR" : "MC samples per SNR");
    if (is_ser) cmd->add_option("--errors", s_errors, "early-stop error count");
    cmd->add_option("--seed", s_seed)->each([&](const std::string&) { s_seed_given = true; });
    cmd->add_option("--workers", s_workers, "independent random streams");
    cmd->add_option("--n", s_nrx, "receive antennas (default M)");
    cmd->add_flag("--serial", s_serial, "run workers serially (reference mode)");
    cmd->add_option("--out", s_out, "output CSV")->required();
  };
  auto* ser = app.add_subcommand("ser", "Monte Carlo symbol error rate sweep");
  add_sim_flags(ser, true);
  auto* ami = app.add_subcommand("ami", "Monte Carlo average mutual information sweep");
  add_sim_flags(ami, false);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "closed-form bound sweep");
  std::string b_path, b_out;
  std::vector<double> b_snrs;
  int b_nrx = 0;
  bounds->add_option("--constellation", b_path)->required();
  bounds->add_option("--snr", b_snrs)->required()->delimiter(',');
  bounds->add_option("--n", b_nrx, "receive antennas (default M)");
  bounds->add_option("--out", b_out)->required();

  // bench
  auto* bench = app.add_subcommand("bench", "dense vs sparse detector benchmark");
  int be_t = 6, be_card = 16;
  std::vector<int> be_m{2, 3};
  long be_frames = 20000;
  bench->add_option("--t", be_t)->required();
  bench->add_option("--m", be_m, "M values")->required()->delimiter(',');
  bench->add_option("--card", be_card);
  bench->add_option("--frames", be_frames);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (patterns->parsed()) {
      return cmd_patterns(p_t, p_m, p_s, p_json, argv_echo);
    }
    if (design->parsed()) {
      DesignConfig cfg;
      if (!d_config.empty()) {
        std::ifstream in(d_config);
        if (!in) throw LoadError("cannot open config " + d_config);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = design_config_from_json_text(ss.str());
      }
      if (d_seed_given || std::getenv("GRASSCODE_SEED") != nullptr) {
        cfg.seed = seed_or_env(d_seed, d_seed_given);
      }
      if (d_s < 0) d_s = d_t;
      return cmd_design(d_method, d_t, d_m, d_s, d_card, cfg, d_out, argv_echo);
    }
    if (ser->parsed() || ami->parsed()) {
      SimConfig cfg;
      cfg.snr_db = s_snrs;
      cfg.n_rx = s_nrx;
      cfg.max_frames = s_frames;
      cfg.mc_samples = s_frames;
      cfg.target_error_count = s_errors;
      cfg.seed = seed_or_env(s_seed, s_seed_given);
      cfg.workers = s_workers;
      cfg.parallel = !s_serial;
      return cmd_sim(ser->parsed() ? "ser" : "ami", s_path, cfg, s_out, argv_echo);
    }
    if (bounds->parsed()) {
      return cmd_bounds(b_path, b_snrs, b_nrx, b_out, argv_echo);
    }
    if (bench->parsed()) {
      return cmd_bench(be_t, be_m, be_card, be_frames);
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const UnsupportedConfigError& e) {
    std::cerr << "unsupported configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
