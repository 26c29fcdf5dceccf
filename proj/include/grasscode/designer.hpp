#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grasscode/grassmann.hpp"
#include "grasscode/schubert.hpp"

namespace grasscode {

struct DesignConfig {
  double epsilon = 1e-2;      // smoothing constant of the log-sum-exp surrogate
  int max_iterations = 2000;  // accepted descent steps per restart
  int restarts = 10;
  double step_size = 1.0;     // initial Armijo step
  double tolerance = 1e-9;    // stop when the objective decrease falls below
  std::uint64_t seed = 1;
  bool parallel = true;       // restarts on OpenMP threads
};

DesignConfig design_config_from_json_text(const std::string& text);

struct DesignReport {
  double final_objective = 0.0;
  double achieved_mcd = 0.0;
  double achieved_mcpd = 0.0;
  int iterations_used = 0;
  std::vector<double> per_restart_best;  // exact metric per restart
  std::vector<double> objective_trace;   // accepted objective values, best restart
  bool converged = false;
  bool rank_ok = true;  // all pairs full rank at the post-design check
};

std::string design_report_to_json_text(const DesignReport& report);

/// Riemannian gradient descent on G(T, M)^|X| minimizing
/// log sum exp(-||X_i X_i^H - X_j X_j^H||_F / eps): the smoothed
/// maximize-minimum-chordal-distance design. Best restart wins by exact MCD.
std::pair<Constellation, DesignReport> design_mcd_manopt(int t_slots, int m_antennas,
                                                         int cardinality,
                                                         const DesignConfig& cfg);

/// Same engine with exponent -det(I_M - X_i^H X_j X_j^H X_i) / eps: the
/// chordal-product (diversity) objective. Best restart wins by exact MCPD.
std::pair<Constellation, DesignReport> design_mcpd_manopt(int t_slots, int m_antennas,
                                                          int cardinality,
                                                          const DesignConfig& cfg);

/// Sparse parametric design: allocates Schubert-cell sparsity patterns, then
/// minimizes the same determinant surrogate over the hyperspherical
/// parameters by gradient descent (central finite differences). Codewords
/// stay exactly on their patterns; pairwise ranks are verified post hoc and
/// reported in rank_ok.
std::pair<Constellation, DesignReport> design_sparse(int t_slots, int m_antennas,
                                                     int sparsity, int cardinality,
                                                     const DesignConfig& cfg);

/// Benchmark constellation that deliberately reuses one non-rank-safe
/// pattern for every codeword, producing rank-deficient pairs (zero chordal
/// product distance) while the parameters are still spread by the smoothed
/// chordal objective.
Constellation design_rank_deficient_reference(int t_slots, int m_antennas, int cardinality,
                                              const DesignConfig& cfg);

}  // namespace grasscode
