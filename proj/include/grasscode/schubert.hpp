#pragma once

#include <cstdint>
#include <vector>

#include "grasscode/grassmann.hpp"
#include "grasscode/rng.hpp"

namespace grasscode {

/// Schubert cell of G(T, M), indexed by its pivot rows (0-based in memory;
/// file formats are 1-based).
struct SchubertCell {
  std::vector<int> pivots;  // strictly increasing, size M
};

/// All C(T, M) cells in lexicographic pivot order.
std::vector<SchubertCell> enumerate_cells(int t_slots, int m_cols);

/// Column supports inside a Schubert cell: M pairwise-disjoint nonempty row
/// sets in echelon order (the minimum of each support strictly increases
/// with the column index). The total support size is the sparsity s.
struct SparsityPattern {
  int t_slots = 0;
  std::vector<std::vector<int>> supports;  // per column, ascending 0-based rows

  int m_cols() const { return static_cast<int>(supports.size()); }
  int sparsity() const;
  std::vector<int> pivots() const;  // min of each support

  bool operator==(const SparsityPattern& other) const {
    return t_slots == other.t_slots && supports == other.supports;
  }
};

/// n(T, M, s) = C(T, s) / M! * sum_k (-1)^k C(M, k) (M - k)^s, evaluated in
/// exact integer arithmetic. Throws std::overflow_error beyond 64 bits.
std::uint64_t count_patterns(int t_slots, int m_cols, int sparsity);

/// Every admissible pattern: a choice of s rows times an ordered partition
/// into M nonempty disjoint supports in echelon order. Deterministic order:
/// row choices lexicographic, then partitions lexicographic as support-list
/// sequences.
std::vector<SparsityPattern> enumerate_patterns(int t_slots, int m_cols, int sparsity);

/// A pattern can host several codewords only if every column support has at
/// least two rows. A singleton support pins that column to a fixed basis
/// vector, so any two codewords of the pattern share the column subspace and
/// I_M - X_i^H X_j X_j^H X_i drops rank.
bool is_rank_safe_for_reuse(const SparsityPattern& p);

/// Per-column hyperspherical parameters: |supp| - 1 amplitude angles and
/// |supp| - 1 phases, all in [-pi, pi]. Total real parameters: 2(s - M).
struct ParamSet {
  std::vector<std::vector<double>> alphas;
  std::vector<std::vector<double>> phis;

  static ParamSet random(const SparsityPattern& p, Rng& rng);
};

/// Materializes the pattern with the given parameters. Each column is a unit
/// vector on its support: entry i carries magnitude
/// prod_{l<i} cos(alpha_l) * sin(alpha_i) (last entry: full cosine product),
/// the topmost entry is real with zero phase, and every later entry carries
/// a factor e^{j phi}. For |supp| = 2 this is exactly the
/// (sin a, e^{j phi} cos a) column form. The result always satisfies the
/// Stiefel condition by construction.
GrassmannPoint materialize(const SparsityPattern& p, const ParamSet& params);

/// Deterministic pattern assignment for a target cardinality: distinct
/// patterns first (rank-safe ones prioritized, enumeration order within each
/// group), then round-robin repeats over rank-safe patterns only. Throws
/// InfeasibleError when the cardinality exceeds the pattern count and no
/// rank-safe pattern exists.
std::vector<int> allocate_pattern_indices(int t_slots, int m_cols, int sparsity,
                                          int cardinality);
std::vector<SparsityPattern> allocate_patterns(int t_slots, int m_cols, int sparsity,
                                               int cardinality);

}  // namespace grasscode
