#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grasscode/grassmann.hpp"

namespace grasscode {

/// ELLPACK-style store for disjoint-support constellations: one
/// (column, value) slot per row per codeword, valid because disjoint column
/// supports leave at most one nonzero in any row. Scalar slot count is
/// |X| * T regardless of M. Row slots with no nonzero carry the sentinel
/// column index M, which addresses a dummy accumulator in the detector so
/// the inner loop stays branch-free.
class SparseConstellationStore {
 public:
  static constexpr double kSparsityThreshold = 1e-12;

  SparseConstellationStore(int t_slots, int m_antennas, int sparsity, int cardinality,
                           std::vector<std::int32_t> cols, std::vector<Cplx> vals);

  int t_slots() const { return t_; }
  int m_antennas() const { return m_; }
  int sparsity() const { return s_; }
  int size() const { return card_; }
  long slot_count() const { return static_cast<long>(card_) * t_; }
  int empty_sentinel() const { return m_; }

  /// Column slot of row t in codeword i (m_antennas() when empty).
  std::int32_t col(int i, int t) const { return cols_[static_cast<size_t>(i) * t_ + t]; }
  const Cplx& val(int i, int t) const { return vals_[static_cast<size_t>(i) * t_ + t]; }
  const std::int32_t* col_row(int i) const { return &cols_[static_cast<size_t>(i) * t_]; }
  const Cplx* val_row(int i) const { return &vals_[static_cast<size_t>(i) * t_]; }

 private:
  int t_, m_, s_, card_;
  std::vector<std::int32_t> cols_;
  std::vector<Cplx> vals_;
};

/// Builds the row-indexed store. Throws NotSparseError if any row of any
/// codeword holds two or more entries above the sparsity threshold, or if
/// codewords disagree on the populated-row count.
SparseConstellationStore to_sparse_store(const Constellation& c);

/// Expands the store back to dense points; exact copy of the stored values.
Constellation densify(const SparseConstellationStore& store, std::string provenance = {});

enum class ConstellationFormat { kDense, kEllpack };

/// JSON schema: {T, M, cardinality, format: "dense"|"ellpack", s (ellpack),
/// entries as {re, im} pairs (dense: card x T x M; ellpack: card x T rows of
/// {col, re, im} with 1-based col and 0 for empty), provenance}.
void save_constellation(const Constellation& c, const std::string& path,
                        ConstellationFormat format);

/// Loads and validates every point against the Stiefel condition; throws
/// LoadError on schema violations or orthonormality failure.
Constellation load_constellation(const std::string& path);

struct ResultRow {
  double snr_db = 0.0;
  std::string metric;
  double value = 0.0;
  double half_width = 0.0;
  long frames = 0;
};

/// Header plus one row per (snr, metric); numbers in full-precision
/// scientific notation so a re-read reproduces the values exactly.
void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);

struct BoundsRow {
  double snr_db = 0.0;
  double union_bound = 0.0;
  double union_bound_conventional = 0.0;
  double ami_lower_bound = 0.0;
  double lambda_star = 0.0;
  double kappa = 0.0;
  double snr_crossover_db = 0.0;
};

void write_bounds_csv(const std::vector<BoundsRow>& rows, const std::string& path);

}  // namespace grasscode
