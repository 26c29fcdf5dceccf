#include "grasscode/schubert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "grasscode/combinatorics.hpp"
#include "grasscode/errors.hpp"

namespace grasscode {

namespace {

void require_dims(int t, int m) {
  if (m < 1 || t <= m) {
    throw std::invalid_argument("require T > M >= 1");
  }
}

void require_sparsity(int t, int m, int s) {
  require_dims(t, m);
  if (s < m || s > t) {
    throw std::invalid_argument("sparsity must satisfy M <= s <= T");
  }
}

/// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == n - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

/// Partitions of `rows` into exactly m nonempty blocks via restricted growth
/// strings; blocks come out ordered by their minimum element, which is the
/// echelon order.
std::vector<std::vector<std::vector<int>>> partitions_into_blocks(
    const std::vector<int>& rows, int m) {
  const int s = static_cast<int>(rows.size());
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<int> rgs(s, 0);
  auto emit = [&] {
    std::vector<std::vector<int>> blocks(m);
    for (int i = 0; i < s; ++i) blocks[static_cast<size_t>(rgs[i])].push_back(rows[i]);
    out.push_back(std::move(blocks));
  };
  // Depth-first over growth strings with exactly m labels.
  std::vector<int> maxima(s, 0);
  int i = 1;
  if (s == 1) {
    if (m == 1) emit();
    return out;
  }
  rgs[0] = 0;
  maxima[0] = 0;
  std::vector<int> state(s, -1);
  while (i > 0) {
    if (i == s) {
      if (maxima[s - 1] == m - 1) emit();
      --i;
      continue;
    }
    const int prev_max = maxima[i - 1];
    int next = state[i] + 1;
    const int cap = std::min(prev_max + 1, m - 1);
    if (next > cap) {
      state[i] = -1;
      --i;
      continue;
    }
    state[i] = next;
    rgs[i] = next;
    maxima[i] = std::max(prev_max, next);
    ++i;
  }
  return out;
}

}  // namespace

std::vector<SchubertCell> enumerate_cells(int t_slots, int m_cols) {
  require_dims(t_slots, m_cols);
  std::vector<SchubertCell> cells;
  for (auto& pivots : combinations(t_slots, m_cols)) {
    cells.push_back(SchubertCell{std::move(pivots)});
  }
  return cells;
}

int SparsityPattern::sparsity() const {
  int s = 0;
  for (const auto& supp : supports) s += static_cast<int>(supp.size());
  return s;
}

std::vector<int> SparsityPattern::pivots() const {
  std::vector<int> p;
  p.reserve(supports.size());
  for (const auto& supp : supports) p.push_back(supp.front());
  return p;
}

namespace {

using U128 = unsigned __int128;

U128 checked_mul_u128(U128 a, U128 b) {
  if (a != 0 && b > static_cast<U128>(-1) / a) {
    throw std::overflow_error("count_patterns: intermediate overflow");
  }
  return a * b;
}

}  // namespace

std::uint64_t count_patterns(int t_slots, int m_cols, int sparsity) {
  require_sparsity(t_slots, m_cols, sparsity);

  // sum_k (-1)^k C(M, k) (M - k)^s equals M! times the Stirling number
  // S(s, M), so the division below is exact. The alternating sum is carried
  // as (positive part, negative part) in checked unsigned 128-bit words.
  U128 pos = 0;
  U128 neg = 0;
  for (int k = 0; k <= m_cols; ++k) {
    U128 pw = 1;
    for (int e = 0; e < sparsity; ++e) {
      pw = checked_mul_u128(pw, static_cast<U128>(m_cols - k));
    }
    const U128 term = checked_mul_u128(static_cast<U128>(binomial_exact(m_cols, k)), pw);
    U128& side = (k % 2 == 0) ? pos : neg;
    if (term > static_cast<U128>(-1) - side) {
      throw std::overflow_error("count_patterns: intermediate overflow");
    }
    side += term;
  }
  const U128 sum = pos - neg;  // nonnegative: it is M! * S(s, M)
  U128 fact = 1;
  for (int k = 2; k <= m_cols; ++k) fact *= static_cast<U128>(k);
  const U128 stirling = sum / fact;
  const U128 total = checked_mul_u128(
      static_cast<U128>(binomial_exact(t_slots, sparsity)), stirling);
  if (total > static_cast<U128>(UINT64_MAX)) {
    throw std::overflow_error("count_patterns: value exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(total);
}

std::vector<SparsityPattern> enumerate_patterns(int t_slots, int m_cols, int sparsity) {
  require_sparsity(t_slots, m_cols, sparsity);
  std::vector<SparsityPattern> out;
  for (const auto& rows : combinations(t_slots, sparsity)) {
    auto parts = partitions_into_blocks(rows, m_cols);
    std::sort(parts.begin(), parts.end());
    for (auto& blocks : parts) {
      out.push_back(SparsityPattern{t_slots, std::move(blocks)});
    }
  }
  return out;
}

bool is_rank_safe_for_reuse(const SparsityPattern& p) {
  return std::all_of(p.supports.begin(), p.supports.end(),
                     [](const std::vector<int>& supp) { return supp.size() >= 2; });
}

ParamSet ParamSet::random(const SparsityPattern& p, Rng& rng) {
  ParamSet ps;
  for (const auto& supp : p.supports) {
    const int k = static_cast<int>(supp.size()) - 1;
    std::vector<double> a(static_cast<size_t>(k)), f(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
      a[static_cast<size_t>(i)] = (2.0 * rng.uniform() - 1.0) * M_PI;
      f[static_cast<size_t>(i)] = (2.0 * rng.uniform() - 1.0) * M_PI;
    }
    ps.alphas.push_back(std::move(a));
    ps.phis.push_back(std::move(f));
  }
  return ps;
}

GrassmannPoint materialize(const SparsityPattern& p, const ParamSet& params) {
  const int m = p.m_cols();
  if (static_cast<int>(params.alphas.size()) != m ||
      static_cast<int>(params.phis.size()) != m) {
    throw std::invalid_argument("materialize: column count mismatch");
  }
  CMat x = CMat::Zero(p.t_slots, m);
  for (int c = 0; c < m; ++c) {
    const auto& supp = p.supports[static_cast<size_t>(c)];
    const auto& alpha = params.alphas[static_cast<size_t>(c)];
    const auto& phi = params.phis[static_cast<size_t>(c)];
    const int k = static_cast<int>(supp.size());
    if (static_cast<int>(alpha.size()) != k - 1 || static_cast<int>(phi.size()) != k - 1) {
      throw std::invalid_argument("materialize: parameter count mismatch");
    }
    double cos_prefix = 1.0;
    for (int i = 0; i < k; ++i) {
      const double mag = (i < k - 1) ? cos_prefix * std::sin(alpha[static_cast<size_t>(i)])
                                     : cos_prefix;
      const Cplx phase = (i == 0) ? Cplx(1.0, 0.0)
                                  : std::polar(1.0, phi[static_cast<size_t>(i - 1)]);
      x(supp[static_cast<size_t>(i)], c) = mag * phase;
      if (i < k - 1) cos_prefix *= std::cos(alpha[static_cast<size_t>(i)]);
    }
  }
  return GrassmannPoint(std::move(x));
}

std::vector<int> allocate_pattern_indices(int t_slots, int m_cols, int sparsity,
                                          int cardinality) {
  if (cardinality < 1) {
    throw std::invalid_argument("allocate_pattern_indices: cardinality must be >= 1");
  }
  const auto patterns = enumerate_patterns(t_slots, m_cols, sparsity);
  std::vector<int> safe;
  std::vector<int> unsafe;
  for (int i = 0; i < static_cast<int>(patterns.size()); ++i) {
    (is_rank_safe_for_reuse(patterns[static_cast<size_t>(i)]) ? safe : unsafe).push_back(i);
  }
  const int total = static_cast<int>(patterns.size());
  if (cardinality > total && safe.empty()) {
    throw InfeasibleError("no rank-safe pattern available for reuse");
  }
  std::vector<int> out;
  out.reserve(static_cast<size_t>(cardinality));
  for (int i = 0; i < cardinality && i < total; ++i) {
    out.push_back(i < static_cast<int>(safe.size())
                      ? safe[static_cast<size_t>(i)]
                      : unsafe[static_cast<size_t>(i - safe.size())]);
  }
  for (int i = total; i < cardinality; ++i) {
    out.push_back(safe[static_cast<size_t>((i - total) % safe.size())]);
  }
  return out;
}

std::vector<SparsityPattern> allocate_patterns(int t_slots, int m_cols, int sparsity,
                                               int cardinality) {
  const auto patterns = enumerate_patterns(t_slots, m_cols, sparsity);
  std::vector<SparsityPattern> out;
  out.reserve(static_cast<size_t>(cardinality));
  for (int idx : allocate_pattern_indices(t_slots, m_cols, sparsity, cardinality)) {
    out.push_back(patterns[static_cast<size_t>(idx)]);
  }
  return out;
}

}  // namespace grasscode
