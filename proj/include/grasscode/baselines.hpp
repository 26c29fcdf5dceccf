#pragma once

#include <vector>

#include "grasscode/grassmann.hpp"
#include "grasscode/rng.hpp"

namespace grasscode {

/// Unit-average-energy QAM symbol list. Symbols are indexed by their bit
/// label; adjacent labels are Gray-coded per I/Q dimension.
struct QamSymbolGrid {
  int order = 0;
  std::vector<Cplx> symbols;

  static QamSymbolGrid qam4();
  const Cplx& symbol_for_bits(unsigned bits) const { return symbols[bits]; }
};

/// Homothetic scaling applied to Theta before the exponential; controls the
/// spread of the Exp-Map constellation on the manifold.
inline constexpr double kDefaultExpMapScale = M_SQRT1_2;

/// X = exp([[0, Theta], [-Theta^H, 0]]) * I_{T,M}. The block matrix is
/// skew-Hermitian, so the exponential is unitary and the result is always a
/// valid Grassmann point.
GrassmannPoint exp_map(const CMat& theta);

/// Exp-Map baseline constellation. Supported configurations: (T, M) = (4, 2)
/// with the coherent 4-QAM space-time block, and M = 1 where the T-1 entries
/// of Theta carry one 4-QAM symbol each. Index bits are mapped to symbols in
/// Gray order, least-significant bit pair first. Throws
/// UnsupportedConfigError otherwise.
Constellation expmap_constellation(int t_slots, int m_antennas, int cardinality,
                                   double theta_scale = kDefaultExpMapScale);

/// Generic Exp-Map variant for other MIMO shapes: the M x (T - M) entries of
/// Theta each carry one 4-QAM symbol, index bits mapped entrywise in Gray
/// order (column-major). Used by the extended experiment suite.
Constellation expmap_constellation_entrywise(int t_slots, int m_antennas, int cardinality,
                                             double theta_scale = kDefaultExpMapScale);

/// Uniform (Haar) random point: QR orthonormalization of an i.i.d. complex
/// Gaussian matrix with the R-factor diagonal fixed real positive.
GrassmannPoint haar_random_point(int t_slots, int m_antennas, Rng& rng);

}  // namespace grasscode
