#include "grasscode/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "grasscode/errors.hpp"

namespace grasscode {

QamSymbolGrid QamSymbolGrid::qam4() {
  QamSymbolGrid g;
  g.order = 4;
  // Gray labels: bit 0 flips I, bit 1 flips Q.
  g.symbols = {
      Cplx(M_SQRT1_2, M_SQRT1_2),    // 00
      Cplx(-M_SQRT1_2, M_SQRT1_2),   // 01
      Cplx(M_SQRT1_2, -M_SQRT1_2),   // 10
      Cplx(-M_SQRT1_2, -M_SQRT1_2),  // 11
  };
  return g;
}

GrassmannPoint exp_map(const CMat& theta) {
  if (!theta.allFinite()) {
    throw std::invalid_argument("exp_map: non-finite entries");
  }
  const int m = static_cast<int>(theta.rows());
  const int t = m + static_cast<int>(theta.cols());
  CMat block = CMat::Zero(t, t);
  block.topRightCorner(m, t - m) = theta;
  block.bottomLeftCorner(t - m, m) = -theta.adjoint();
  const CMat expm = block.exp();
  return GrassmannPoint(expm.leftCols(m));
}

namespace {

/// Symbols drawn from the index bits: symbol q uses bits (2q, 2q+1).
std::vector<Cplx> symbols_from_index(const QamSymbolGrid& grid, int index, int n_symbols) {
  std::vector<Cplx> s(static_cast<size_t>(n_symbols));
  for (int q = 0; q < n_symbols; ++q) {
    const unsigned bits = (static_cast<unsigned>(index) >> (2 * q)) & 0x3u;
    s[static_cast<size_t>(q)] = grid.symbol_for_bits(bits);
  }
  return s;
}

void require_cardinality(int cardinality, long max_cardinality) {
  if (cardinality < 1 || cardinality > max_cardinality) {
    throw std::invalid_argument("expmap_constellation: cardinality out of range (max " +
                                std::to_string(max_cardinality) + ")");
  }
}

}  // namespace

Constellation expmap_constellation(int t_slots, int m_antennas, int cardinality,
                                   double theta_scale) {
  const QamSymbolGrid grid = QamSymbolGrid::qam4();
  std::vector<GrassmannPoint> points;
  points.reserve(static_cast<size_t>(cardinality));

  if (t_slots == 4 && m_antennas == 2) {
    require_cardinality(cardinality, 256);  // 4 symbols x 4-QAM
    const Cplx theta_c = std::polar(1.0, M_PI / 4.0);
    const Cplx phi_c = std::polar(1.0, M_PI / 8.0);  // phi^2 = theta
    for (int i = 0; i < cardinality; ++i) {
      const auto s = symbols_from_index(grid, i, 4);
      CMat theta(2, 2);
      theta << s[0] + theta_c * s[1], phi_c * (s[2] + theta_c * s[3]),
          phi_c * (s[2] - theta_c * s[3]), s[0] - theta_c * s[1];
      points.push_back(exp_map(theta_scale * theta));
    }
  } else if (m_antennas == 1 && t_slots >= 2) {
    const int n_sym = t_slots - 1;
    const long max_card = n_sym >= 16 ? (1L << 62) : (1L << (2 * n_sym));
    require_cardinality(cardinality, max_card);
    for (int i = 0; i < cardinality; ++i) {
      const auto s = symbols_from_index(grid, i, n_sym);
      CMat theta(1, n_sym);
      for (int q = 0; q < n_sym; ++q) theta(0, q) = s[static_cast<size_t>(q)];
      points.push_back(exp_map(theta_scale * theta));
    }
  } else {
    throw UnsupportedConfigError("expmap_constellation: no construction for (T, M) = (" +
                                 std::to_string(t_slots) + ", " +
                                 std::to_string(m_antennas) + ")");
  }
  return Constellation(std::move(points), "expmap");
}

Constellation expmap_constellation_entrywise(int t_slots, int m_antennas, int cardinality,
                                             double theta_scale) {
  if (m_antennas < 1 || t_slots <= m_antennas) {
    throw std::invalid_argument("expmap_constellation_entrywise: need T > M >= 1");
  }
  const QamSymbolGrid grid = QamSymbolGrid::qam4();
  const int n_sym = m_antennas * (t_slots - m_antennas);
  const long max_card = n_sym >= 16 ? (1L << 62) : (1L << (2 * n_sym));
  require_cardinality(cardinality, max_card);
  std::vector<GrassmannPoint> points;
  points.reserve(static_cast<size_t>(cardinality));
  for (int i = 0; i < cardinality; ++i) {
    const auto s = symbols_from_index(grid, i, n_sym);
    CMat theta(m_antennas, t_slots - m_antennas);
    int q = 0;
    for (int c = 0; c < theta.cols(); ++c) {
      for (int r = 0; r < theta.rows(); ++r) theta(r, c) = s[static_cast<size_t>(q++)];
    }
    points.push_back(exp_map(theta_scale * theta));
  }
  return Constellation(std::move(points), "expmap-entrywise");
}

GrassmannPoint haar_random_point(int t_slots, int m_antennas, Rng& rng) {
  CMat a(t_slots, m_antennas);
  for (int c = 0; c < m_antennas; ++c) {
    for (int r = 0; r < t_slots; ++r) a(r, c) = rng.cnormal();
  }
  Eigen::HouseholderQR<CMat> qr(a);
  CMat q = qr.householderQ() * CMat::Identity(t_slots, m_antennas);
  const CMat r = qr.matrixQR().topRows(m_antennas).triangularView<Eigen::Upper>();
  for (int c = 0; c < m_antennas; ++c) {
    const Cplx d = r(c, c);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(c) *= d / mag;
  }
  return GrassmannPoint(std::move(q));
}

}  // namespace grasscode
