#include "grasscode/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grasscode {

GrassmannPoint::GrassmannPoint(CMat entries) : entries_(std::move(entries)) {
  const auto t = entries_.rows();
  const auto m = entries_.cols();
  if (m < 1 || t <= m) {
    throw std::invalid_argument("GrassmannPoint requires T > M >= 1");
  }
}

ValidationReport validate(const GrassmannPoint& x) {
  if (!x.matrix().allFinite()) {
    throw std::invalid_argument("validate: non-finite entries");
  }
  const int m = x.m_antennas();
  const CMat gram = x.matrix().adjoint() * x.matrix();
  const double dev = (gram - CMat::Identity(m, m)).cwiseAbs().maxCoeff();
  return {dev <= GrassmannPoint::kStiefelTol, dev};
}

namespace {

void require_same_shape(const GrassmannPoint& a, const GrassmannPoint& b) {
  if (a.t_slots() != b.t_slots() || a.m_antennas() != b.m_antennas()) {
    throw std::invalid_argument("points must share (T, M)");
  }
}

}  // namespace

PrincipalAngles principal_angles(const GrassmannPoint& a, const GrassmannPoint& b) {
  require_same_shape(a, b);
  const CMat inner = a.matrix().adjoint() * b.matrix();
  Eigen::JacobiSVD<CMat> svd(inner);
  PrincipalAngles out;
  out.singular_values = svd.singularValues();  // descending
  const int m = a.m_antennas();
  out.angles.resize(m);
  for (int i = 0; i < m; ++i) {
    // Round-off can push sigma slightly past 1; clamp before acos. Angles
    // near zero are ill-conditioned in sigma, but distances only consume
    // sin^2 theta = 1 - sigma^2, which stays accurate.
    double s = std::clamp(out.singular_values[i], 0.0, 1.0);
    out.singular_values[i] = s;
    out.angles[i] = std::acos(s);
  }
  return out;
}

double chordal_distance(const GrassmannPoint& a, const GrassmannPoint& b) {
  require_same_shape(a, b);
  const double frob_sq = (a.matrix().adjoint() * b.matrix()).squaredNorm();
  return std::sqrt(std::max(0.0, static_cast<double>(a.m_antennas()) - frob_sq));
}

double chordal_product_distance(const GrassmannPoint& a, const GrassmannPoint& b) {
  require_same_shape(a, b);
  const CMat inner = a.matrix().adjoint() * b.matrix();
  const int m = a.m_antennas();
  const CMat w = CMat::Identity(m, m) - inner * inner.adjoint();
  const double det = w.determinant().real();
  return std::clamp(det, 0.0, 1.0);
}

double joint_distance(const GrassmannPoint& a, const GrassmannPoint& b, double kappa) {
  if (!(kappa >= 0.0)) {
    throw std::invalid_argument("joint_distance: kappa must be >= 0");
  }
  const PrincipalAngles pa = principal_angles(a, b);
  double prod = 1.0;
  for (int m = 0; m < pa.singular_values.size(); ++m) {
    const double s = pa.singular_values[m];
    prod *= 1.0 + kappa * (1.0 - s * s);
  }
  return prod;
}

Constellation::Constellation(std::vector<GrassmannPoint> points, std::string provenance)
    : points_(std::move(points)), provenance_(std::move(provenance)) {
  if (points_.empty()) {
    throw std::invalid_argument("Constellation: no points");
  }
  const int t = points_.front().t_slots();
  const int m = points_.front().m_antennas();
  for (const auto& p : points_) {
    if (p.t_slots() != t || p.m_antennas() != m) {
      throw std::invalid_argument("Constellation: mixed (T, M)");
    }
  }
}

MinPair min_pairwise(const Constellation& c, PairMetric metric) {
  if (c.size() < 2) {
    throw std::invalid_argument("min_pairwise: need at least 2 points");
  }
  MinPair best;
  for (int i = 0; i < c.size(); ++i) {
    for (int j = i + 1; j < c.size(); ++j) {
      const double d = metric == PairMetric::kChordal
                           ? chordal_distance(c[i], c[j])
                           : chordal_product_distance(c[i], c[j]);
      if (best.i < 0 || d < best.value) {
        best = {d, i, j};
      }
    }
  }
  return best;
}

}  // namespace grasscode
