#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace grasscode {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

/// Representative of a point on the complex Grassmann manifold G(T, M):
/// a T x M matrix whose columns are expected to be orthonormal. The
/// orthonormality itself is checked by validate(), not by the constructor,
/// so that deviations can be measured and reported.
class GrassmannPoint {
 public:
  /// Max-abs deviation of X^H X from I_M accepted as "on the manifold".
  static constexpr double kStiefelTol = 1e-10;

  explicit GrassmannPoint(CMat entries);

  int t_slots() const { return static_cast<int>(entries_.rows()); }
  int m_antennas() const { return static_cast<int>(entries_.cols()); }
  const CMat& matrix() const { return entries_; }

 private:
  CMat entries_;
};

struct ValidationReport {
  bool ok = false;
  double max_deviation = 0.0;  // max-abs entry of X^H X - I_M
};

/// Measures how far X^H X is from the identity. Throws std::invalid_argument
/// if any entry is not finite.
ValidationReport validate(const GrassmannPoint& x);

/// Principal angles between two subspaces, ascending in [0, pi/2], together
/// with the singular values of the inner-product matrix (descending, clamped
/// to [0, 1]). angles[m] == acos(singular_values[m]).
struct PrincipalAngles {
  Eigen::VectorXd angles;
  Eigen::VectorXd singular_values;
};

PrincipalAngles principal_angles(const GrassmannPoint& a, const GrassmannPoint& b);

/// sqrt(M - ||a^H b||_F^2); equals sqrt(sum sin^2 theta_m).
double chordal_distance(const GrassmannPoint& a, const GrassmannPoint& b);

/// det(I_M - a^H b b^H a) in [0, 1]; equals prod sin^2 theta_m. Zero whenever
/// the subspaces share a direction, which is what makes it the
/// diversity-governing distance.
double chordal_product_distance(const GrassmannPoint& a, const GrassmannPoint& b);

/// prod_m (1 + kappa sin^2 theta_m) >= 1. For M = 2 this expands to
/// 1 + kappa d_c^2 + kappa^2 d_cp. Requires kappa >= 0.
double joint_distance(const GrassmannPoint& a, const GrassmannPoint& b, double kappa);

/// Ordered collection of points sharing (T, M).
class Constellation {
 public:
  explicit Constellation(std::vector<GrassmannPoint> points, std::string provenance = {});

  int size() const { return static_cast<int>(points_.size()); }
  int t_slots() const { return points_.front().t_slots(); }
  int m_antennas() const { return points_.front().m_antennas(); }
  const GrassmannPoint& operator[](int i) const { return points_[static_cast<size_t>(i)]; }
  const std::vector<GrassmannPoint>& points() const { return points_; }
  const std::string& provenance() const { return provenance_; }

 private:
  std::vector<GrassmannPoint> points_;
  std::string provenance_;
};

enum class PairMetric { kChordal, kChordalProduct };

struct MinPair {
  double value = 0.0;
  int i = -1;
  int j = -1;
};

/// Minimum pairwise distance over all i < j; ties resolved to the
/// lexicographically smallest (i, j). Requires at least two points.
MinPair min_pairwise(const Constellation& c, PairMetric metric);

}  // namespace grasscode
