#include "grasscode/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "grasscode/combinatorics.hpp"
#include "grasscode/errors.hpp"

namespace grasscode {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_rx(int n_rx) {
  if (n_rx < 1) throw std::invalid_argument("n_rx must be >= 1");
}

void require_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in (0, 1]");
  }
}

/// Exact binomial with the MN <= 31 guard that keeps C(2MN-1, MN) in 64 bits.
double diversity_binomial(int m_times_n) {
  if (m_times_n > 31) {
    throw std::invalid_argument("m' * N must be <= 31 for exact binomials");
  }
  return static_cast<double>(binomial_exact(2 * m_times_n - 1, m_times_n));
}

/// Ascending eigenvalues of the Hermitian matrix I_M - a^H b b^H a.
Eigen::VectorXd gram_complement_eigs(const GrassmannPoint& a, const GrassmannPoint& b) {
  const CMat inner = a.matrix().adjoint() * b.matrix();
  const int m = a.m_antennas();
  const CMat w = CMat::Identity(m, m) - inner * inner.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> es(w, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// sin^2 of the principal angles, any order.
Eigen::VectorXd sin_sq_angles(const GrassmannPoint& a, const GrassmannPoint& b) {
  const PrincipalAngles pa = principal_angles(a, b);
  Eigen::VectorXd s2(pa.singular_values.size());
  for (int m = 0; m < s2.size(); ++m) {
    const double s = pa.singular_values[m];
    s2[m] = 1.0 - s * s;
  }
  return s2;
}

}  // namespace

NoiseModel NoiseModel::from_snr_db(double snr_db) {
  NoiseModel n;
  n.snr_db = snr_db;
  n.sigma_v_sq = std::pow(10.0, -snr_db / 10.0);
  return n;
}

NoiseModel NoiseModel::from_sigma_v_sq(double sigma_v_sq) {
  if (!(sigma_v_sq > 0.0)) {
    throw std::invalid_argument("sigma_v_sq must be positive");
  }
  NoiseModel n;
  n.sigma_v_sq = sigma_v_sq;
  n.snr_db = 10.0 * std::log10(1.0 / sigma_v_sq);
  return n;
}

double pep_pair_conventional(const GrassmannPoint& a, const GrassmannPoint& b,
                             const NoiseModel& noise, int n_rx, double rank_tol) {
  require_rx(n_rx);
  const int m = a.m_antennas();
  const CMat inner = a.matrix().adjoint() * b.matrix();
  const CMat w = CMat::Identity(m, m) - inner * inner.adjoint();
  const double det_re = w.determinant().real();
  if (det_re <= rank_tol) return kInf;
  const double coeff = diversity_binomial(m * n_rx);
  return std::pow(noise.sigma_v_sq, m * n_rx) * coeff / std::pow(det_re, n_rx);
}

PepTerm pep_pair_proposed(const GrassmannPoint& a, const GrassmannPoint& b,
                          const NoiseModel& noise, int n_rx, double rank_tol) {
  require_rx(n_rx);
  const Eigen::VectorXd eigs = gram_complement_eigs(a, b);
  const double largest = eigs.maxCoeff();
  const double threshold = rank_tol * std::max(largest, 0.0);
  PepTerm term;
  double denom = 1.0;
  for (int i = static_cast<int>(eigs.size()) - 1; i >= 0; --i) {
    const double mu = eigs[i];
    if (mu > threshold && mu > 0.0) {
      term.eigenvalues.push_back(mu);
      denom *= std::pow(std::abs(mu), n_rx);
      ++term.rank;
    }
  }
  if (term.rank == 0) {
    throw DegeneratePairError("pep_pair_proposed: points span the same subspace");
  }
  const double coeff = diversity_binomial(term.rank * n_rx);
  term.bound = std::pow(noise.sigma_v_sq, term.rank * n_rx) * coeff / denom;
  return term;
}

namespace {

template <class PairBound>
double union_sum(const Constellation& c, PairBound&& bound) {
  if (c.size() < 2) throw std::invalid_argument("union bound: need at least 2 points");
  double sum = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    for (int j = i + 1; j < c.size(); ++j) sum += bound(c[i], c[j]);
  }
  return 2.0 / static_cast<double>(c.size()) * sum;
}

}  // namespace

double union_bound(const Constellation& c, const NoiseModel& noise, int n_rx) {
  return union_sum(c, [&](const GrassmannPoint& a, const GrassmannPoint& b) {
    return pep_pair_proposed(a, b, noise, n_rx).bound;
  });
}

double union_bound_conventional(const Constellation& c, const NoiseModel& noise, int n_rx) {
  return union_sum(c, [&](const GrassmannPoint& a, const GrassmannPoint& b) {
    return pep_pair_conventional(a, b, noise, n_rx);
  });
}

double alpha(double lambda, const NoiseModel& noise, int t_slots, int m_antennas) {
  require_lambda(lambda);
  const double s2 = noise.sigma_v_sq;
  return lambda / (s2 * (1.0 + s2 * m_antennas / static_cast<double>(t_slots)));
}

double kappa(double lambda, const NoiseModel& noise, int t_slots, int m_antennas) {
  const double a = alpha(lambda, noise, t_slots, m_antennas);
  const double s2 = noise.sigma_v_sq;
  return a - a * a * s2 - a * a * s2 * s2;
}

double lambda_star(const NoiseModel& noise, int t_slots, int m_antennas) {
  const double s2 = noise.sigma_v_sq;
  return std::min(1.0, (1.0 + s2 * m_antennas / static_cast<double>(t_slots)) /
                           (2.0 * (1.0 + s2)));
}

double snr_crossover_db(int t_slots, int m_antennas) {
  // kappa(lambda_star) decreases monotonically in the noise variance;
  // bisect for the crossing of 1.
  auto kappa_at = [&](double sigma_sq) {
    const NoiseModel n = NoiseModel::from_sigma_v_sq(sigma_sq);
    return kappa(lambda_star(n, t_slots, m_antennas), n, t_slots, m_antennas);
  };
  double lo = 1e-8;  // kappa huge
  double hi = 10.0;  // kappa tiny
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kappa_at(mid) > 1.0 ? lo : hi) = mid;
  }
  return 10.0 * std::log10(1.0 / (0.5 * (lo + hi)));
}

namespace {

double eij_from_kappa(const Eigen::VectorXd& sin_sq, double kappa_value, int n_rx) {
  double prod = 1.0;
  for (int m = 0; m < sin_sq.size(); ++m) prod *= 1.0 + kappa_value * sin_sq[m];
  return std::pow(prod, -n_rx);
}

double ami_bound_impl(const Constellation& c, double kappa_value, int n_rx, double lambda) {
  require_rx(n_rx);
  require_lambda(lambda);
  const int n = c.size();
  const int t = c.t_slots();
  // E is symmetric in (i, j); accumulate row sums from the upper triangle.
  std::vector<double> row_sum(static_cast<size_t>(n), 1.0);  // E_ii = 1
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double e = eij_from_kappa(sin_sq_angles(c[i], c[j]), kappa_value, n_rx);
      row_sum[static_cast<size_t>(i)] += e;
      row_sum[static_cast<size_t>(j)] += e;
    }
  }
  double sum_log = 0.0;
  for (double r : row_sum) sum_log += std::log(r);
  return std::log2(static_cast<double>(n)) / t -
         sum_log / (t * static_cast<double>(n) * lambda * M_LN2);
}

}  // namespace

double ami_lower_bound(const Constellation& c, const NoiseModel& noise, int n_rx,
                       double lambda) {
  return ami_bound_impl(c, kappa(lambda, noise, c.t_slots(), c.m_antennas()), n_rx, lambda);
}

double ami_lower_bound_with_kappa(const Constellation& c, double kappa_value, int n_rx,
                                  double lambda) {
  return ami_bound_impl(c, kappa_value, n_rx, lambda);
}

double expectation_Eij_closed(const GrassmannPoint& a, const GrassmannPoint& b,
                              const NoiseModel& noise, int n_rx, double lambda) {
  require_rx(n_rx);
  const double k = kappa(lambda, noise, a.t_slots(), a.m_antennas());
  return eij_from_kappa(sin_sq_angles(a, b), k, n_rx);
}

namespace {

CMat kron_identity_left(int n, const CMat& m) {
  // I_n (x) m
  CMat out = CMat::Zero(n * m.rows(), n * m.cols());
  for (int k = 0; k < n; ++k) {
    out.block(k * m.rows(), k * m.cols(), m.rows(), m.cols()) = m;
  }
  return out;
}

}  // namespace

double expectation_Eij_bruteforce(const GrassmannPoint& a, const GrassmannPoint& b,
                                  const NoiseModel& noise, int n_rx, double lambda) {
  require_rx(n_rx);
  const int t = a.t_slots();
  const int m = a.m_antennas();
  const int mn = m * n_rx;
  const int tn = t * n_rx;
  const double al = alpha(lambda, noise, t, m);

  const CMat delta = a.matrix() * a.matrix().adjoint() - b.matrix() * b.matrix().adjoint();
  CMat big_b(tn, mn + tn);
  big_b.leftCols(mn) = kron_identity_left(n_rx, a.matrix());
  big_b.rightCols(tn) = CMat::Identity(tn, tn);
  const CMat big_a = big_b.adjoint() * kron_identity_left(n_rx, delta) * big_b;

  Eigen::VectorXd sigma_diag(mn + tn);
  sigma_diag.head(mn).setOnes();
  sigma_diag.tail(tn).setConstant(noise.sigma_v_sq);

  const CMat full =
      CMat::Identity(mn + tn, mn + tn) + al * sigma_diag.asDiagonal().toDenseMatrix() * big_a;
  return 1.0 / full.determinant().real();
}

double expectation_Eij_mc(const GrassmannPoint& a, const GrassmannPoint& b,
                          const NoiseModel& noise, int n_rx, double lambda, long samples,
                          Rng& rng, double* standard_error) {
  require_rx(n_rx);
  if (samples < 2) throw std::invalid_argument("expectation_Eij_mc: need >= 2 samples");
  const int t = a.t_slots();
  const int m = a.m_antennas();
  const double al = alpha(lambda, noise, t, m);
  const double sigma_v = std::sqrt(noise.sigma_v_sq);

  CMat h(m, n_rx), y(t, n_rx);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long s = 0; s < samples; ++s) {
    for (int c = 0; c < n_rx; ++c) {
      for (int r = 0; r < m; ++r) h(r, c) = rng.cnormal();
    }
    y = a.matrix() * h;
    for (int c = 0; c < n_rx; ++c) {
      for (int r = 0; r < t; ++r) y(r, c) += sigma_v * rng.cnormal();
    }
    // tr(Y Y^H (P_a - P_b)) = ||a^H Y||_F^2 - ||b^H Y||_F^2
    const double quad =
        (a.matrix().adjoint() * y).squaredNorm() - (b.matrix().adjoint() * y).squaredNorm();
    const double v = std::exp(-al * quad);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / static_cast<double>(samples);
  if (standard_error != nullptr) {
    const double var =
        std::max(0.0, sum_sq / static_cast<double>(samples) - mean * mean);
    *standard_error = std::sqrt(var / static_cast<double>(samples - 1));
  }
  return mean;
}

DeterminantFactors determinant_factors_D1_D2(const GrassmannPoint& a,
                                             const GrassmannPoint& b,
                                             const NoiseModel& noise, int n_rx,
                                             double lambda) {
  require_rx(n_rx);
  const int t = a.t_slots();
  const int m = a.m_antennas();
  const double al = alpha(lambda, noise, t, m);
  const double k = kappa(lambda, noise, t, m);
  const double a2s4 = al * al * noise.sigma_v_sq * noise.sigma_v_sq;
  const Eigen::VectorXd s2 = sin_sq_angles(a, b);

  double d1 = 1.0;
  double d2 = 1.0;
  for (int i = 0; i < s2.size(); ++i) {
    const double gamma = 1.0 - a2s4 * s2[i];
    if (gamma <= 0.0) {
      // Cannot occur for lambda <= 1: alpha sigma^2 = lambda / (1 + sigma^2 M/T) < 1.
      throw std::runtime_error("determinant_factors_D1_D2: pole in D2");
    }
    d1 *= gamma;
    d2 *= (1.0 + k * s2[i]) / gamma;
  }
  return {std::pow(d1, n_rx), std::pow(d2, n_rx)};
}

}  // namespace grasscode
