#pragma once

#include <utility>
#include <vector>

#include "grasscode/grassmann.hpp"
#include "grasscode/rng.hpp"

namespace grasscode {

struct NoiseModel {
  double sigma_v_sq = 1.0;
  double snr_db = 0.0;

  static NoiseModel from_snr_db(double snr_db);
  static NoiseModel from_sigma_v_sq(double sigma_v_sq);
};

/// One pairwise error bound term: the rank m' of I_M - X_i^H X_j X_j^H X_i,
/// its nonzero eigenvalues (descending), and the bound value.
struct PepTerm {
  int rank = 0;
  std::vector<double> eigenvalues;
  double bound = 0.0;
};

/// Conventional GLRT pairwise error bound
/// sigma^{2MN} C(2MN-1, MN) / Re[det(I_M - X_i^H X_j X_j^H X_i)]^N.
/// Returns +inf when the determinant falls below rank_tol: the expression is
/// undefined or divergent on rank-deficient pairs.
double pep_pair_conventional(const GrassmannPoint& a, const GrassmannPoint& b,
                             const NoiseModel& noise, int n_rx, double rank_tol = 1e-9);

/// Revised bound built from the nonzero eigenvalues only:
/// sigma^{2m'N} C(2m'N-1, m'N) / prod |mu_m|^N. Finite whenever the pair
/// spans distinct subspaces. Throws DegeneratePairError when every
/// eigenvalue sits below rank_tol (relative to the largest).
PepTerm pep_pair_proposed(const GrassmannPoint& a, const GrassmannPoint& b,
                          const NoiseModel& noise, int n_rx, double rank_tol = 1e-9);

/// (2/|X|) sum_{i<j} of the revised pairwise bound.
double union_bound(const Constellation& c, const NoiseModel& noise, int n_rx);

/// Same union sum over the conventional bound; +inf as soon as one pair is
/// rank deficient.
double union_bound_conventional(const Constellation& c, const NoiseModel& noise, int n_rx);

/// alpha = lambda / (sigma_v^2 (1 + sigma_v^2 M / T)), for 0 < lambda <= 1.
double alpha(double lambda, const NoiseModel& noise, int t_slots, int m_antennas);

/// kappa(lambda) = alpha - alpha^2 sigma^2 - alpha^2 sigma^4: the
/// SNR-dependent weight of the joint distance.
double kappa(double lambda, const NoiseModel& noise, int t_slots, int m_antennas);

/// Closed-form maximizer of kappa over (0, 1]:
/// min{1, (1 + sigma^2 M/T) / (2 (1 + sigma^2))}.
double lambda_star(const NoiseModel& noise, int t_slots, int m_antennas);

/// SNR at which kappa(lambda_star) crosses 1, found by bisection on the
/// noise variance. Independent of (T, M); the closed root is
/// sigma_v^2 = (sqrt(2) - 1) / 2, about 6.84 dB.
double snr_crossover_db(int t_slots = 4, int m_antennas = 2);

/// Closed-form lower bound on the noncoherent AMI in bits per channel use:
/// log2|X|/T - (1/(T |X| lambda ln2)) sum_i ln sum_j E_ij, with E_ii = 1 and
/// E_ij = [prod (1 + kappa(lambda) sin^2 theta_m)]^{-N}.
double ami_lower_bound(const Constellation& c, const NoiseModel& noise, int n_rx,
                       double lambda);

/// Same bound with the kappa weight supplied directly (the lambda argument
/// only scales the correction term). Lets tests probe limits such as
/// kappa -> inf.
double ami_lower_bound_with_kappa(const Constellation& c, double kappa_value, int n_rx,
                                  double lambda);

/// E_ij = [prod (1 + kappa sin^2 theta_m)]^{-N}: the Gaussian expectation
/// E[exp(-alpha tr(Y_i Y_i^H Delta))] for Y_i = X_i H + V in closed form.
double expectation_Eij_closed(const GrassmannPoint& a, const GrassmannPoint& b,
                              const NoiseModel& noise, int n_rx, double lambda);

/// The same expectation evaluated the long way: z = [h; v], B = [I_N (x) X_i,
/// I_TN], A = B^H (I_N (x) Delta) B, Sigma = diag(I_MN, sigma^2 I_TN),
/// result det(I + alpha Sigma A)^{-1}. Kept in the public API as the
/// documenting oracle; cheap at desk scale.
double expectation_Eij_bruteforce(const GrassmannPoint& a, const GrassmannPoint& b,
                                  const NoiseModel& noise, int n_rx, double lambda);

/// Monte Carlo estimate of the same expectation by sampling (H, V) and
/// averaging exp(-alpha tr(Y Y^H Delta)). Returns the mean; the standard
/// error goes to *standard_error when given.
double expectation_Eij_mc(const GrassmannPoint& a, const GrassmannPoint& b,
                          const NoiseModel& noise, int n_rx, double lambda, long samples,
                          Rng& rng, double* standard_error = nullptr);

struct DeterminantFactors {
  double d1 = 1.0;
  double d2 = 1.0;
};

/// Block-determinant factors of I + alpha Sigma A:
/// D1 = [prod (1 - alpha^2 sigma^4 sin^2 theta_m)]^N,
/// D2 = [prod (1 + kappa sin^2 theta_m) / (1 - alpha^2 sigma^4 sin^2
/// theta_m)]^N; D1 * D2 = 1 / E_ij.
DeterminantFactors determinant_factors_D1_D2(const GrassmannPoint& a,
                                             const GrassmannPoint& b,
                                             const NoiseModel& noise, int n_rx,
                                             double lambda);

}  // namespace grasscode
