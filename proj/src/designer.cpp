#include "grasscode/designer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "grasscode/baselines.hpp"
#include "grasscode/errors.hpp"
#include "grasscode/parallel.hpp"

namespace grasscode {

namespace {

using nlohmann::json;

enum class Surrogate { kFrobenius, kDeterminant };

constexpr double kArmijoC = 1e-4;
constexpr double kMinStep = 1e-16;

double det_hermitian_real(const CMat& w) {
  switch (w.rows()) {
    case 1:
      return w(0, 0).real();
    case 2:
      return (w(0, 0) * w(1, 1) - w(0, 1) * w(1, 0)).real();
    case 3:
      return (w(0, 0) * (w(1, 1) * w(2, 2) - w(1, 2) * w(2, 1)) -
              w(0, 1) * (w(1, 0) * w(2, 2) - w(1, 2) * w(2, 0)) +
              w(0, 2) * (w(1, 0) * w(2, 1) - w(1, 1) * w(2, 0)))
          .real();
    default:
      return w.determinant().real();
  }
}

/// Adjugate of a Hermitian matrix via its eigendecomposition:
/// adj(W) = Q diag(prod_{k != i} lambda_k) Q^H. Stays finite at singular W,
/// where det(W) W^{-1} would not.
CMat adjugate_hermitian(const CMat& w) {
  Eigen::SelfAdjointEigenSolver<CMat> es(w);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const int n = static_cast<int>(lam.size());
  Eigen::VectorXd cof(n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int k = 0; k < n; ++k) {
      if (k != i) p *= lam[k];
    }
    cof[i] = p;
  }
  return es.eigenvectors() * cof.asDiagonal() * es.eigenvectors().adjoint();
}

/// Thin QR with the R diagonal fixed real positive; the working retraction.
CMat qr_retract(const CMat& x) {
  Eigen::HouseholderQR<CMat> qr(x);
  const int t = static_cast<int>(x.rows());
  const int m = static_cast<int>(x.cols());
  CMat q = qr.householderQ() * CMat::Identity(t, m);
  for (int c = 0; c < m; ++c) {
    const Cplx d = qr.matrixQR()(c, c);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(c) *= d / mag;
  }
  return q;
}

double pair_exponent(Surrogate s, const CMat& xi, const CMat& xj, double eps) {
  const int m = static_cast<int>(xi.cols());
  const CMat g = xi.adjoint() * xj;
  if (s == Surrogate::kFrobenius) {
    // ||P_i - P_j||_F = sqrt(2 (M - ||X_i^H X_j||_F^2))
    const double d = std::sqrt(std::max(0.0, 2.0 * (m - g.squaredNorm())));
    return -d / eps;
  }
  CMat w = -g * g.adjoint();
  w.diagonal().array() += 1.0;
  return -det_hermitian_real(w) / eps;
}

struct Exponents {
  std::vector<double> e;  // pairs (i, j), i < j, in row-major order
  double max_e = 0.0;
  double lse = 0.0;  // objective value
};

Exponents compute_exponents(const std::vector<CMat>& pts, Surrogate s, double eps) {
  const int card = static_cast<int>(pts.size());
  Exponents out;
  out.e.reserve(static_cast<size_t>(card) * (card - 1) / 2);
  for (int i = 0; i < card; ++i) {
    for (int j = i + 1; j < card; ++j) {
      out.e.push_back(pair_exponent(s, pts[static_cast<size_t>(i)],
                                    pts[static_cast<size_t>(j)], eps));
    }
  }
  out.max_e = *std::max_element(out.e.begin(), out.e.end());
  double sum = 0.0;
  for (double e : out.e) sum += std::exp(e - out.max_e);
  out.lse = out.max_e + std::log(sum);
  return out;
}

/// Riemannian gradients of the surrogate: softmax-weighted pair gradients
/// projected onto the horizontal space X_grad - X X^H X_grad.
void riemannian_grads(const std::vector<CMat>& pts, Surrogate s, double eps,
                      const Exponents& ex, std::vector<CMat>& rgrads, double& grad_sq) {
  const int card = static_cast<int>(pts.size());
  const int t = static_cast<int>(pts.front().rows());
  const int m = static_cast<int>(pts.front().cols());
  std::vector<CMat> egrads(static_cast<size_t>(card), CMat::Zero(t, m));
  double sum = 0.0;
  for (double e : ex.e) sum += std::exp(e - ex.max_e);

  size_t pair_idx = 0;
  for (int i = 0; i < card; ++i) {
    for (int j = i + 1; j < card; ++j, ++pair_idx) {
      const double w = std::exp(ex.e[pair_idx] - ex.max_e) / sum;
      if (w < 1e-16) continue;
      const CMat& xi = pts[static_cast<size_t>(i)];
      const CMat& xj = pts[static_cast<size_t>(j)];
      const CMat g = xi.adjoint() * xj;
      if (s == Surrogate::kFrobenius) {
        const double d = std::sqrt(std::max(1e-12, 2.0 * (m - g.squaredNorm())));
        // e = -||P_i - P_j||_F / eps; Delta X_i = X_i - X_j G^H.
        egrads[static_cast<size_t>(i)] += (w / (eps * d)) * (xj * g.adjoint() - xi);
        egrads[static_cast<size_t>(j)] += (w / (eps * d)) * (xi * g - xj);
      } else {
        CMat w_ij = -g * g.adjoint();
        w_ij.diagonal().array() += 1.0;
        CMat w_ji = -g.adjoint() * g;
        w_ji.diagonal().array() += 1.0;
        // e = -det(W)/eps; d det(W)/dX_i = -2 X_j G^H adj(W_ij).
        egrads[static_cast<size_t>(i)] += (2.0 * w / eps) * (xj * (g.adjoint() * adjugate_hermitian(w_ij)));
        egrads[static_cast<size_t>(j)] += (2.0 * w / eps) * (xi * (g * adjugate_hermitian(w_ji)));
      }
    }
  }
  rgrads.resize(static_cast<size_t>(card));
  grad_sq = 0.0;
  for (int i = 0; i < card; ++i) {
    const CMat& x = pts[static_cast<size_t>(i)];
    rgrads[static_cast<size_t>(i)] =
        egrads[static_cast<size_t>(i)] - x * (x.adjoint() * egrads[static_cast<size_t>(i)]);
    grad_sq += rgrads[static_cast<size_t>(i)].squaredNorm();
  }
}

struct RestartOutcome {
  std::vector<CMat> points;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double exact_metric = 0.0;
  std::vector<double> trace;
};

double exact_min_metric(const std::vector<CMat>& pts, Surrogate s) {
  std::vector<GrassmannPoint> gp;
  gp.reserve(pts.size());
  for (const CMat& x : pts) gp.emplace_back(x);
  const Constellation c(std::move(gp));
  return min_pairwise(c, s == Surrogate::kFrobenius ? PairMetric::kChordal
                                                    : PairMetric::kChordalProduct)
      .value;
}

RestartOutcome manopt_restart(int t_slots, int m_antennas, int card, Surrogate s,
                              const DesignConfig& cfg, std::uint64_t restart_seed) {
  Rng rng(restart_seed);
  std::vector<CMat> pts;
  pts.reserve(static_cast<size_t>(card));
  for (int i = 0; i < card; ++i) {
    pts.push_back(haar_random_point(t_slots, m_antennas, rng).matrix());
  }

  Exponents ex = compute_exponents(pts, s, cfg.epsilon);
  RestartOutcome out;
  out.trace.push_back(ex.lse);
  double step = cfg.step_size;
  std::vector<CMat> rgrads;
  std::vector<CMat> cand(static_cast<size_t>(card));

  for (int it = 0; it < cfg.max_iterations; ++it) {
    double grad_sq = 0.0;
    riemannian_grads(pts, s, cfg.epsilon, ex, rgrads, grad_sq);
    if (grad_sq < 1e-18) {
      out.converged = true;
      break;
    }
    double t = step;
    bool accepted = false;
    Exponents ex_cand;
    while (t >= kMinStep) {
      for (int i = 0; i < card; ++i) {
        cand[static_cast<size_t>(i)] =
            qr_retract(pts[static_cast<size_t>(i)] - t * rgrads[static_cast<size_t>(i)]);
      }
      ex_cand = compute_exponents(cand, s, cfg.epsilon);
      if (ex_cand.lse <= ex.lse - kArmijoC * t * grad_sq) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.converged = true;  // no descent direction resolvable at machine precision
      break;
    }
    const double decrease = ex.lse - ex_cand.lse;
    pts.swap(cand);
    ex = ex_cand;
    out.trace.push_back(ex.lse);
    out.iterations = it + 1;
    step = 2.0 * t;
    if (decrease < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.points = std::move(pts);
  out.objective = ex.lse;
  out.exact_metric = exact_min_metric(out.points, s);
  return out;
}

/// Materializes one codeword from its pattern and the flat parameter block
/// (per column: |supp|-1 amplitude angles, then |supp|-1 phases).
void materialize_flat(const SparsityPattern& p, const double* theta, CMat& out) {
  out.setZero();
  size_t q = 0;
  for (int c = 0; c < p.m_cols(); ++c) {
    const auto& supp = p.supports[static_cast<size_t>(c)];
    const int k = static_cast<int>(supp.size());
    const double* al = theta + q;
    const double* ph = theta + q + (k - 1);
    double cos_prefix = 1.0;
    for (int i = 0; i < k; ++i) {
      const double mag = (i < k - 1) ? cos_prefix * std::sin(al[i]) : cos_prefix;
      const Cplx phase = (i == 0) ? Cplx(1.0, 0.0) : std::polar(1.0, ph[i - 1]);
      out(supp[static_cast<size_t>(i)], c) = mag * phase;
      if (i < k - 1) cos_prefix *= std::cos(al[i]);
    }
    q += 2 * static_cast<size_t>(k - 1);
  }
}

int flat_param_count(const SparsityPattern& p) {
  return 2 * (p.sparsity() - p.m_cols());
}

/// Log-sum-exp over pair exponents with cached row sums, so perturbing one
/// codeword's parameters only re-evaluates its |X| - 1 pairs. This is what
/// keeps the central-difference gradient affordable at |X| = 64.
class SparseSurrogate {
 public:
  SparseSurrogate(const std::vector<SparsityPattern>& patterns, Surrogate s, double eps)
      : patterns_(patterns), s_(s), eps_(eps), card_(static_cast<int>(patterns.size())) {
    const int t = patterns.front().t_slots;
    const int m = patterns.front().m_cols();
    points_.assign(static_cast<size_t>(card_), CMat::Zero(t, m));
    scratch_.resize(t, m);
    e_.assign(static_cast<size_t>(card_) * card_, 0.0);
  }

  void refresh(const std::vector<std::vector<double>>& theta) {
    for (int i = 0; i < card_; ++i) {
      materialize_flat(patterns_[static_cast<size_t>(i)],
                       theta[static_cast<size_t>(i)].data(),
                       points_[static_cast<size_t>(i)]);
    }
    max_e_ = -1e300;
    for (int i = 0; i < card_; ++i) {
      for (int j = i + 1; j < card_; ++j) {
        const double e = pair_exponent(s_, points_[static_cast<size_t>(i)],
                                       points_[static_cast<size_t>(j)], eps_);
        e_[static_cast<size_t>(i) * card_ + j] = e;
        e_[static_cast<size_t>(j) * card_ + i] = e;
        max_e_ = std::max(max_e_, e);
      }
    }
    sum_ = 0.0;
    row_sum_.assign(static_cast<size_t>(card_), 0.0);
    for (int i = 0; i < card_; ++i) {
      for (int j = i + 1; j < card_; ++j) {
        const double w = std::exp(e_[static_cast<size_t>(i) * card_ + j] - max_e_);
        sum_ += w;
        row_sum_[static_cast<size_t>(i)] += w;
        row_sum_[static_cast<size_t>(j)] += w;
      }
    }
  }

  double objective() const { return max_e_ + std::log(sum_); }

  /// Objective with codeword i's parameters replaced by theta_i, everything
  /// else cached.
  double objective_replacing(int i, const double* theta_i) {
    materialize_flat(patterns_[static_cast<size_t>(i)], theta_i, scratch_);
    double row = 0.0;
    for (int j = 0; j < card_; ++j) {
      if (j == i) continue;
      const double e = pair_exponent(s_, scratch_, points_[static_cast<size_t>(j)], eps_);
      row += std::exp(e - max_e_);
    }
    const double s = sum_ - row_sum_[static_cast<size_t>(i)] + row;
    return max_e_ + std::log(std::max(s, 1e-300));
  }

  const std::vector<CMat>& points() const { return points_; }

 private:
  const std::vector<SparsityPattern>& patterns_;
  Surrogate s_;
  double eps_;
  int card_;
  std::vector<CMat> points_;
  CMat scratch_;
  std::vector<double> e_;
  std::vector<double> row_sum_;
  double max_e_ = 0.0;
  double sum_ = 0.0;
};

RestartOutcome sparse_restart(const std::vector<SparsityPattern>& patterns, Surrogate s,
                              const DesignConfig& cfg, std::uint64_t restart_seed) {
  constexpr double kFdStep = 1e-6;
  const int card = static_cast<int>(patterns.size());
  Rng rng(restart_seed);
  std::vector<std::vector<double>> theta(static_cast<size_t>(card));
  for (int i = 0; i < card; ++i) {
    theta[static_cast<size_t>(i)].resize(
        static_cast<size_t>(flat_param_count(patterns[static_cast<size_t>(i)])));
    for (double& v : theta[static_cast<size_t>(i)]) {
      v = (2.0 * rng.uniform() - 1.0) * M_PI;
    }
  }

  SparseSurrogate surrogate(patterns, s, cfg.epsilon);
  surrogate.refresh(theta);
  double f = surrogate.objective();

  RestartOutcome out;
  out.trace.push_back(f);
  std::vector<std::vector<double>> grad(theta);
  std::vector<std::vector<double>> cand(theta);
  std::vector<double> probe;
  double step = cfg.step_size;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    // Central differences, one codeword at a time against the cached rows.
    double grad_sq = 0.0;
    for (int i = 0; i < card; ++i) {
      const auto& ti = theta[static_cast<size_t>(i)];
      probe.assign(ti.begin(), ti.end());
      for (size_t p = 0; p < ti.size(); ++p) {
        probe[p] = ti[p] + kFdStep;
        const double fp = surrogate.objective_replacing(i, probe.data());
        probe[p] = ti[p] - kFdStep;
        const double fm = surrogate.objective_replacing(i, probe.data());
        probe[p] = ti[p];
        const double g = (fp - fm) / (2.0 * kFdStep);
        grad[static_cast<size_t>(i)][p] = g;
        grad_sq += g * g;
      }
    }
    if (grad_sq < 1e-18) {
      out.converged = true;
      break;
    }
    double t = step;
    bool accepted = false;
    double f_cand = f;
    while (t >= kMinStep) {
      for (int i = 0; i < card; ++i) {
        for (size_t p = 0; p < theta[static_cast<size_t>(i)].size(); ++p) {
          cand[static_cast<size_t>(i)][p] =
              theta[static_cast<size_t>(i)][p] - t * grad[static_cast<size_t>(i)][p];
        }
      }
      SparseSurrogate eval(patterns, s, cfg.epsilon);
      eval.refresh(cand);
      f_cand = eval.objective();
      if (f_cand <= f - kArmijoC * t * grad_sq) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.converged = true;
      break;
    }
    const double decrease = f - f_cand;
    theta.swap(cand);
    surrogate.refresh(theta);
    f = surrogate.objective();
    out.trace.push_back(f);
    out.iterations = it + 1;
    step = 2.0 * t;
    if (decrease < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }

  out.points = surrogate.points();
  out.objective = f;
  out.exact_metric = exact_min_metric(out.points, s);
  return out;
}

void require_design_args(int card, const DesignConfig& cfg) {
  if (card < 2) throw std::invalid_argument("design: cardinality must be >= 2");
  if (!(cfg.epsilon > 0.0) || cfg.max_iterations < 1 || cfg.restarts < 1 ||
      !(cfg.step_size > 0.0)) {
    throw std::invalid_argument("design: invalid configuration");
  }
}

std::pair<Constellation, DesignReport> assemble(const std::vector<RestartOutcome>& outcomes,
                                                std::string provenance) {
  int best = 0;
  for (int r = 1; r < static_cast<int>(outcomes.size()); ++r) {
    if (outcomes[static_cast<size_t>(r)].exact_metric >
        outcomes[static_cast<size_t>(best)].exact_metric) {
      best = r;
    }
  }
  const RestartOutcome& win = outcomes[static_cast<size_t>(best)];
  std::vector<GrassmannPoint> pts;
  pts.reserve(win.points.size());
  for (const CMat& x : win.points) pts.emplace_back(x);
  Constellation c(std::move(pts), std::move(provenance));

  DesignReport report;
  report.final_objective = win.objective;
  report.iterations_used = win.iterations;
  report.converged = win.converged;
  report.objective_trace = win.trace;
  for (const RestartOutcome& o : outcomes) report.per_restart_best.push_back(o.exact_metric);
  report.achieved_mcd = min_pairwise(c, PairMetric::kChordal).value;
  report.achieved_mcpd = min_pairwise(c, PairMetric::kChordalProduct).value;
  return {std::move(c), std::move(report)};
}

std::pair<Constellation, DesignReport> design_manopt(int t_slots, int m_antennas, int card,
                                                     Surrogate s, const DesignConfig& cfg,
                                                     const char* name) {
  require_design_args(card, cfg);
  std::vector<RestartOutcome> outcomes(static_cast<size_t>(cfg.restarts));
  parallel_for(cfg.restarts, cfg.parallel, [&](int r) {
    outcomes[static_cast<size_t>(r)] =
        manopt_restart(t_slots, m_antennas, card, s, cfg,
                       Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
  });
  return assemble(outcomes, std::string(name) + " T=" + std::to_string(t_slots) +
                                " M=" + std::to_string(m_antennas) +
                                " card=" + std::to_string(card) +
                                " seed=" + std::to_string(cfg.seed));
}

/// Smallest eigenvalue of I - X_i^H X_j X_j^H X_i relative to the largest;
/// full rank iff above tol.
bool pair_full_rank(const CMat& xi, const CMat& xj, double tol) {
  const CMat g = xi.adjoint() * xj;
  CMat w = -g * g.adjoint();
  w.diagonal().array() += 1.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(w, Eigen::EigenvaluesOnly);
  const double largest = es.eigenvalues().maxCoeff();
  return es.eigenvalues().minCoeff() > tol * std::max(largest, 0.0);
}

}  // namespace

DesignConfig design_config_from_json_text(const std::string& text) {
  json doc = json::parse(text);
  DesignConfig cfg;
  cfg.epsilon = doc.value("epsilon", cfg.epsilon);
  cfg.max_iterations = doc.value("max_iterations", cfg.max_iterations);
  cfg.restarts = doc.value("restarts", cfg.restarts);
  cfg.step_size = doc.value("step_size", cfg.step_size);
  cfg.tolerance = doc.value("tolerance", cfg.tolerance);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.parallel = doc.value("parallel", cfg.parallel);
  return cfg;
}

std::string design_report_to_json_text(const DesignReport& report) {
  json doc;
  doc["final_objective"] = report.final_objective;
  doc["achieved_mcd"] = report.achieved_mcd;
  doc["achieved_mcpd"] = report.achieved_mcpd;
  doc["iterations_used"] = report.iterations_used;
  doc["per_restart_best"] = report.per_restart_best;
  doc["converged"] = report.converged;
  doc["rank_ok"] = report.rank_ok;
  return doc.dump(1);
}

std::pair<Constellation, DesignReport> design_mcd_manopt(int t_slots, int m_antennas,
                                                         int cardinality,
                                                         const DesignConfig& cfg) {
  return design_manopt(t_slots, m_antennas, cardinality, Surrogate::kFrobenius, cfg,
                       "mcd-manopt");
}

std::pair<Constellation, DesignReport> design_mcpd_manopt(int t_slots, int m_antennas,
                                                          int cardinality,
                                                          const DesignConfig& cfg) {
  return design_manopt(t_slots, m_antennas, cardinality, Surrogate::kDeterminant, cfg,
                       "mcpd-manopt");
}

std::pair<Constellation, DesignReport> design_sparse(int t_slots, int m_antennas,
                                                     int sparsity, int cardinality,
                                                     const DesignConfig& cfg) {
  require_design_args(cardinality, cfg);
  const std::vector<SparsityPattern> patterns =
      allocate_patterns(t_slots, m_antennas, sparsity, cardinality);

  std::vector<RestartOutcome> outcomes(static_cast<size_t>(cfg.restarts));
  parallel_for(cfg.restarts, cfg.parallel, [&](int r) {
    outcomes[static_cast<size_t>(r)] =
        sparse_restart(patterns, Surrogate::kDeterminant, cfg,
                       Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
  });
  auto [c, report] = assemble(
      outcomes, "sparse T=" + std::to_string(t_slots) + " M=" + std::to_string(m_antennas) +
                    " s=" + std::to_string(sparsity) + " card=" +
                    std::to_string(cardinality) + " seed=" + std::to_string(cfg.seed));
  report.rank_ok = true;
  for (int i = 0; i < c.size() && report.rank_ok; ++i) {
    for (int j = i + 1; j < c.size(); ++j) {
      if (!pair_full_rank(c[i].matrix(), c[j].matrix(), 1e-9)) {
        report.rank_ok = false;
        break;
      }
    }
  }
  return {std::move(c), std::move(report)};
}

Constellation design_rank_deficient_reference(int t_slots, int m_antennas, int cardinality,
                                              const DesignConfig& cfg) {
  require_design_args(cardinality, cfg);
  const auto all = enumerate_patterns(t_slots, m_antennas, t_slots);
  const SparsityPattern* unsafe = nullptr;
  for (const auto& p : all) {
    if (!is_rank_safe_for_reuse(p)) {
      unsafe = &p;
      break;
    }
  }
  if (unsafe == nullptr) {
    throw InfeasibleError("design_rank_deficient_reference: no non-rank-safe pattern");
  }
  // Every codeword shares the pattern, so all chordal product distances are
  // pinned at zero; the chordal surrogate still spreads the free parameters.
  const std::vector<SparsityPattern> patterns(static_cast<size_t>(cardinality), *unsafe);
  std::vector<RestartOutcome> outcomes(static_cast<size_t>(cfg.restarts));
  parallel_for(cfg.restarts, cfg.parallel, [&](int r) {
    outcomes[static_cast<size_t>(r)] =
        sparse_restart(patterns, Surrogate::kFrobenius, cfg,
                       Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
  });
  auto [c, report] = assemble(
      outcomes, "rank-deficient T=" + std::to_string(t_slots) +
                    " M=" + std::to_string(m_antennas) +
                    " card=" + std::to_string(cardinality) +
                    " seed=" + std::to_string(cfg.seed));
  (void)report;
  return std::move(c);
}

}  // namespace grasscode
