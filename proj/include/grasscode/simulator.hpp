#pragma once

#include <cstdint>
#include <vector>

#include "grasscode/analysis.hpp"
#include "grasscode/grassmann.hpp"
#include "grasscode/rng.hpp"
#include "grasscode/storage.hpp"

namespace grasscode {

/// Monte Carlo controls. `workers` fixes the number of independent random
/// streams (and with it the totals); `parallel` only chooses whether those
/// streams run on OpenMP threads or serially, so results are bit-identical
/// either way for a fixed (seed, workers).
struct SimConfig {
  std::vector<double> snr_db;
  int n_rx = 2;
  long max_frames = 1'000'000;
  long target_error_count = 200;
  long mc_samples = 100'000;
  std::uint64_t seed = 1;
  int workers = 4;
  bool parallel = true;
};

struct ChannelRealization {
  CMat H;  // M x N, i.i.d. CN(0, 1)
  CMat V;  // T x N, i.i.d. CN(0, sigma_v^2)
};

ChannelRealization sample_channel(int t_slots, int m_antennas, int n_rx, double sigma_v_sq,
                                  Rng& rng);

/// Y = sqrt(T/M) X H + V; the scaling enforces E||S||_F^2 = T.
CMat transmit(const GrassmannPoint& x, const ChannelRealization& ch);

/// argmax_i tr(Y Y^H X_i X_i^H), computed as ||X_i^H Y||_F^2; ties go to the
/// lowest index.
int glrt_detect_dense(const CMat& y, const Constellation& c);

/// Same argmax over the row-indexed ELLPACK store. Accumulation visits rows
/// in the same ascending order as the dense kernel, so the metric (and the
/// argmax) matches the densified constellation exactly.
int glrt_detect_sparse(const CMat& y, const SparseConstellationStore& store);

struct DetectorOpCounts {
  long macs = 0;       // complex multiply-accumulates against codeword entries
  long squarings = 0;  // |acc|^2 evaluations
};

int glrt_detect_dense_counted(const CMat& y, const Constellation& c,
                              DetectorOpCounts& counts);
int glrt_detect_sparse_counted(const CMat& y, const SparseConstellationStore& store,
                               DetectorOpCounts& counts);

struct SnrPointResult {
  double snr_db = 0.0;
  double estimate = 0.0;   // SER or AMI (bits per channel use)
  long frames = 0;         // frames or MC samples used
  long errors = 0;         // error count (SER) or samples (AMI)
  double half_width = 0.0; // 95% confidence half-width
};

using SimResult = std::vector<SnrPointResult>;

/// Uniform codeword per frame, fresh (H, V), GLRT detection; stops per SNR
/// point at target_error_count errors or max_frames.
SimResult estimate_ser(const Constellation& c, const SimConfig& cfg);

/// Monte Carlo noncoherent AMI: average over (H, V) draws of
/// log2|X|/T - (1/(T|X|)) sum_i log2 sum_j exp(eta_ij), inner sum evaluated
/// with a max shift. Uses mc_samples draws per SNR point.
SimResult estimate_ami(const Constellation& c, const SimConfig& cfg);

struct PairwiseErrorResult {
  double rate = 0.0;
  long frames = 0;
  long errors = 0;
  double half_width = 0.0;
};

/// Transmits `a` and decides between {a, b} by the GLRT metric.
PairwiseErrorResult estimate_pairwise_error(const GrassmannPoint& a, const GrassmannPoint& b,
                                            const NoiseModel& noise, int n_rx, long frames,
                                            std::uint64_t seed = 1, int workers = 4,
                                            bool parallel = true);

/// 95% Wilson score half-width for a binomial proportion.
double wilson_half_width(long successes, long trials);

}  // namespace grasscode
