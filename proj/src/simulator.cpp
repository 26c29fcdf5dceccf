#include "grasscode/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grasscode/parallel.hpp"

namespace grasscode {

namespace {

/// Codebook flattened for the frame loops: entry (t, m) of codeword i lives
/// at x[(i * M + m) * T + t].
struct FlatCodebook {
  int t = 0;
  int m = 0;
  int card = 0;
  std::vector<Cplx> x;

  static FlatCodebook from(const Constellation& c) {
    FlatCodebook cb;
    cb.t = c.t_slots();
    cb.m = c.m_antennas();
    cb.card = c.size();
    cb.x.resize(static_cast<size_t>(cb.card) * cb.m * cb.t);
    for (int i = 0; i < cb.card; ++i) {
      for (int col = 0; col < cb.m; ++col) {
        for (int r = 0; r < cb.t; ++r) {
          cb.x[(static_cast<size_t>(i) * cb.m + col) * cb.t + r] = c[i].matrix()(r, col);
        }
      }
    }
    return cb;
  }

  const Cplx* column(int i, int col) const {
    return &x[(static_cast<size_t>(i) * m + col) * t];
  }
};

inline double norm_sq(const Cplx& z) {
  return z.real() * z.real() + z.imag() * z.imag();
}

/// ||X_i^H Y||_F^2 accumulated row-ascending per column, squared magnitudes
/// summed column-ascending per receive antenna. The sparse kernel mirrors
/// this order, which is what makes the two metrics agree exactly.
int detect_dense_impl(const FlatCodebook& cb, const Cplx* y, int n_rx,
                      DetectorOpCounts* counts) {
  int best = 0;
  double best_metric = -1.0;
  for (int i = 0; i < cb.card; ++i) {
    double metric = 0.0;
    for (int n = 0; n < n_rx; ++n) {
      const Cplx* yc = y + static_cast<size_t>(n) * cb.t;
      for (int col = 0; col < cb.m; ++col) {
        const Cplx* xc = cb.column(i, col);
        Cplx acc(0.0, 0.0);
        for (int r = 0; r < cb.t; ++r) acc += std::conj(xc[r]) * yc[r];
        metric += norm_sq(acc);
      }
    }
    if (counts != nullptr) {
      counts->macs += static_cast<long>(n_rx) * cb.m * cb.t;
      counts->squarings += static_cast<long>(n_rx) * cb.m;
    }
    if (metric > best_metric) {
      best_metric = metric;
      best = i;
    }
  }
  return best;
}

int detect_sparse_impl(const SparseConstellationStore& store, const Cplx* y, int n_rx,
                       DetectorOpCounts* counts) {
  const int t = store.t_slots();
  const int m = store.m_antennas();
  // One extra accumulator slot absorbs the empty-row sentinel so the row
  // loop carries no branch.
  std::vector<Cplx> acc(static_cast<size_t>(m) + 1);
  int best = 0;
  double best_metric = -1.0;
  for (int i = 0; i < store.size(); ++i) {
    const std::int32_t* cols = store.col_row(i);
    const Cplx* vals = store.val_row(i);
    double metric = 0.0;
    for (int n = 0; n < n_rx; ++n) {
      const Cplx* yc = y + static_cast<size_t>(n) * t;
      std::fill(acc.begin(), acc.end(), Cplx(0.0, 0.0));
      for (int r = 0; r < t; ++r) {
        acc[static_cast<size_t>(cols[r])] += std::conj(vals[r]) * yc[r];
        if (counts != nullptr && cols[r] != store.empty_sentinel()) ++counts->macs;
      }
      for (int col = 0; col < m; ++col) metric += norm_sq(acc[static_cast<size_t>(col)]);
      if (counts != nullptr) counts->squarings += m;
    }
    if (metric > best_metric) {
      best_metric = metric;
      best = i;
    }
  }
  return best;
}

std::vector<Cplx> flatten_received(const CMat& y) {
  std::vector<Cplx> out(static_cast<size_t>(y.rows()) * y.cols());
  for (int n = 0; n < y.cols(); ++n) {
    for (int r = 0; r < y.rows(); ++r) out[static_cast<size_t>(n) * y.rows() + r] = y(r, n);
  }
  return out;
}

void require_sim_cfg(const SimConfig& cfg) {
  if (cfg.snr_db.empty()) throw std::invalid_argument("SimConfig: empty SNR list");
  if (cfg.max_frames < 1 || cfg.target_error_count < 1 || cfg.mc_samples < 1) {
    throw std::invalid_argument("SimConfig: counts must be >= 1");
  }
  if (cfg.workers < 1) throw std::invalid_argument("SimConfig: workers must be >= 1");
  if (cfg.n_rx < 1) throw std::invalid_argument("SimConfig: n_rx must be >= 1");
}

constexpr long kFramesPerWorkerRound = 4096;

}  // namespace

ChannelRealization sample_channel(int t_slots, int m_antennas, int n_rx, double sigma_v_sq,
                                  Rng& rng) {
  ChannelRealization ch;
  ch.H.resize(m_antennas, n_rx);
  ch.V.resize(t_slots, n_rx);
  for (int n = 0; n < n_rx; ++n) {
    for (int r = 0; r < m_antennas; ++r) ch.H(r, n) = rng.cnormal();
  }
  const double sigma_v = std::sqrt(sigma_v_sq);
  for (int n = 0; n < n_rx; ++n) {
    for (int r = 0; r < t_slots; ++r) ch.V(r, n) = sigma_v * rng.cnormal();
  }
  return ch;
}

CMat transmit(const GrassmannPoint& x, const ChannelRealization& ch) {
  if (ch.H.rows() != x.m_antennas() || ch.V.rows() != x.t_slots() ||
      ch.H.cols() != ch.V.cols()) {
    throw std::invalid_argument("transmit: inconsistent shapes");
  }
  const double scale = std::sqrt(static_cast<double>(x.t_slots()) / x.m_antennas());
  return scale * (x.matrix() * ch.H) + ch.V;
}

int glrt_detect_dense(const CMat& y, const Constellation& c) {
  if (y.rows() != c.t_slots()) throw std::invalid_argument("glrt_detect_dense: bad shape");
  const FlatCodebook cb = FlatCodebook::from(c);
  const auto yf = flatten_received(y);
  return detect_dense_impl(cb, yf.data(), static_cast<int>(y.cols()), nullptr);
}

int glrt_detect_sparse(const CMat& y, const SparseConstellationStore& store) {
  if (y.rows() != store.t_slots()) {
    throw std::invalid_argument("glrt_detect_sparse: bad shape");
  }
  const auto yf = flatten_received(y);
  return detect_sparse_impl(store, yf.data(), static_cast<int>(y.cols()), nullptr);
}

int glrt_detect_dense_counted(const CMat& y, const Constellation& c,
                              DetectorOpCounts& counts) {
  const FlatCodebook cb = FlatCodebook::from(c);
  const auto yf = flatten_received(y);
  return detect_dense_impl(cb, yf.data(), static_cast<int>(y.cols()), &counts);
}

int glrt_detect_sparse_counted(const CMat& y, const SparseConstellationStore& store,
                               DetectorOpCounts& counts) {
  const auto yf = flatten_received(y);
  return detect_sparse_impl(store, yf.data(), static_cast<int>(y.cols()), &counts);
}

double wilson_half_width(long successes, long trials) {
  if (trials < 1) return 0.0;
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  return z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
}

namespace {

/// One worker simulates `frames` SER frames on its own stream.
struct SerWorkerTotals {
  long frames = 0;
  long errors = 0;
};

/// Runs on a worker-local Rng copy and accumulates into locals: per-frame
/// writes to shared slots would put adjacent workers' state on one cache
/// line and serialize the threads.
void run_ser_frames(const FlatCodebook& cb, int n_rx, double sigma_v, double scale,
                    long frames, Rng& rng, SerWorkerTotals& totals) {
  const int t = cb.t;
  const int m = cb.m;
  // Buffers live on the calling worker's stack/arena; shared arrays indexed
  // by worker id would sit on common cache lines and defeat the threading.
  std::vector<Cplx> hbuf(static_cast<size_t>(m) * n_rx);
  std::vector<Cplx> ybuf(static_cast<size_t>(t) * n_rx);
  Rng local_rng = rng;
  long local_errors = 0;
  for (long f = 0; f < frames; ++f) {
    const int sent = local_rng.uniform_int(cb.card);
    for (int n = 0; n < n_rx; ++n) {
      for (int r = 0; r < m; ++r) hbuf[static_cast<size_t>(n) * m + r] = local_rng.cnormal();
    }
    for (int n = 0; n < n_rx; ++n) {
      for (int r = 0; r < t; ++r) {
        ybuf[static_cast<size_t>(n) * t + r] = sigma_v * local_rng.cnormal();
      }
    }
    for (int n = 0; n < n_rx; ++n) {
      Cplx* yc = &ybuf[static_cast<size_t>(n) * t];
      for (int col = 0; col < m; ++col) {
        const Cplx h = scale * hbuf[static_cast<size_t>(n) * m + col];
        const Cplx* xc = cb.column(sent, col);
        for (int r = 0; r < t; ++r) yc[r] += xc[r] * h;
      }
    }
    local_errors += detect_dense_impl(cb, ybuf.data(), n_rx, nullptr) != sent ? 1 : 0;
  }
  rng = local_rng;
  totals.frames += frames;
  totals.errors += local_errors;
}

}  // namespace

SimResult estimate_ser(const Constellation& c, const SimConfig& cfg) {
  require_sim_cfg(cfg);
  const FlatCodebook cb = FlatCodebook::from(c);
  const double scale = std::sqrt(static_cast<double>(cb.t) / cb.m);
  SimResult out;

  for (size_t si = 0; si < cfg.snr_db.size(); ++si) {
    const double sigma_v = std::sqrt(std::pow(10.0, -cfg.snr_db[si] / 10.0));
    const int w_count = cfg.workers;
    std::vector<Rng> streams;
    streams.reserve(static_cast<size_t>(w_count));
    for (int w = 0; w < w_count; ++w) {
      streams.emplace_back(Rng::derive(cfg.seed, si, static_cast<std::uint64_t>(w)));
    }

    long total_frames = 0;
    long total_errors = 0;
    // Fixed-size rounds keep the per-stream draw counts a deterministic
    // function of (seed, workers) alone, so OpenMP and serial runs agree
    // bit for bit.
    while (total_frames < cfg.max_frames && total_errors < cfg.target_error_count) {
      const long round_total =
          std::min(static_cast<long>(w_count) * kFramesPerWorkerRound,
                   cfg.max_frames - total_frames);
      std::vector<SerWorkerTotals> round(static_cast<size_t>(w_count));
      parallel_for(w_count, cfg.parallel, [&](int w) {
        const long share = round_total / w_count + (w < round_total % w_count ? 1 : 0);
        run_ser_frames(cb, cfg.n_rx, sigma_v, scale, share, streams[static_cast<size_t>(w)],
                       round[static_cast<size_t>(w)]);
      });
      for (const SerWorkerTotals& r : round) {
        total_frames += r.frames;
        total_errors += r.errors;
      }
    }
    SnrPointResult res;
    res.snr_db = cfg.snr_db[si];
    res.frames = total_frames;
    res.errors = total_errors;
    res.estimate = static_cast<double>(total_errors) / static_cast<double>(total_frames);
    res.half_width = wilson_half_width(total_errors, total_frames);
    out.push_back(res);
  }
  return out;
}

namespace {

struct AmiWorkerTotals {
  double sum = 0.0;
  double sum_sq = 0.0;
  long samples = 0;
};

}  // namespace

SimResult estimate_ami(const Constellation& c, const SimConfig& cfg) {
  require_sim_cfg(cfg);
  const int card = c.size();
  const int t = c.t_slots();
  const int m = c.m_antennas();
  const int n_rx = cfg.n_rx;
  const double scale = std::sqrt(static_cast<double>(t) / m);
  const double rate_cap = std::log2(static_cast<double>(card)) / t;

  // G[j][i] = X_j^H X_i is constant across samples; with it,
  // X_j^H Y_i = scale * G[j][i] H + X_j^H V needs only M x M and M x T
  // products per sample.
  std::vector<CMat> gram(static_cast<size_t>(card) * card);
  for (int j = 0; j < card; ++j) {
    for (int i = 0; i < card; ++i) {
      gram[static_cast<size_t>(j) * card + i] = c[j].matrix().adjoint() * c[i].matrix();
    }
  }

  SimResult out;
  for (size_t si = 0; si < cfg.snr_db.size(); ++si) {
    const double sigma_sq = std::pow(10.0, -cfg.snr_db[si] / 10.0);
    const double sigma_v = std::sqrt(sigma_sq);
    const double denom = sigma_sq * (1.0 + sigma_sq * m / static_cast<double>(t));
    const int w_count = cfg.workers;

    std::vector<AmiWorkerTotals> totals(static_cast<size_t>(w_count));
    parallel_for(w_count, cfg.parallel, [&](int w) {
      Rng rng(Rng::derive(cfg.seed, si, static_cast<std::uint64_t>(w)));
      const long share =
          cfg.mc_samples / w_count + (w < cfg.mc_samples % w_count ? 1 : 0);
      CMat h(m, n_rx), v(t, n_rx), proj(m, n_rx);
      std::vector<double> eta(static_cast<size_t>(card));
      std::vector<CMat> xj_v(static_cast<size_t>(card), CMat(m, n_rx));
      AmiWorkerTotals acc;  // local: shared slots would false-share across workers
      for (long s = 0; s < share; ++s) {
        for (int n = 0; n < n_rx; ++n) {
          for (int r = 0; r < m; ++r) h(r, n) = rng.cnormal();
        }
        for (int n = 0; n < n_rx; ++n) {
          for (int r = 0; r < t; ++r) v(r, n) = sigma_v * rng.cnormal();
        }
        for (int j = 0; j < card; ++j) {
          xj_v[static_cast<size_t>(j)].noalias() = c[j].matrix().adjoint() * v;
        }
        double sum_lse = 0.0;
        for (int i = 0; i < card; ++i) {
          // eta_ij = (||X_j^H Y_i||^2 - ||X_i^H Y_i||^2) / denom, eta_ii = 0.
          for (int j = 0; j < card; ++j) {
            proj.noalias() = scale * (gram[static_cast<size_t>(j) * card + i] * h);
            proj += xj_v[static_cast<size_t>(j)];
            eta[static_cast<size_t>(j)] = proj.squaredNorm();
          }
          const double self = eta[static_cast<size_t>(i)];
          double max_eta = 0.0;
          for (int j = 0; j < card; ++j) {
            eta[static_cast<size_t>(j)] = (eta[static_cast<size_t>(j)] - self) / denom;
            max_eta = std::max(max_eta, eta[static_cast<size_t>(j)]);
          }
          double sum_exp = 0.0;
          for (int j = 0; j < card; ++j) {
            sum_exp += std::exp(eta[static_cast<size_t>(j)] - max_eta);
          }
          sum_lse += max_eta + std::log(sum_exp);
        }
        const double z = rate_cap - sum_lse / (M_LN2 * t * card);
        acc.sum += z;
        acc.sum_sq += z * z;
        acc.samples += 1;
      }
      totals[static_cast<size_t>(w)] = acc;
    });

    double sum = 0.0;
    double sum_sq = 0.0;
    long n_samples = 0;
    for (const AmiWorkerTotals& w : totals) {
      sum += w.sum;
      sum_sq += w.sum_sq;
      n_samples += w.samples;
    }
    const double mean = sum / static_cast<double>(n_samples);
    const double var =
        std::max(0.0, sum_sq / static_cast<double>(n_samples) - mean * mean);
    const double se = std::sqrt(var / static_cast<double>(std::max(1L, n_samples - 1)));

    SnrPointResult res;
    res.snr_db = cfg.snr_db[si];
    res.estimate = mean;
    res.frames = n_samples;
    res.errors = n_samples;
    res.half_width = 1.959963984540054 * se;
    out.push_back(res);
  }
  return out;
}

PairwiseErrorResult estimate_pairwise_error(const GrassmannPoint& a, const GrassmannPoint& b,
                                            const NoiseModel& noise, int n_rx, long frames,
                                            std::uint64_t seed, int workers, bool parallel) {
  if (frames < 1 || workers < 1 || n_rx < 1) {
    throw std::invalid_argument("estimate_pairwise_error: bad counts");
  }
  const Constellation pair({a, b}, "pairwise");
  const FlatCodebook cb = FlatCodebook::from(pair);
  const double scale = std::sqrt(static_cast<double>(cb.t) / cb.m);
  const double sigma_v = std::sqrt(noise.sigma_v_sq);

  std::vector<long> errors(static_cast<size_t>(workers), 0);
  parallel_for(workers, parallel, [&](int w) {
    Rng rng(Rng::derive(seed, 0, static_cast<std::uint64_t>(w)));
    const long share = frames / workers + (w < frames % workers ? 1 : 0);
    std::vector<Cplx> hbuf(static_cast<size_t>(cb.m) * n_rx);
    std::vector<Cplx> ybuf(static_cast<size_t>(cb.t) * n_rx);
    long local_errors = 0;
    for (long f = 0; f < share; ++f) {
      for (int n = 0; n < n_rx; ++n) {
        for (int r = 0; r < cb.m; ++r) hbuf[static_cast<size_t>(n) * cb.m + r] = rng.cnormal();
      }
      for (int n = 0; n < n_rx; ++n) {
        for (int r = 0; r < cb.t; ++r) {
          ybuf[static_cast<size_t>(n) * cb.t + r] = sigma_v * rng.cnormal();
        }
      }
      for (int n = 0; n < n_rx; ++n) {
        Cplx* yc = &ybuf[static_cast<size_t>(n) * cb.t];
        for (int col = 0; col < cb.m; ++col) {
          const Cplx h = scale * hbuf[static_cast<size_t>(n) * cb.m + col];
          const Cplx* xc = cb.column(0, col);
          for (int r = 0; r < cb.t; ++r) yc[r] += xc[r] * h;
        }
      }
      local_errors += detect_dense_impl(cb, ybuf.data(), n_rx, nullptr) != 0 ? 1 : 0;
    }
    errors[static_cast<size_t>(w)] = local_errors;
  });

  PairwiseErrorResult res;
  res.frames = frames;
  for (long e : errors) res.errors += e;
  res.rate = static_cast<double>(res.errors) / static_cast<double>(frames);
  res.half_width = wilson_half_width(res.errors, frames);
  return res;
}

}  // namespace grasscode
