#pragma once

#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>


namespace grasscode {

namespace detail {

/// Ziggurat layer tables for the standard normal (256 layers). Built once at
/// startup from the published base-layer abscissa; the construction checks
/// itself (the top layer must close at zero).
struct NormalZiggurat {
  static constexpr int kLayers = 256;
  double x[kLayers + 1];  // layer boundaries, x[0] = r down to x[255] ~ 0
  double f[kLayers + 1];  // pdf values exp(-x^2/2)
  double base_width;      // v / f(r): effective width of the base layer
  double r;
  double inv_r;

  NormalZiggurat() {
    r = 3.6541528853610087963519472518;
    inv_r = 1.0 / r;
    const auto pdf = [](double t) { return std::exp(-0.5 * t * t); };
    // Base layer area: rectangle plus the tail mass beyond r.
    const double tail = std::sqrt(M_PI / 2.0) * std::erfc(r / std::sqrt(2.0));
    const double v = r * pdf(r) + tail;
    base_width = v / pdf(r);
    x[0] = r;
    f[0] = pdf(r);
    for (int i = 1; i < kLayers; ++i) {
      const double fi = f[i - 1] + v / x[i - 1];
      x[i] = fi < 1.0 ? std::sqrt(-2.0 * std::log(fi)) : 0.0;
      f[i] = fi;
    }
    x[kLayers] = 0.0;
    f[kLayers] = 1.0;
    assert(x[kLayers - 1] < 0.01);  // construction closed at the mode
  }
};

inline const NormalZiggurat& normal_ziggurat() {
  static const NormalZiggurat tables;
  return tables;
}

}  // namespace detail

/// Deterministic random stream: xoshiro256++ under an explicit ziggurat
/// Gaussian. Both are fully specified, so sequences reproduce across
/// platforms and standard libraries, and both are cheap enough for the
/// frame-level Monte Carlo loops.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 expansion of the seed into the four xoshiro words.
    std::uint64_t x = seed;
    for (int i = 0; i < 4; ++i) {
      x += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      state_[i] = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in the open interval (0, 1); never returns 0, so log() is safe.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  /// Standard real normal N(0, 1) via the 256-layer ziggurat; the tail
  /// beyond the base layer uses Marsaglia's exact exponential method.
  double normal() {
    const detail::NormalZiggurat& z = detail::normal_ziggurat();
    for (;;) {
      const std::uint64_t bits = next_u64();
      const int layer = static_cast<int>(bits & 0xFF);
      const double sign = (bits & 0x100) != 0 ? -1.0 : 1.0;
      const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
      const double width = layer == 0 ? z.base_width : z.x[layer - 1];
      const double cand = u * width;
      if (cand < z.x[layer]) return sign * cand;  // fully inside the density
      if (layer == 0) {
        // Tail sample beyond r.
        for (;;) {
          const double tx = -std::log(uniform()) * z.inv_r;
          const double ty = -std::log(uniform());
          if (ty + ty > tx * tx) return sign * (z.r + tx);
        }
      }
      const double fl = z.f[layer - 1];
      const double fh = z.f[layer];
      if (fl + uniform() * (fh - fl) < std::exp(-0.5 * cand * cand)) {
        return sign * cand;
      }
    }
  }

  /// Circularly symmetric complex normal CN(0, 1): two real normals
  /// scaled by 1/sqrt(2).
  std::complex<double> cnormal() {
    const double re = normal();
    const double im = normal();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

  /// splitmix64-style hash used to derive independent substreams from a
  /// master seed, e.g. per (snr index, worker index).
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix(mix(mix(seed) ^ a) ^ b);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t state_[4];
};

}  // namespace grasscode
