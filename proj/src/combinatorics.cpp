#include "grasscode/combinatorics.hpp"

namespace grasscode {

std::uint64_t binomial_exact(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<unsigned>(n - k + i);
    acc /= static_cast<unsigned>(i);  // exact: prefix products are binomials
    if (acc > static_cast<unsigned __int128>(UINT64_MAX)) {
      throw std::overflow_error("binomial_exact: value exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace grasscode
