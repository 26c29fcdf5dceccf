#pragma once

#include <cstdint>
#include <stdexcept>

namespace grasscode {

/// Exact binomial coefficient; throws std::overflow_error if the value does
/// not fit in 64 bits.
std::uint64_t binomial_exact(int n, int k);

}  // namespace grasscode
