#pragma once

#include <stdexcept>
#include <string>

namespace grasscode {

/// Requested configuration cannot be satisfied (e.g. more codewords than
/// reusable sparsity patterns).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// A constellation that is supposed to have at most one nonzero per row
/// does not.
class NotSparseError : public std::runtime_error {
 public:
  explicit NotSparseError(const std::string& what) : std::runtime_error(what) {}
};

/// Pair of points represents the same subspace; pairwise error analysis is
/// undefined for it.
class DegeneratePairError : public std::runtime_error {
 public:
  explicit DegeneratePairError(const std::string& what) : std::runtime_error(what) {}
};

/// Constellation constructor exists only for specific (T, M) combinations.
class UnsupportedConfigError : public std::invalid_argument {
 public:
  explicit UnsupportedConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// File could not be parsed or failed validation on load.
class LoadError : public std::runtime_error {
 public:
  explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grasscode
