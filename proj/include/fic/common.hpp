#pragma once

#include <stdexcept>
#include <string>

namespace fic {

inline constexpr const char* kVersion = "0.1.0";

// Malformed inputs: bad roles, bad config documents, dimension mismatches.
struct validation_error : std::runtime_error {
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: rank-deficient designs, non-SPD matrices, non-finite results.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Smallest/largest eigenvalue ratio below this marks a moment matrix rank deficient.
inline constexpr double kRankTol = 1e-10;

// Ratio below this (but above kRankTol) flags near-singular moments in reports.
inline constexpr double kNearSingularTol = 1e-8;

}  // namespace fic
