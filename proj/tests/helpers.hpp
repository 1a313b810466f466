#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "fic/rng.hpp"

namespace test_helpers {

// Well-conditioned random SPD matrix.
inline Eigen::MatrixXd random_spd(int dim, std::uint64_t seed, double ridge = 0.5) {
  fic::NormalStream ns(seed, 0);
  Eigen::MatrixXd A(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) A(r, c) = ns();
  return (A.transpose() * A) / dim + ridge * Eigen::MatrixXd::Identity(dim, dim);
}

inline Eigen::VectorXd random_vector(int dim, std::uint64_t seed, double scale = 1.0) {
  fic::NormalStream ns(seed, 1);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = scale * ns();
  return v;
}

// Random correlation matrix: standardized random SPD.
inline Eigen::MatrixXd random_correlation(int dim, std::uint64_t seed) {
  Eigen::MatrixXd S = random_spd(dim, seed, 1.0);
  Eigen::VectorXd d = S.diagonal().cwiseSqrt();
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) S(r, c) /= d(r) * d(c);
  for (int r = 0; r < dim; ++r) S(r, r) = 1.0;
  return S;
}

inline std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "fic_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string write_file(const std::string& name, const std::string& content) {
  const auto path = temp_dir() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace test_helpers
