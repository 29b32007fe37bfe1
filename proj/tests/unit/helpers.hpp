#pragma once

#include <cstdint>
#include <random>

#include "tupi/types.hpp"

namespace testing {

inline tupi::Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                  double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  tupi::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

inline tupi::Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  return random_matrix(rng, n, 1, sd).col(0);
}

inline double max_abs(const tupi::Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Central differences of a scalar function of a vector.
template <typename F>
tupi::Vector numeric_gradient(F&& fn, const tupi::Vector& x, double h = 1e-5) {
  tupi::Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    tupi::Vector a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (fn(a) - fn(b)) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const tupi::Vector& analytic, const tupi::Vector& numeric) {
  return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-12);
}

}  // namespace testing
