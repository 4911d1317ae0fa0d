#pragma once

#include <cmath>
#include <random>

#include "pathflow/pathspace.hpp"

namespace testing {

using namespace pathflow;

inline NodeMatrix random_rows(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  NodeMatrix m(rows, d);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = n(rng);
  return m;
}

// Arbitrary state: head unrelated to the tail.
inline ProductState random_state(std::mt19937_64& rng, const TimeGrid& g, Eigen::Index d) {
  const NodeMatrix tail = random_rows(rng, static_cast<Eigen::Index>(g.n_steps() + 1), d);
  return ProductState(g, random_rows(rng, 1, d).row(0).transpose(), tail);
}

// x2(r) = a + b sin(w r + p) per component, head = x2(0-): a smooth element of D~.
inline ProductState smooth_state(std::mt19937_64& rng, const TimeGrid& g, Eigen::Index d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  NodeMatrix tail(static_cast<Eigen::Index>(g.n_steps() + 1), d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double a = u(rng), b = 0.5 * u(rng), w = 0.5 + 0.5 * (u(rng) + 1.0), p = 3.0 * u(rng);
    for (std::size_t j = 0; j <= g.n_steps(); ++j) {
      tail(static_cast<Eigen::Index>(j), c) = a + b * std::sin(w * g.tail_node(j) + p);
    }
  }
  const Vec head = tail.row(tail.rows() - 1).transpose();
  return ProductState(g, head, tail);
}

// Random walk path with N(0, dt) steps.
inline NodeMatrix random_walk(std::mt19937_64& rng, const TimeGrid& g, std::size_t rows, Eigen::Index d) {
  std::normal_distribution<double> n(0.0, std::sqrt(g.dt()));
  NodeMatrix m(static_cast<Eigen::Index>(rows), d);
  m.row(0).setZero();
  for (Eigen::Index i = 1; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = m(i - 1, j) + n(rng);
  return m;
}

}  // namespace testing
