#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

namespace pathflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// One row per grid node, one column per component. Row-major so that the
// first k+1 rows (a window) are a contiguous block.
using NodeMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * Uniform discretization of [0, T].
 *
 * The same grid indexes the tail interval [-T, 0]: tail node j sits at
 * r_j = -T + j*dt, so time shifts by grid multiples are pure index shifts.
 */
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t n_steps);

  double horizon() const noexcept { return horizon_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  double dt() const noexcept { return dt_; }

  // node(n_steps) is exactly T.
  double node(std::size_t k) const noexcept;
  // Tail node r_j = -T + j*dt; tail_node(n_steps) is exactly 0.
  double tail_node(std::size_t j) const noexcept;

  // Index k with |node(k) - t| <= tol * dt, if any.
  std::optional<std::size_t> index_of(double t, double tol = 1e-9) const noexcept;
  // Same as index_of but throws std::invalid_argument for off-grid times.
  std::size_t require_index(double t) const;

  // Grid with half the step, or (when n_steps is even) twice the step.
  TimeGrid refined() const { return TimeGrid(horizon_, 2 * n_steps_); }
  TimeGrid coarsened() const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.horizon_ == b.horizon_ && a.n_steps_ == b.n_steps_;
  }

 private:
  double horizon_;
  std::size_t n_steps_;
  double dt_;
};

// Trapezoid weights for nodes [begin, end] of a grid with spacing h.
double trapezoid_weight(std::size_t j, std::size_t begin, std::size_t end, double h) noexcept;

}  // namespace pathflow
