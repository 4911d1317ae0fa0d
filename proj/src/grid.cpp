#include "pathflow/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pathflow {

TimeGrid::TimeGrid(double horizon, std::size_t n_steps)
    : horizon_(horizon), n_steps_(n_steps), dt_(0.0) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
  }
  if (n_steps == 0) {
    throw std::invalid_argument("TimeGrid: n_steps must be positive");
  }
  dt_ = horizon / static_cast<double>(n_steps);
}

double TimeGrid::node(std::size_t k) const noexcept {
  if (k >= n_steps_) return k == n_steps_ ? horizon_ : static_cast<double>(k) * dt_;
  return static_cast<double>(k) * dt_;
}

double TimeGrid::tail_node(std::size_t j) const noexcept {
  if (j >= n_steps_) return 0.0;
  if (j == 0) return -horizon_;
  // Measured from the right end so that r_j = -(T - t_j) mirrors node(n - j).
  return -static_cast<double>(n_steps_ - j) * dt_;
}

std::optional<std::size_t> TimeGrid::index_of(double t, double tol) const noexcept {
  if (!std::isfinite(t)) return std::nullopt;
  const double k = std::round(t / dt_);
  if (k < 0.0 || k > static_cast<double>(n_steps_)) return std::nullopt;
  const auto idx = static_cast<std::size_t>(k);
  if (std::abs(node(idx) - t) > tol * dt_) return std::nullopt;
  return idx;
}

std::size_t TimeGrid::require_index(double t) const {
  auto idx = index_of(t);
  if (!idx) {
    throw std::invalid_argument("time " + std::to_string(t) + " is not a grid node");
  }
  return *idx;
}

TimeGrid TimeGrid::coarsened() const {
  if (n_steps_ % 2 != 0) {
    throw std::invalid_argument("TimeGrid::coarsened: n_steps must be even");
  }
  return TimeGrid(horizon_, n_steps_ / 2);
}

double trapezoid_weight(std::size_t j, std::size_t begin, std::size_t end, double h) noexcept {
  if (j < begin || j > end || begin == end) return 0.0;
  return (j == begin || j == end) ? 0.5 * h : h;
}

}  // namespace pathflow
