#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pathflow/pathspace.hpp"

namespace pathflow {

/**
 * Brownian increments dW_l ~ N(0, dt I_k), l = 0..n-1, one row per step.
 */
class BrownianDriver {
 public:
  BrownianDriver(TimeGrid grid, NodeMatrix increments);

  const TimeGrid& grid() const noexcept { return grid_; }
  Eigen::Index noise_dim() const noexcept { return increments_.cols(); }
  const NodeMatrix& increments() const noexcept { return increments_; }
  auto increment(std::size_t l) const { return increments_.row(static_cast<Eigen::Index>(l)); }
  // W at the nodes, W(0) = 0; (n + 1) x k.
  NodeMatrix path() const;

  // Twice the step: each coarse increment is the floating-point sum of its two children.
  BrownianDriver coarsened() const;
  // Repeated coarsening down to `target` (n_steps must divide this grid's n_steps by a power of two).
  BrownianDriver coarsened_to(const TimeGrid& target) const;
  // Half the step by Brownian-bridge midpoints; children sum to the parent up to one rounding.
  BrownianDriver refined(std::uint64_t seed, std::uint64_t path_index) const;

 private:
  TimeGrid grid_;
  NodeMatrix increments_;
};

// Increments from the counter-based stream keyed by (seed, path_index, step, component).
BrownianDriver sample_brownian(const TimeGrid& grid, std::size_t k, std::uint64_t seed, std::uint64_t path_index);

/**
 * Path-dependent SDE dy = b(t, y_t) dt + sigma(t, y_t) dW in R^d.
 * Coefficients read the window y_[0,t] through a view and its time().
 */
struct SdeModel {
  std::string name;
  std::size_t dim = 1;
  std::size_t noise_dim = 1;
  Vec y0;
  std::function<Vec(const WindowView&)> drift;
  std::function<Mat(const WindowView&)> diffusion;
};

// Built-in models in dimension d = noise dimension:
//   "brownian"          b = 0, sigma = I
//   "window-mean"       b = -mean of the window nodes, sigma = I
//   "window-mean-mult"  b = -mean of the window nodes, sigma = diag(1/2 + sin(y)^2 / 2)
SdeModel make_sde(const std::string& name, std::size_t dim = 1, double y0 = 1.0);
bool is_sde_name(const std::string& name);

// Arithmetic mean of the window's node values.
Vec window_mean(const WindowView& w);

// Euler-Maruyama over the whole grid; (n + 1) x d.
NodeMatrix euler_pathdep(const SdeModel& model, const BrownianDriver& driver);
// Restarts from a window at t = start.t_index * dt (rows 0..t_index copied, the node at t is
// the window's terminal value) and steps on to T.
NodeMatrix euler_pathdep(const SdeModel& model, const BrownianDriver& driver, const WindowPath& start);

// Window view of rows 0..t_index of a full path.
WindowView path_window(const TimeGrid& grid, const NodeMatrix& path, std::size_t t_index);
// X(t) = L^t y_t.
ProductState lift_process(const TimeGrid& grid, const NodeMatrix& path, std::size_t t_index);

// dX = (A X + B(t, X)) dt + C(t, X) dW on R^m in mild form.
struct GroupSdeModel {
  Mat a;
  Vec x0;
  std::function<Vec(double, const Vec&)> drift;      // empty means zero
  std::function<Mat(double, const Vec&)> diffusion;  // empty means zero
};

// e^{t_l A} and e^{-t_l A} at every node of a grid.
class GroupPropagator {
 public:
  GroupPropagator(const Mat& a, const TimeGrid& grid);
  const TimeGrid& grid() const noexcept { return grid_; }
  const Mat& forward(std::size_t l) const { return forward_[l]; }
  const Mat& backward(std::size_t l) const { return backward_[l]; }

 private:
  TimeGrid grid_;
  std::vector<Mat> forward_;
  std::vector<Mat> backward_;
};

// X(t_l) = e^{t_l A}(x0 + I_l), I_{l+1} = I_l + e^{-t_l A}(B_l dt + C_l dW_l), starting
// from X(t_s) = x0 at s = start_index. Rows before start_index repeat x0.
NodeMatrix group_mild_process(const GroupSdeModel& model, const GroupPropagator& prop, const BrownianDriver& driver,
                              std::size_t start_index = 0);
NodeMatrix group_mild_process(const GroupSdeModel& model, const BrownianDriver& driver, std::size_t start_index = 0);

}  // namespace pathflow
