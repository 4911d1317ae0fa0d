#pragma once

#include <cstddef>

#include "pathflow/grid.hpp"

namespace pathflow {

inline constexpr double kDefaultTolE = 1e-9;
inline constexpr double kDefaultSlopeJumpBound = 1.0;

/**
 * Non-owning view of a path on [0, t] with t = t_index * dt.
 *
 * `values` holds rows 0..t_index (row t_index is the left limit at t);
 * `terminal` is the value at t itself, which may differ from the left limit.
 */
class WindowView {
 public:
  WindowView(const TimeGrid& grid, std::size_t t_index, Eigen::Map<const NodeMatrix> values,
             Eigen::Map<const Vec> terminal)
      : grid_(&grid), t_index_(t_index), values_(values), terminal_(terminal) {}

  const TimeGrid& grid() const noexcept { return *grid_; }
  std::size_t t_index() const noexcept { return t_index_; }
  double time() const noexcept { return grid_->node(t_index_); }
  Eigen::Index dim() const noexcept { return values_.cols(); }

  const Eigen::Map<const NodeMatrix>& values() const noexcept { return values_; }
  auto value(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }
  const Eigen::Map<const Vec>& terminal() const noexcept { return terminal_; }
  auto left_limit() const { return value(t_index_); }

 private:
  const TimeGrid* grid_;
  std::size_t t_index_;
  Eigen::Map<const NodeMatrix> values_;
  Eigen::Map<const Vec> terminal_;
};

// Owning element of C_t: continuous on [0, t) with one admissible jump at t.
struct WindowPath {
  TimeGrid grid;
  std::size_t t_index;
  NodeMatrix values;  // (t_index + 1) x d
  Vec terminal;       // d

  WindowPath(TimeGrid g, std::size_t k, NodeMatrix v, Vec term);
  // Continuous window: terminal equals the last row.
  static WindowPath continuous(TimeGrid g, NodeMatrix v);

  Eigen::Index dim() const noexcept { return values.cols(); }
  double time() const noexcept { return grid.node(t_index); }
  WindowView view() const;
};

/**
 * Element of E = R^d x C([-T, 0)).
 *
 * tail has one row per tail node r_j = -T + j*dt, j = 0..n. The last row
 * stores the left limit of x2 at 0; it is not part of x2's values on [-T, 0).
 */
struct ProductState {
  TimeGrid grid;
  Vec head;         // x1
  NodeMatrix tail;  // (n + 1) x d

  ProductState(TimeGrid g, Vec h, NodeMatrix t);
  static ProductState constant(TimeGrid g, const Vec& c);

  Eigen::Index dim() const noexcept { return head.size(); }
  auto tail_left_limit() const { return tail.row(tail.rows() - 1); }
  // Piecewise-linear value of x2 at r in [-T, 0].
  Vec tail_at(double r) const;
  bool finite() const noexcept { return head.allFinite() && tail.allFinite(); }
};

// A x = (0, x2'). head is always zero.
struct GeneratorImage {
  Vec head;
  NodeMatrix tail_derivative;
};

// L^t: C_t -> E.
ProductState lift(const WindowView& path, const TimeGrid& target);
ProductState lift(const WindowPath& path);
// In-place variant reusing the storage of `out` (grid must already match).
void lift_into(const WindowView& path, ProductState& out);

// M_t: E -> C_t.
WindowPath restrict_to(std::size_t t_index, const ProductState& x);

// e^{tA} with t = t_index * dt. Exact index shift.
ProductState semigroup_apply(std::size_t t_index, const ProductState& x);

bool in_tilde_E(const ProductState& x, double tol_e = kDefaultTolE);

// Largest change of the discrete slope of x2 between neighbouring cells,
// max_j |x2[j+1] - 2 x2[j] + x2[j-1]| / dr. Stays O(dr) for C^2 tails and
// grows like dr^{-1/2} for Brownian tails.
double slope_jump_statistic(const ProductState& x);

// Discrete D~ test: in_tilde_E plus slope_jump_statistic <= slope_jump_bound.
bool in_tilde_D(const ProductState& x, double tol_e = kDefaultTolE,
                double slope_jump_bound = kDefaultSlopeJumpBound);

// Throws DomainViolation when |head - tail_left_limit| > tol_e or the state is not finite.
GeneratorImage generator_apply(const ProductState& x, double tol_e = kDefaultTolE);

// Second-order finite-difference derivative of the tail, one-sided three-point at the ends.
NodeMatrix tail_derivative(const NodeMatrix& tail, double dr);

// Grid norms.
double sup_norm(const ProductState& x);
double tail_sup_distance(const NodeMatrix& a, const NodeMatrix& b);
// Discrete L2 distance on H = R^d x L2(-T, 0): |h1|^2 + trapezoid of |h2|^2.
double h_distance(const ProductState& a, const ProductState& b);

}  // namespace pathflow
