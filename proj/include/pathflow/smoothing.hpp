#pragma once

#include <cstddef>
#include <vector>

#include "pathflow/pathspace.hpp"

namespace pathflow {

/**
 * The C-infinity bump rho(x) = C exp(-1/(1 - x^2)) on (-1, 1) and its
 * rescalings rho_n(x) = n rho(n x).
 *
 * Convolutions against rho_n are evaluated in the kernel variable u in [-1, 1]
 * with a fixed trapezoid rule whose weights are renormalized so that the
 * discrete kernel mass is exactly one.
 */
class MollifierFamily {
 public:
  explicit MollifierFamily(std::size_t quad_nodes = 401);

  // rho itself.
  double base(double x) const noexcept;
  double eval(double n, double x) const noexcept { return n * base(n * x); }
  double normalization() const noexcept { return norm_; }

  std::size_t quad_nodes() const noexcept { return nodes_.size(); }
  // Kernel-variable nodes and weights w_k with sum_k w_k = 1 (rho already folded in).
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  double norm_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

const MollifierFamily& default_mollifier();

// tau_eps: [-T, 0] -> [-T + eps, -eps], clamping outside the middle band.
struct TruncationMap {
  double horizon;
  double eps;
  TruncationMap(double horizon, double eps);
  double operator()(double r) const noexcept;
};

/**
 * J_n on the tail grid: head unchanged, tail replaced by
 * (J_n phi)(r) = int rho_n(s_n(r) - y) phi(y) dy with s_n = rho_{2n} * tau_{1/n}.
 * The map s_n is state independent and tabulated once per (grid, n).
 */
class SmoothingOperator {
 public:
  SmoothingOperator(const TimeGrid& grid, std::size_t n, const MollifierFamily& family = default_mollifier());

  std::size_t order() const noexcept { return n_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  // s_n at each tail node.
  const std::vector<double>& centers() const noexcept { return centers_; }

  NodeMatrix apply_tail(const NodeMatrix& tail) const;
  ProductState apply(const ProductState& x) const;

 private:
  TimeGrid grid_;
  std::size_t n_;
  const MollifierFamily* family_;
  std::vector<double> centers_;
};

ProductState smooth_state(std::size_t n, const ProductState& x);

/**
 * Yosida approximation J_n y = n (n - A)^{-1} y for the delay generator:
 *   (J_n y)_1 = y1,
 *   (J_n y)_2(r) = e^{n r} y1 + n int_r^0 e^{n (r - s)} y2(s) ds.
 * The integral is exact for the piecewise-linear interpolant of y2, and the
 * result satisfies (J_n y)_1 = (J_n y)_2(0-) by construction.
 */
ProductState yosida_resolvent(double n, const ProductState& y);

}  // namespace pathflow
