#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathflow/grid.hpp"

namespace pathflow {

// Probabilists' Gauss-Hermite rule: sum_k w_k f(z_k) ~ E f(Z), Z ~ N(0, 1).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to one
};
GaussHermiteRule gauss_hermite(std::size_t order);

// "poly:c_k,...,c_1,c_0" (coefficients from the highest degree down).
std::function<double(double)> parse_g_function(const std::string& spec);

struct FdSteps {
  double h_t = 1e-3;
  double h_x = 1e-3;
};

/**
 * Gaussian model on [0, T] with g_0 = 1 and continuous g_1..g_N.
 *
 * Sigma(t)_ij = int_t^T g_i g_j ds, and U~(t, x) = E f(x + Z) with
 * Z ~ N(0, Sigma(t)), evaluated by tensor Gauss-Hermite after Cholesky
 * whitening. U(t, x, psi) feeds U~ with the Stieltjes integrals of
 * g_j(. + t) against the path psi on [-T, 0] closed by the head x.
 */
class GaussianModel {
 public:
  GaussianModel(double horizon, std::vector<std::function<double(double)>> g, std::function<double(const Vec&)> f,
                std::size_t gh_order = 32, bool validate = true);

  // {"N":1, "g":["poly:1,0"], "f":"quad", "gh_order":32}.
  static GaussianModel from_json(const nlohmann::json& spec, double horizon);
  // "N=1;g1=poly:1,0;f=quad[;gh_order=32]".
  static GaussianModel from_string(const std::string& spec, double horizon);

  std::size_t n() const noexcept { return g_.size(); }
  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(g_.size() + 1); }
  double horizon() const noexcept { return horizon_; }
  std::size_t gh_order() const noexcept { return gh_order_; }

  // (g_0(t), ..., g_N(t)) with g_0 = 1.
  Vec g_values(double t) const;
  Mat sigma(double t) const;
  // Tabulates Sigma and its square root at the grid nodes; later lookups at those nodes hit the table.
  void cache_grid(const TimeGrid& grid);

  double terminal(const Vec& x) const { return f_(x); }
  double density(double t, const Vec& xi) const;
  double u_tilde(double t, const Vec& x) const;

  // (x, int g_1(. + t) dpsi, ..., int g_N(. + t) dpsi) by left-point increment sums,
  // plus the closing increment g_j(t) (x - psi(0-)) at r = 0.
  Vec path_coordinates(double t, double x, const TimeGrid& grid, const NodeMatrix& psi) const;
  double u_eval(double t, double x, const TimeGrid& grid, const NodeMatrix& psi) const;

  // |dU~/dt + 1/2 sum_ij g_i(t) g_j(t) d^2 U~/dx_i dx_j| by central differences.
  double pde_residual(double t, const Vec& x, FdSteps steps = {}) const;
  // A(U)(t, x, psi) = dU~/dt at the path coordinates.
  double a_operator(double t, double x, const TimeGrid& grid, const NodeMatrix& psi, double h_t = 1e-3) const;
  // A(U) + 1/2 d^2 U / dx^2 with the head derivative taken through u_eval.
  double prop_iv_residual(double t, double x, const TimeGrid& grid, const NodeMatrix& psi, FdSteps steps = {}) const;

  // M_{t_k} = U~(t_k, W_{t_k}, I_1(t_k), ...), I_j(t_k) = sum_{l<k} g_j(t_l) dW_l. dW has n_steps rows.
  Vec martingale_path(const TimeGrid& grid, const Vec& dw) const;

 private:
  Mat sqrt_sigma(double t) const;

  double horizon_;
  std::vector<std::function<double(double)>> g_;
  std::function<double(const Vec&)> f_;
  std::size_t gh_order_;
  Mat nodes_;  // whitened tensor nodes, one per row
  Vec weights_;
  std::map<double, Mat> root_table_;
};

}  // namespace pathflow
