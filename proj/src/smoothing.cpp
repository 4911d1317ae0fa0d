#include "pathflow/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pathflow/quadrature.hpp"

namespace pathflow {
namespace {

double bump_unnormalized(double x) noexcept {
  const double s = 1.0 - x * x;
  return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

}  // namespace

MollifierFamily::MollifierFamily(std::size_t quad_nodes) {
  if (quad_nodes < 3) throw std::invalid_argument("MollifierFamily: need at least 3 quadrature nodes");
  norm_ = 1.0 / adaptive_simpson(bump_unnormalized, -1.0, 1.0, 1e-15);
  nodes_.resize(quad_nodes);
  weights_.resize(quad_nodes);
  const double h = 2.0 / static_cast<double>(quad_nodes - 1);
  for (std::size_t k = 0; k < quad_nodes; ++k) {
    nodes_[k] = -1.0 + h * static_cast<double>(k);
    weights_[k] = h * base(nodes_[k]);  // rho vanishes at +-1, so trapezoid end weights do not matter
  }
  const double mass = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  for (auto& w : weights_) w /= mass;
}

double MollifierFamily::base(double x) const noexcept { return norm_ * bump_unnormalized(x); }

const MollifierFamily& default_mollifier() {
  static const MollifierFamily family;
  return family;
}

TruncationMap::TruncationMap(double horizon_, double eps_) : horizon(horizon_), eps(eps_) {
  if (!(eps > 0.0) || !(eps < 0.5 * horizon)) {
    throw std::invalid_argument("TruncationMap: eps must lie in (0, T/2)");
  }
}

double TruncationMap::operator()(double r) const noexcept { return std::clamp(r, -horizon + eps, -eps); }

SmoothingOperator::SmoothingOperator(const TimeGrid& grid, std::size_t n, const MollifierFamily& family)
    : grid_(grid), n_(n), family_(&family) {
  const double nn = static_cast<double>(n);
  if (n < 2 || !(1.0 / nn < 0.5 * grid.horizon())) {
    throw std::invalid_argument("SmoothingOperator: need n >= 2 and 1/n < T/2");
  }
  const TruncationMap tau(grid.horizon(), 1.0 / nn);
  const auto& u = family.nodes();
  const auto& w = family.weights();
  centers_.resize(grid.n_steps() + 1);
  for (std::size_t j = 0; j <= grid.n_steps(); ++j) {
    const double r = grid.tail_node(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) acc += w[k] * tau(r - u[k] / (2.0 * nn));
    centers_[j] = acc;
  }
}

NodeMatrix SmoothingOperator::apply_tail(const NodeMatrix& tail) const {
  if (tail.rows() != static_cast<Eigen::Index>(grid_.n_steps() + 1)) {
    throw std::invalid_argument("SmoothingOperator: tail length does not match grid");
  }
  const double nn = static_cast<double>(n_);
  const double T = grid_.horizon();
  const double inv_dr = 1.0 / grid_.dt();
  const auto last = tail.rows() - 1;
  const auto& u = family_->nodes();
  const auto& w = family_->weights();
  NodeMatrix out = NodeMatrix::Zero(tail.rows(), tail.cols());
  for (Eigen::Index j = 0; j < tail.rows(); ++j) {
    const double center = centers_[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (w[k] == 0.0) continue;
      // Piecewise-linear value of the tail at y = center - u/n (always inside [-T, 0]).
      const double pos = std::clamp((center - u[k] / nn + T) * inv_dr, 0.0, static_cast<double>(last));
      auto i = static_cast<Eigen::Index>(pos);
      if (i >= last) i = last - 1;
      const double frac = pos - static_cast<double>(i);
      out.row(j) += w[k] * ((1.0 - frac) * tail.row(i) + frac * tail.row(i + 1));
    }
  }
  return out;
}

ProductState SmoothingOperator::apply(const ProductState& x) const {
  if (!(x.grid == grid_)) throw std::invalid_argument("SmoothingOperator: grid mismatch");
  return ProductState(x.grid, x.head, apply_tail(x.tail));
}

ProductState smooth_state(std::size_t n, const ProductState& x) { return SmoothingOperator(x.grid, n).apply(x); }

ProductState yosida_resolvent(double n, const ProductState& y) {
  if (!(n > 0.0)) throw std::invalid_argument("yosida_resolvent: n must be positive");
  const std::size_t steps = y.grid.n_steps();
  const double h = y.grid.dt();
  const double nh = n * h;
  const double decay = std::exp(-nh);
  const double e0 = -std::expm1(-nh) / n;               // int_0^h e^{-n s} ds
  const double e1 = (-std::expm1(-nh) - nh * decay) / (n * n);  // int_0^h s e^{-n s} ds

  NodeMatrix tail(y.tail.rows(), y.tail.cols());
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(y.dim());  // int_{r_j}^0 e^{n (r_j - s)} y2(s) ds
  tail.row(static_cast<Eigen::Index>(steps)) = y.head.transpose();
  for (std::size_t jj = steps; jj-- > 0;) {
    const auto j = static_cast<Eigen::Index>(jj);
    const auto a = y.tail.row(j);
    const auto b = y.tail.row(j + 1);
    acc = decay * acc + e0 * a + (e1 / h) * (b - a);
    tail.row(j) = std::exp(n * y.grid.tail_node(jj)) * y.head.transpose() + n * acc;
  }
  return ProductState(y.grid, y.head, std::move(tail));
}

}  // namespace pathflow
