#include "pathflow/pathspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pathflow/errors.hpp"

namespace pathflow {

WindowPath::WindowPath(TimeGrid g, std::size_t k, NodeMatrix v, Vec term)
    : grid(g), t_index(k), values(std::move(v)), terminal(std::move(term)) {
  if (k > grid.n_steps()) throw std::invalid_argument("WindowPath: t_index beyond grid");
  if (values.rows() != static_cast<Eigen::Index>(k + 1)) {
    throw std::invalid_argument("WindowPath: values must have t_index + 1 rows");
  }
  if (terminal.size() != values.cols()) {
    throw std::invalid_argument("WindowPath: terminal dimension mismatch");
  }
  if (!values.allFinite() || !terminal.allFinite()) {
    throw std::invalid_argument("WindowPath: non-finite entries");
  }
}

WindowPath WindowPath::continuous(TimeGrid g, NodeMatrix v) {
  const auto k = static_cast<std::size_t>(v.rows()) - 1;
  Vec term = v.row(v.rows() - 1).transpose();
  return WindowPath(g, k, std::move(v), std::move(term));
}

WindowView WindowPath::view() const {
  return WindowView(grid, t_index, Eigen::Map<const NodeMatrix>(values.data(), values.rows(), values.cols()),
                    Eigen::Map<const Vec>(terminal.data(), terminal.size()));
}

ProductState::ProductState(TimeGrid g, Vec h, NodeMatrix t)
    : grid(g), head(std::move(h)), tail(std::move(t)) {
  if (tail.rows() != static_cast<Eigen::Index>(grid.n_steps() + 1)) {
    throw GridMismatch("ProductState: tail must have n_steps + 1 rows");
  }
  if (tail.cols() != head.size()) {
    throw std::invalid_argument("ProductState: head/tail dimension mismatch");
  }
}

ProductState ProductState::constant(TimeGrid g, const Vec& c) {
  NodeMatrix tail(static_cast<Eigen::Index>(g.n_steps() + 1), c.size());
  tail.rowwise() = c.transpose();
  return ProductState(g, c, std::move(tail));
}

Vec ProductState::tail_at(double r) const {
  const double n = static_cast<double>(grid.n_steps());
  double pos = (r + grid.horizon()) / grid.dt();
  pos = std::clamp(pos, 0.0, n);
  auto j = static_cast<Eigen::Index>(std::floor(pos));
  if (j >= tail.rows() - 1) return tail.row(tail.rows() - 1).transpose();
  const double w = pos - static_cast<double>(j);
  if (w == 0.0) return tail.row(j).transpose();
  return ((1.0 - w) * tail.row(j) + w * tail.row(j + 1)).transpose();
}

void lift_into(const WindowView& path, ProductState& out) {
  const TimeGrid& g = out.grid;
  if (!(path.grid() == g)) throw GridMismatch("lift: window grid differs from target grid");
  if (path.dim() != out.dim()) throw std::invalid_argument("lift: dimension mismatch");
  const auto n = static_cast<Eigen::Index>(g.n_steps());
  const auto k = static_cast<Eigen::Index>(path.t_index());
  out.head = path.terminal();
  // r in [-T, -t): gamma(0); r in [-t, 0): gamma(t + r); row n: gamma(t-).
  if (n - k > 0) out.tail.topRows(n - k).rowwise() = path.value(0);
  out.tail.bottomRows(k + 1) = path.values();
}

ProductState lift(const WindowView& path, const TimeGrid& target) {
  ProductState out(target, Vec::Zero(path.dim()),
                   NodeMatrix::Zero(static_cast<Eigen::Index>(target.n_steps() + 1), path.dim()));
  lift_into(path, out);
  return out;
}

ProductState lift(const WindowPath& path) { return lift(path.view(), path.grid); }

WindowPath restrict_to(std::size_t t_index, const ProductState& x) {
  const std::size_t n = x.grid.n_steps();
  if (t_index > n) throw std::out_of_range("restrict: t_index beyond grid");
  const auto k = static_cast<Eigen::Index>(t_index);
  NodeMatrix values = x.tail.bottomRows(k + 1);
  return WindowPath(x.grid, t_index, std::move(values), x.head);
}

ProductState semigroup_apply(std::size_t t_index, const ProductState& x) {
  const std::size_t n = x.grid.n_steps();
  if (t_index > n) throw std::out_of_range("semigroup_apply: shift beyond horizon");
  if (t_index == 0) return x;
  const auto k = static_cast<Eigen::Index>(t_index);
  const auto rows = static_cast<Eigen::Index>(n + 1);
  NodeMatrix tail(rows, x.dim());
  // r in [-T, -t): x2(r + t); r in [-t, 0]: x1.
  if (rows - 1 - k > 0) tail.topRows(rows - 1 - k) = x.tail.middleRows(k, rows - 1 - k);
  tail.bottomRows(k + 1).rowwise() = x.head.transpose();
  return ProductState(x.grid, x.head, std::move(tail));
}

bool in_tilde_E(const ProductState& x, double tol_e) {
  if (!x.finite()) return false;
  return (x.head.transpose() - x.tail_left_limit()).lpNorm<Eigen::Infinity>() <= tol_e;
}

double slope_jump_statistic(const ProductState& x) {
  const Eigen::Index rows = x.tail.rows();
  double worst = 0.0;
  for (Eigen::Index j = 1; j + 1 < rows; ++j) {
    const double s = (x.tail.row(j + 1) - 2.0 * x.tail.row(j) + x.tail.row(j - 1)).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, s);
  }
  return worst / x.grid.dt();
}

bool in_tilde_D(const ProductState& x, double tol_e, double slope_jump_bound) {
  return in_tilde_E(x, tol_e) && slope_jump_statistic(x) <= slope_jump_bound;
}

NodeMatrix tail_derivative(const NodeMatrix& tail, double dr) {
  const Eigen::Index rows = tail.rows();
  NodeMatrix d(rows, tail.cols());
  if (rows < 3) {
    d.rowwise() = (tail.row(rows - 1) - tail.row(0)) / (dr * static_cast<double>(rows - 1));
    return d;
  }
  const double inv2h = 0.5 / dr;
  for (Eigen::Index j = 1; j + 1 < rows; ++j) d.row(j) = (tail.row(j + 1) - tail.row(j - 1)) * inv2h;
  d.row(0) = (-3.0 * tail.row(0) + 4.0 * tail.row(1) - tail.row(2)) * inv2h;
  d.row(rows - 1) = (3.0 * tail.row(rows - 1) - 4.0 * tail.row(rows - 2) + tail.row(rows - 3)) * inv2h;
  return d;
}

GeneratorImage generator_apply(const ProductState& x, double tol_e) {
  if (!x.finite()) throw DomainViolation("generator_apply: state is not finite");
  const double gap = (x.head.transpose() - x.tail_left_limit()).lpNorm<Eigen::Infinity>();
  if (gap > tol_e) {
    throw DomainViolation("generator_apply: head differs from tail left limit by " + std::to_string(gap));
  }
  return GeneratorImage{Vec::Zero(x.dim()), tail_derivative(x.tail, x.grid.dt())};
}

double sup_norm(const ProductState& x) {
  return std::max(x.head.lpNorm<Eigen::Infinity>(), x.tail.lpNorm<Eigen::Infinity>());
}

double tail_sup_distance(const NodeMatrix& a, const NodeMatrix& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

double h_distance(const ProductState& a, const ProductState& b) {
  if (!(a.grid == b.grid)) throw GridMismatch("h_distance: grids differ");
  const std::size_t n = a.grid.n_steps();
  double acc = (a.head - b.head).squaredNorm();
  for (std::size_t j = 0; j <= n; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    acc += trapezoid_weight(j, 0, n, a.grid.dt()) * (a.tail.row(jj) - b.tail.row(jj)).squaredNorm();
  }
  return std::sqrt(acc);
}

}  // namespace pathflow
