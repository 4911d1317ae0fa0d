#include "pathflow/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "pathflow/errors.hpp"
#include "pathflow/group.hpp"
#include "pathflow/rng.hpp"

namespace pathflow {
namespace {

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

BrownianDriver::BrownianDriver(TimeGrid grid, NodeMatrix increments)
    : grid_(std::move(grid)), increments_(std::move(increments)) {
  if (increments_.rows() != static_cast<Eigen::Index>(grid_.n_steps())) {
    throw GridMismatch("BrownianDriver: need one increment row per step");
  }
}

NodeMatrix BrownianDriver::path() const {
  NodeMatrix w(increments_.rows() + 1, increments_.cols());
  w.row(0).setZero();
  for (Eigen::Index l = 0; l < increments_.rows(); ++l) w.row(l + 1) = w.row(l) + increments_.row(l);
  return w;
}

BrownianDriver BrownianDriver::coarsened() const {
  const TimeGrid coarse = grid_.coarsened();
  NodeMatrix inc(static_cast<Eigen::Index>(coarse.n_steps()), increments_.cols());
  for (Eigen::Index l = 0; l < inc.rows(); ++l) inc.row(l) = increments_.row(2 * l) + increments_.row(2 * l + 1);
  return BrownianDriver(coarse, std::move(inc));
}

BrownianDriver BrownianDriver::coarsened_to(const TimeGrid& target) const {
  if (target.horizon() != grid_.horizon() || target.n_steps() > grid_.n_steps()) {
    throw GridMismatch("coarsened_to: target is not a coarsening of this grid");
  }
  BrownianDriver d = *this;
  while (d.grid().n_steps() > target.n_steps()) d = d.coarsened();
  if (!(d.grid() == target)) throw GridMismatch("coarsened_to: step ratio is not a power of two");
  return d;
}

BrownianDriver BrownianDriver::refined(std::uint64_t seed, std::uint64_t path_index) const {
  const TimeGrid fine = grid_.refined();
  // Each refinement level draws from its own key so that refining twice never reuses numbers.
  const CounterNormal rng(splitmix64(seed ^ splitmix64(fine.n_steps())));
  const double half_sd = 0.5 * std::sqrt(grid_.dt());
  NodeMatrix inc(static_cast<Eigen::Index>(fine.n_steps()), increments_.cols());
  for (Eigen::Index l = 0; l < increments_.rows(); ++l) {
    for (Eigen::Index c = 0; c < increments_.cols(); ++c) {
      const double z = rng.normal(path_index, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(c));
      const double first = 0.5 * increments_(l, c) + half_sd * z;
      inc(2 * l, c) = first;
      inc(2 * l + 1, c) = increments_(l, c) - first;
    }
  }
  return BrownianDriver(fine, std::move(inc));
}

BrownianDriver sample_brownian(const TimeGrid& grid, std::size_t k, std::uint64_t seed, std::uint64_t path_index) {
  const CounterNormal rng(seed);
  const double sd = std::sqrt(grid.dt());
  NodeMatrix inc(static_cast<Eigen::Index>(grid.n_steps()), static_cast<Eigen::Index>(k));
  for (Eigen::Index l = 0; l < inc.rows(); ++l) {
    for (Eigen::Index c = 0; c < inc.cols(); ++c) {
      inc(l, c) = sd * rng.normal(path_index, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(c));
    }
  }
  return BrownianDriver(grid, std::move(inc));
}

Vec window_mean(const WindowView& w) { return w.values().colwise().mean().transpose(); }

bool is_sde_name(const std::string& name) {
  return name == "brownian" || name == "window-mean" || name == "window-mean-mult";
}

SdeModel make_sde(const std::string& name, std::size_t dim, double y0) {
  SdeModel m;
  m.name = name;
  m.dim = dim;
  m.noise_dim = dim;
  m.y0 = Vec::Constant(static_cast<Eigen::Index>(dim), y0);
  const auto d = static_cast<Eigen::Index>(dim);
  if (name == "brownian") {
    m.drift = [d](const WindowView&) -> Vec { return Vec::Zero(d); };
    m.diffusion = [d](const WindowView&) -> Mat { return Mat::Identity(d, d); };
  } else if (name == "window-mean") {
    m.drift = [](const WindowView& w) -> Vec { return -window_mean(w); };
    m.diffusion = [d](const WindowView&) -> Mat { return Mat::Identity(d, d); };
  } else if (name == "window-mean-mult") {
    m.drift = [](const WindowView& w) -> Vec { return -window_mean(w); };
    m.diffusion = [](const WindowView& w) -> Mat {
      const Vec s = w.terminal().array().sin();
      return (0.5 + 0.5 * s.array().square()).matrix().asDiagonal();
    };
  } else {
    throw std::invalid_argument("unknown SDE model: " + name);
  }
  return m;
}

WindowView path_window(const TimeGrid& grid, const NodeMatrix& path, std::size_t t_index) {
  const Eigen::Index d = path.cols();
  const auto k = static_cast<Eigen::Index>(t_index);
  return WindowView(grid, t_index, Eigen::Map<const NodeMatrix>(path.data(), k + 1, d),
                    Eigen::Map<const Vec>(path.data() + k * d, d));
}

namespace {

void euler_steps(const SdeModel& model, const BrownianDriver& driver, NodeMatrix& y, std::size_t from) {
  const TimeGrid& grid = driver.grid();
  const double dt = grid.dt();
  for (std::size_t l = from; l < grid.n_steps(); ++l) {
    const WindowView w = path_window(grid, y, l);
    const Vec b = model.drift(w);
    const Mat s = model.diffusion(w);
    const auto li = static_cast<Eigen::Index>(l);
    y.row(li + 1) = y.row(li) + dt * b.transpose() + (s * driver.increment(l).transpose()).transpose();
    if (!y.row(li + 1).allFinite()) throw NonFinite("euler_pathdep: state left the finite doubles", l + 1);
  }
}

}  // namespace

NodeMatrix euler_pathdep(const SdeModel& model, const BrownianDriver& driver) {
  if (driver.noise_dim() != static_cast<Eigen::Index>(model.noise_dim)) {
    throw GridMismatch("euler_pathdep: driver noise dimension does not match the model");
  }
  NodeMatrix y(static_cast<Eigen::Index>(driver.grid().n_steps() + 1), static_cast<Eigen::Index>(model.dim));
  y.row(0) = model.y0.transpose();
  euler_steps(model, driver, y, 0);
  return y;
}

NodeMatrix euler_pathdep(const SdeModel& model, const BrownianDriver& driver, const WindowPath& start) {
  if (!(start.grid == driver.grid())) throw GridMismatch("euler_pathdep: start window is on another grid");
  if (start.dim() != static_cast<Eigen::Index>(model.dim)) throw GridMismatch("euler_pathdep: dimension mismatch");
  NodeMatrix y(static_cast<Eigen::Index>(driver.grid().n_steps() + 1), start.dim());
  const auto k = static_cast<Eigen::Index>(start.t_index);
  y.topRows(k + 1) = start.values;
  y.row(k) = start.terminal.transpose();
  euler_steps(model, driver, y, start.t_index);
  return y;
}

ProductState lift_process(const TimeGrid& grid, const NodeMatrix& path, std::size_t t_index) {
  if (t_index > grid.n_steps()) throw std::out_of_range("lift_process: t_index beyond grid");
  return lift(path_window(grid, path, t_index), grid);
}

GroupPropagator::GroupPropagator(const Mat& a, const TimeGrid& grid) : grid_(grid) {
  forward_.reserve(grid.n_steps() + 1);
  backward_.reserve(grid.n_steps() + 1);
  for (std::size_t l = 0; l <= grid.n_steps(); ++l) {
    forward_.push_back(matrix_exp(a, grid.node(l)));
    backward_.push_back(matrix_exp(a, -grid.node(l)));
  }
}

NodeMatrix group_mild_process(const GroupSdeModel& model, const GroupPropagator& prop, const BrownianDriver& driver,
                              std::size_t start_index) {
  const TimeGrid& grid = driver.grid();
  if (!(prop.grid() == grid)) throw GridMismatch("group_mild_process: propagator is on another grid");
  if (start_index > grid.n_steps()) throw std::out_of_range("group_mild_process: start beyond grid");
  const Eigen::Index m = model.x0.size();
  const double dt = grid.dt();
  NodeMatrix x(static_cast<Eigen::Index>(grid.n_steps() + 1), m);
  for (std::size_t l = 0; l <= start_index; ++l) x.row(static_cast<Eigen::Index>(l)) = model.x0.transpose();
  // Shifting by e^{-t_s A} makes the accumulated integral start at t_s.
  Vec base = prop.backward(start_index) * model.x0;
  Vec acc = Vec::Zero(m);
  Vec xl = model.x0;
  for (std::size_t l = start_index; l < grid.n_steps(); ++l) {
    const double t = grid.node(l);
    Vec kick = Vec::Zero(m);
    if (model.drift) kick += dt * model.drift(t, xl);
    if (model.diffusion) kick += model.diffusion(t, xl) * driver.increment(l).transpose();
    acc += prop.backward(l) * kick;
    xl = prop.forward(l + 1) * (base + acc);
    if (!xl.allFinite()) throw NonFinite("group_mild_process: state left the finite doubles", l + 1);
    x.row(static_cast<Eigen::Index>(l + 1)) = xl.transpose();
  }
  return x;
}

NodeMatrix group_mild_process(const GroupSdeModel& model, const BrownianDriver& driver, std::size_t start_index) {
  return group_mild_process(model, GroupPropagator(model.a, driver.grid()), driver, start_index);
}

}  // namespace pathflow
