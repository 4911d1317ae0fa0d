#include "pathflow/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pathflow {
namespace {

std::span<const double> row_span(const NodeMatrix& m, Eigen::Index j) {
  return {m.data() + j * m.cols(), static_cast<std::size_t>(m.cols())};
}

std::span<const double> vec_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Position of the tail point r in index units, snapped to an integer when within rounding.
double tail_position(const TimeGrid& g, double r) {
  double pos = (r + g.horizon()) / g.dt();
  const double k = std::round(pos);
  if (std::abs(pos - k) < 1e-9) pos = k;
  return std::clamp(pos, 0.0, static_cast<double>(g.n_steps()));
}

Vec interpolate_row(const NodeMatrix& tail, double pos) {
  const auto last = tail.rows() - 1;
  auto i = static_cast<Eigen::Index>(std::floor(pos));
  if (i >= last) return tail.row(last).transpose();
  const double w = pos - static_cast<double>(i);
  if (w == 0.0) return tail.row(i).transpose();
  return ((1.0 - w) * tail.row(i) + w * tail.row(i + 1)).transpose();
}

class IntegralFunctional final : public PathFunctional {
 public:
  IntegralFunctional(std::string name, TwoPointFunction g) : name_(std::move(name)), g_(std::move(g)) {}

  std::string name() const override { return name_; }

  double eval(double t, const ProductState& x) const override {
    const TimeGrid& grid = x.grid;
    if (t <= 0.0) return 0.0;
    t = std::min(t, grid.horizon());
    const auto a = vec_span(x.head);
    const double pos = tail_position(grid, -t);
    const auto n = static_cast<Eigen::Index>(grid.n_steps());
    const auto j0 = static_cast<Eigen::Index>(std::ceil(pos));
    const double h = grid.dt();
    double acc = 0.0;
    for (Eigen::Index j = j0; j <= n; ++j) {
      const double w = (j == j0 || j == n) ? 0.5 * h : h;
      if (j0 == n) break;
      acc += w * g_.value(a, row_span(x.tail, j));
    }
    if (static_cast<double>(j0) > pos) {
      // Partial cell [-t, r_{j0}] with the tail interpolated at -t.
      const double len = (static_cast<double>(j0) - pos) * h;
      const Vec p = interpolate_row(x.tail, pos);
      acc += 0.5 * len * (g_.value(a, vec_span(p)) + g_.value(a, row_span(x.tail, j0)));
    }
    return acc;
  }

  FrechetBundle frechet(std::size_t t_index, const ProductState& x, BundleDetail detail) const override {
    const TimeGrid& grid = x.grid;
    if (t_index > grid.n_steps()) throw std::out_of_range("frechet: t_index beyond grid");
    const Eigen::Index d = x.dim();
    const auto du = static_cast<std::size_t>(d);
    const std::size_t n = grid.n_steps();
    const std::size_t j0 = n - t_index;
    const double h = grid.dt();
    const auto a = vec_span(x.head);

    FrechetBundle b;
    b.grad_head = Vec::Zero(d);
    b.hess_head = Mat::Zero(d, d);
    b.tail_support_begin = j0;
    if (detail == BundleDetail::full) b.grad_tail_density = NodeMatrix::Zero(x.tail.rows(), d);

    std::vector<double> g1(du), g2(du), g11(du * du);
    for (std::size_t j = j0; j <= n && j0 < n; ++j) {
      const double w = trapezoid_weight(j, j0, n, h);
      const auto bj = row_span(x.tail, static_cast<Eigen::Index>(j));
      b.value += w * g_.value(a, bj);
      g_.d1(a, bj, g1);
      g_.d11(a, bj, g11);
      b.grad_head += w * Eigen::Map<const Vec>(g1.data(), d);
      b.hess_head += w * Eigen::Map<const Mat>(g11.data(), d, d);
      if (detail == BundleDetail::full) {
        g_.d2(a, bj, g2);
        b.grad_tail_density.row(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::RowVectorXd>(g2.data(), d);
      }
    }
    b.hess_head = 0.5 * (b.hess_head + b.hess_head.transpose());
    b.extension_G = g_.value(a, a);
    return b;
  }

 private:
  std::string name_;
  TwoPointFunction g_;
};

class PointEvalFunctional final : public PathFunctional {
 public:
  PointEvalFunctional(std::string name, TwoPointFunction q, double t0)
      : name_(std::move(name)), q_(std::move(q)), t0_(t0) {}

  std::string name() const override { return name_; }

  double eval(double t, const ProductState& x) const override {
    if (!active(t, x.grid)) return 0.0;
    const Vec p = interpolate_row(x.tail, tail_position(x.grid, t0_ - t));
    return q_.value(vec_span(x.head), vec_span(p));
  }

  double eval_left(double t, const ProductState& x) const override {
    if (at_jump(t, x.grid)) return 0.0;
    return eval(t, x);
  }

  FrechetBundle frechet(std::size_t t_index, const ProductState& x, BundleDetail detail) const override {
    return bundle(t_index, x, detail, active(x.grid.node(t_index), x.grid));
  }

  FrechetBundle frechet_left(std::size_t t_index, const ProductState& x, BundleDetail detail) const override {
    const double t = x.grid.node(t_index);
    return bundle(t_index, x, detail, active(t, x.grid) && !at_jump(t, x.grid));
  }

  std::vector<double> jump_times() const override { return {t0_}; }

 private:
  bool active(double t, const TimeGrid& g) const { return t >= t0_ - 1e-12 * g.horizon(); }
  bool at_jump(double t, const TimeGrid& g) const { return std::abs(t - t0_) <= 1e-12 * g.horizon(); }

  FrechetBundle bundle(std::size_t t_index, const ProductState& x, BundleDetail detail, bool on) const {
    const TimeGrid& grid = x.grid;
    if (t_index > grid.n_steps()) throw std::out_of_range("frechet: t_index beyond grid");
    const Eigen::Index d = x.dim();
    const auto du = static_cast<std::size_t>(d);
    FrechetBundle b;
    b.grad_head = Vec::Zero(d);
    b.hess_head = Mat::Zero(d, d);
    b.tail_support_begin = grid.n_steps();
    if (detail == BundleDetail::full) b.grad_tail_density = NodeMatrix::Zero(x.tail.rows(), d);
    if (!on) return b;

    const std::size_t k0 = grid.require_index(t0_);
    const std::size_t node = grid.n_steps() - (t_index - k0);  // r = t0 - t
    const auto a = vec_span(x.head);
    const auto bj = row_span(x.tail, static_cast<Eigen::Index>(node));
    std::vector<double> g1(du), g2(du), g11(du * du);
    b.value = q_.value(a, bj);
    q_.d1(a, bj, g1);
    q_.d11(a, bj, g11);
    b.grad_head = Eigen::Map<const Vec>(g1.data(), d);
    b.hess_head = Eigen::Map<const Mat>(g11.data(), d, d);
    b.hess_head = 0.5 * (b.hess_head + b.hess_head.transpose());
    if (detail == BundleDetail::full) {
      q_.d2(a, bj, g2);
      b.tail_atoms.push_back({node, Eigen::Map<const Vec>(g2.data(), d)});
    }
    b.extension_G = 0.0;
    return b;
  }

  std::string name_;
  TwoPointFunction q_;
  double t0_;
};

class HeadFunctional final : public PathFunctional {
 public:
  HeadFunctional(std::string name, std::function<double(const Vec&)> phi, std::function<Vec(const Vec&)> dphi,
                 std::function<Mat(const Vec&)> d2phi)
      : name_(std::move(name)), phi_(std::move(phi)), dphi_(std::move(dphi)), d2phi_(std::move(d2phi)) {}

  std::string name() const override { return name_; }
  double eval(double, const ProductState& x) const override { return phi_(x.head); }

  FrechetBundle frechet(std::size_t, const ProductState& x, BundleDetail detail) const override {
    FrechetBundle b;
    b.value = phi_(x.head);
    b.grad_head = dphi_(x.head);
    b.hess_head = d2phi_(x.head);
    b.tail_support_begin = x.grid.n_steps();
    if (detail == BundleDetail::full) b.grad_tail_density = NodeMatrix::Zero(x.tail.rows(), x.dim());
    return b;
  }

 private:
  std::string name_;
  std::function<double(const Vec&)> phi_;
  std::function<Vec(const Vec&)> dphi_;
  std::function<Mat(const Vec&)> d2phi_;
};

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e;
  return s;
}

TwoPointFunction bilinear() {
  return {
      [](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
      },
      [](std::span<const double>, std::span<const double> b, std::span<double> out) {
        std::copy(b.begin(), b.end(), out.begin());
      },
      [](std::span<const double> a, std::span<const double>, std::span<double> out) {
        std::copy(a.begin(), a.end(), out.begin());
      },
      [](std::span<const double>, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      },
  };
}

TwoPointFunction sine_of_sums() {
  return {
      [](std::span<const double> a, std::span<const double> b) { return std::sin(sum(a) + sum(b)); },
      [](std::span<const double> a, std::span<const double> b, std::span<double> out) {
        std::fill(out.begin(), out.end(), std::cos(sum(a) + sum(b)));
      },
      [](std::span<const double> a, std::span<const double> b, std::span<double> out) {
        std::fill(out.begin(), out.end(), std::cos(sum(a) + sum(b)));
      },
      [](std::span<const double> a, std::span<const double> b, std::span<double> out) {
        std::fill(out.begin(), out.end(), -std::sin(sum(a) + sum(b)));
      },
  };
}

TwoPointFunction second_argument_sum() {
  return {
      [](std::span<const double>, std::span<const double> b) { return sum(b); },
      [](std::span<const double>, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      },
      [](std::span<const double>, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 1.0);
      },
      [](std::span<const double>, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      },
  };
}

}  // namespace

double FrechetBundle::pair(const Vec& h_head, const NodeMatrix& h_tail, double dr) const {
  double acc = grad_head.dot(h_head);
  if (grad_tail_density.size() > 0) {
    const auto n = static_cast<std::size_t>(grad_tail_density.rows()) - 1;
    for (std::size_t j = tail_support_begin; j <= n && tail_support_begin < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      acc += trapezoid_weight(j, tail_support_begin, n, dr) * grad_tail_density.row(jj).dot(h_tail.row(jj));
    }
  }
  for (const auto& atom : tail_atoms) acc += atom.weight.dot(h_tail.row(static_cast<Eigen::Index>(atom.node)).transpose());
  return acc;
}

FunctionalPtr integral_functional(std::string name, TwoPointFunction g) {
  return std::make_shared<IntegralFunctional>(std::move(name), std::move(g));
}

FunctionalPtr pointeval_functional(std::string name, TwoPointFunction q, double t0) {
  return std::make_shared<PointEvalFunctional>(std::move(name), std::move(q), t0);
}

FunctionalPtr head_functional(std::string name, std::function<double(const Vec&)> phi,
                              std::function<Vec(const Vec&)> dphi, std::function<Mat(const Vec&)> d2phi) {
  return std::make_shared<HeadFunctional>(std::move(name), std::move(phi), std::move(dphi), std::move(d2phi));
}

bool is_path_functional_name(const std::string& name) {
  return name == "integral:gbilinear" || name == "integral:gsin" || name == "integral:gsecond" ||
         name == "pointeval:qsecond";
}

FunctionalPtr make_functional(const std::string& name, double t0) {
  if (name == "integral:gbilinear") return integral_functional(name, bilinear());
  if (name == "integral:gsin") return integral_functional(name, sine_of_sums());
  if (name == "integral:gsecond") return integral_functional(name, second_argument_sum());
  if (name == "pointeval:qsecond") return pointeval_functional(name, second_argument_sum(), t0);
  throw std::invalid_argument("unknown functional: " + name);
}

double frechet_fd_check(const PathFunctional& f, std::size_t t_index, const ProductState& x, const ProductState& h,
                        double step, double hess_step) {
  if (!(step > 0.0) || !(hess_step > 0.0)) throw std::invalid_argument("frechet_fd_check: step must be positive");
  const double t = x.grid.node(t_index);
  for (double tj : f.jump_times()) {
    if (std::abs(tj - t) <= 1e-12 * x.grid.horizon()) {
      throw std::invalid_argument("frechet_fd_check: t is a jump time of " + f.name());
    }
  }
  const FrechetBundle b = f.frechet(t_index, x);
  auto shifted = [&](double eps, bool head_only) {
    ProductState y = x;
    y.head += eps * h.head;
    if (!head_only) y.tail += eps * h.tail;
    return f.eval(t, y);
  };
  const double grad = b.pair(h);
  const double grad_fd = (shifted(step, false) - shifted(-step, false)) / (2.0 * step);
  const double quad = h.head.dot(b.hess_head * h.head);
  auto second_difference = [&](double e) { return (shifted(e, true) - 2.0 * b.value + shifted(-e, true)) / (e * e); };
  // Richardson step on the second difference: O(hess_step^4).
  const double quad_fd = (4.0 * second_difference(0.5 * hess_step) - second_difference(hess_step)) / 3.0;
  const double e_grad = std::abs(grad - grad_fd) / (1.0 + std::abs(grad));
  const double e_hess = std::abs(quad - quad_fd) / (1.0 + std::abs(quad));
  const double e_value = std::abs(b.value - f.eval(t, x)) / (1.0 + std::abs(b.value));
  return std::max({e_grad, e_hess, e_value});
}

double cancellation_defect(const PathFunctional& f, std::size_t t_index, const ProductState& x, double h_t) {
  const double t = x.grid.node(t_index);
  const GeneratorImage ax = generator_apply(x);
  const FrechetBundle b = f.frechet(t_index, x);
  const double dF_dt = (f.eval(t + h_t, x) - f.eval(t - h_t, x)) / (2.0 * h_t);
  return dF_dt + b.pair(ax, x.grid.dt()) - b.extension_G;
}

}  // namespace pathflow
