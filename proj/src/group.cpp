#include "pathflow/group.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace pathflow {

Mat matrix_exp(const Mat& a, double t) {
  if (a.rows() != a.cols()) throw std::invalid_argument("matrix_exp: matrix must be square");
  if (t == 0.0) return Mat::Identity(a.rows(), a.cols());
  return Mat(t * a).exp();
}

GroupFunctional::GroupFunctional(std::string name, Mat a, SmoothScalar f0, TimeSmoothScalar h0, std::size_t panels)
    : name_(std::move(name)), a_(std::move(a)), f0_(std::move(f0)), h0_(std::move(h0)), panels_(panels) {
  if (a_.rows() != a_.cols() || a_.rows() == 0) throw std::invalid_argument("GroupFunctional: A must be square");
  if (panels_ == 0) throw std::invalid_argument("GroupFunctional: need at least one Simpson panel");
}

double GroupFunctional::eval(double t, const Vec& x) const {
  const Mat e = matrix_exp(a_, -t);
  double value = f0_.value(e * x);
  if (t > 0.0) {
    const std::size_t m = 2 * panels_;
    const double h = t / static_cast<double>(m);
    const Mat step = matrix_exp(a_, -h);
    Vec z = x;  // e^{-(t - s_i) A} x, walking i down from m
    for (std::size_t i = m + 1; i-- > 0;) {
      const double w = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      value += (h / 3.0) * w * h0_.value(h * static_cast<double>(i), z);
      if (i > 0) z = step * z;
    }
  }
  return value;
}

GroupBundle GroupFunctional::bundle(double t, const Vec& x) const {
  const Eigen::Index m_dim = a_.rows();
  const Mat e = matrix_exp(a_, -t);
  const Vec y = e * x;
  GroupBundle b;
  b.value = f0_.value(y);
  b.grad = e.transpose() * f0_.grad(y);
  b.hess = e.transpose() * f0_.hess(y) * e;
  if (t > 0.0) {
    const std::size_t m = 2 * panels_;
    const double h = t / static_cast<double>(m);
    const Mat step = matrix_exp(a_, -h);
    Mat r = Mat::Identity(m_dim, m_dim);
    for (std::size_t i = m + 1; i-- > 0;) {
      const double w = (h / 3.0) * ((i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
      const double s = h * static_cast<double>(i);
      const Vec z = r * x;
      b.value += w * h0_.value(s, z);
      b.grad += w * (r.transpose() * h0_.grad(s, z));
      b.hess += w * (r.transpose() * h0_.hess(s, z) * r);
      if (i > 0) r = step * r;
    }
  }
  b.hess = 0.5 * (b.hess + b.hess.transpose());
  b.extension_G = h0_.value(t, x);
  return b;
}

Mat rotation_generator() {
  Mat a(2, 2);
  a << 0.0, -1.0, 1.0, 0.0;
  return a;
}

namespace {

SmoothScalar norm_squared() {
  return {[](const Vec& x) { return x.squaredNorm(); }, [](const Vec& x) -> Vec { return 2.0 * x; },
          [](const Vec& x) -> Mat { return 2.0 * Mat::Identity(x.size(), x.size()); }};
}

SmoothScalar zero_scalar() {
  return {[](const Vec&) { return 0.0; }, [](const Vec& x) -> Vec { return Vec::Zero(x.size()); },
          [](const Vec& x) -> Mat { return Mat::Zero(x.size(), x.size()); }};
}

TimeSmoothScalar autonomous(SmoothScalar f) {
  return {[v = f.value](double, const Vec& x) { return v(x); }, [g = f.grad](double, const Vec& x) { return g(x); },
          [h = f.hess](double, const Vec& x) { return h(x); }};
}

// F0(x) = sin(x0) + x0 x1 / 2 + x1^2 / 4.
SmoothScalar generic_f0() {
  return {
      [](const Vec& x) { return std::sin(x[0]) + 0.5 * x[0] * x[1] + 0.25 * x[1] * x[1]; },
      [](const Vec& x) -> Vec {
        Vec g(2);
        g << std::cos(x[0]) + 0.5 * x[1], 0.5 * x[0] + 0.5 * x[1];
        return g;
      },
      [](const Vec& x) -> Mat {
        Mat h(2, 2);
        h << -std::sin(x[0]), 0.5, 0.5, 0.5;
        return h;
      },
  };
}

// H0(s, x) = cos(s) x0 x1 / 2 + x1 / 5 + cos(x0) / 4.
TimeSmoothScalar generic_h0() {
  return {
      [](double s, const Vec& x) { return 0.5 * std::cos(s) * x[0] * x[1] + 0.2 * x[1] + 0.25 * std::cos(x[0]); },
      [](double s, const Vec& x) -> Vec {
        Vec g(2);
        g << 0.5 * std::cos(s) * x[1] - 0.25 * std::sin(x[0]), 0.5 * std::cos(s) * x[0] + 0.2;
        return g;
      },
      [](double s, const Vec& x) -> Mat {
        Mat h(2, 2);
        const double c = 0.5 * std::cos(s);
        h << -0.25 * std::cos(x[0]), c, c, 0.0;
        return h;
      },
  };
}

}  // namespace

bool is_group_functional_name(const std::string& name) {
  return name == "group:rotation" || name == "group:invariant" || name == "group:normsq";
}

GroupFunctionalPtr make_group_functional(const std::string& name) {
  if (name == "group:rotation") {
    return std::make_shared<GroupFunctional>(name, rotation_generator(), generic_f0(), generic_h0());
  }
  if (name == "group:invariant") {
    return std::make_shared<GroupFunctional>(name, rotation_generator(), norm_squared(), autonomous(zero_scalar()));
  }
  if (name == "group:normsq") {
    return std::make_shared<GroupFunctional>(name, rotation_generator(), zero_scalar(), autonomous(norm_squared()));
  }
  throw std::invalid_argument("unknown group functional: " + name);
}

double group_fd_check(const GroupFunctional& f, double t, const Vec& x, const Vec& h, double step, double hess_step) {
  if (!(step > 0.0) || !(hess_step > 0.0)) throw std::invalid_argument("group_fd_check: step must be positive");
  const GroupBundle b = f.bundle(t, x);
  const double grad = b.grad.dot(h);
  const double grad_fd = (f.eval(t, x + step * h) - f.eval(t, x - step * h)) / (2.0 * step);
  const double quad = h.dot(b.hess * h);
  auto second_difference = [&](double e) {
    return (f.eval(t, x + e * h) - 2.0 * b.value + f.eval(t, x - e * h)) / (e * e);
  };
  const double quad_fd = (4.0 * second_difference(0.5 * hess_step) - second_difference(hess_step)) / 3.0;
  const double e_grad = std::abs(grad - grad_fd) / (1.0 + std::abs(grad));
  const double e_hess = std::abs(quad - quad_fd) / (1.0 + std::abs(quad));
  const double e_value = std::abs(b.value - f.eval(t, x)) / (1.0 + std::abs(b.value));
  return std::max({e_grad, e_hess, e_value});
}

double group_cancellation_defect(const GroupFunctional& f, double t, const Vec& x, double h_t) {
  const GroupBundle b = f.bundle(t, x);
  const double dF_dt = (f.eval(t + h_t, x) - f.eval(t - h_t, x)) / (2.0 * h_t);
  return dF_dt + b.grad.dot(f.generator() * x) - b.extension_G;
}

}  // namespace pathflow
