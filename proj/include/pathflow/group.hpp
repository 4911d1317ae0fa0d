#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "pathflow/grid.hpp"

namespace pathflow {

// exp(t A) by scaling and squaring with Pade approximants.
Mat matrix_exp(const Mat& a, double t = 1.0);

struct SmoothScalar {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
};

struct TimeSmoothScalar {
  std::function<double(double, const Vec&)> value;
  std::function<Vec(double, const Vec&)> grad;
  std::function<Mat(double, const Vec&)> hess;
};

struct GroupBundle {
  double value = 0.0;
  Vec grad;
  Mat hess;
  double extension_G = 0.0;
};

/**
 * F(t, x) = F0(e^{-tA} x) + int_0^t H0(s, e^{-(t-s)A} x) ds on R^m.
 *
 * With A generating a group, dF/dt + <Ax, DF> = H0 pointwise. The time
 * integral uses composite Simpson with a fixed number of panels so F stays a
 * smooth function of t.
 */
class GroupFunctional {
 public:
  GroupFunctional(std::string name, Mat a, SmoothScalar f0, TimeSmoothScalar h0, std::size_t panels = 32);

  const std::string& name() const noexcept { return name_; }
  const Mat& generator() const noexcept { return a_; }
  Eigen::Index dim() const noexcept { return a_.rows(); }

  double eval(double t, const Vec& x) const;
  GroupBundle bundle(double t, const Vec& x) const;
  double extension(double t, const Vec& x) const { return h0_.value(t, x); }

 private:
  std::string name_;
  Mat a_;
  SmoothScalar f0_;
  TimeSmoothScalar h0_;
  std::size_t panels_;
};

using GroupFunctionalPtr = std::shared_ptr<const GroupFunctional>;

// The plane rotation generator [[0, -1], [1, 0]].
Mat rotation_generator();

// "group:rotation" (generic smooth F0 and H0), "group:invariant" (F0 = |x|^2,
// H0 = 0) and "group:normsq" (F0 = 0, H0 = |x|^2), all with the rotation generator.
GroupFunctionalPtr make_group_functional(const std::string& name);
bool is_group_functional_name(const std::string& name);

// Same error measure as frechet_fd_check, for the full gradient and Hessian.
double group_fd_check(const GroupFunctional& f, double t, const Vec& x, const Vec& h, double step = 1e-5,
                      double hess_step = 1e-3);

// [dF/dt (central, step h_t) + <Ax, DF>] - H0(t, x).
double group_cancellation_defect(const GroupFunctional& f, double t, const Vec& x, double h_t = 1e-4);

}  // namespace pathflow
