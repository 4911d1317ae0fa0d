#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pathflow/pathspace.hpp"

namespace pathflow {

// Point mass of D_{x2}F at a tail node.
struct TailAtom {
  std::size_t node;
  Vec weight;
};

/**
 * First and second Frechet data of F(t, .) at a state.
 *
 * D_{x2}F is represented as a density on the tail nodes
 * [tail_support_begin, n] (integrated by trapezoid) plus point masses.
 * Only the head block of D^2F is kept; it is the only block the trace term
 * of the Ito formula sees.
 */
struct FrechetBundle {
  double value = 0.0;
  Vec grad_head;
  NodeMatrix grad_tail_density;
  std::size_t tail_support_begin = 0;
  std::vector<TailAtom> tail_atoms;
  Mat hess_head;
  double extension_G = 0.0;

  // <h, DF(t, x)> for a direction h = (h1, h2) on the same grid.
  double pair(const Vec& h_head, const NodeMatrix& h_tail, double dr) const;
  double pair(const ProductState& h) const { return pair(h.head, h.tail, h.grid.dt()); }
  // <A x, DF(t, x)>, with the generator image's head being zero.
  double pair(const GeneratorImage& ax, double dr) const { return pair(ax.head, ax.tail_derivative, dr); }
};

enum class BundleDetail {
  full,       // everything, including the tail gradient
  head_only,  // value, grad_head, hess_head and G; the tail gradient is left empty
};

/**
 * F(t, x) = f(t, M_t x) for a path-dependent functional f.
 *
 * eval() accepts any t in [0, T] (tails are read piecewise-linearly), which is
 * what time finite differences need. frechet() is defined on grid times only.
 * Functionals with jumps are right-continuous in t; the *_left variants give
 * the value just before a jump time.
 */
class PathFunctional {
 public:
  virtual ~PathFunctional() = default;

  virtual std::string name() const = 0;
  virtual double eval(double t, const ProductState& x) const = 0;
  virtual FrechetBundle frechet(std::size_t t_index, const ProductState& x,
                                BundleDetail detail = BundleDetail::full) const = 0;

  virtual double eval_left(double t, const ProductState& x) const { return eval(t, x); }
  virtual FrechetBundle frechet_left(std::size_t t_index, const ProductState& x,
                                     BundleDetail detail = BundleDetail::full) const {
    return frechet(t_index, x, detail);
  }
  // Sorted jump times of t -> F(t, x); each must be a grid node.
  virtual std::vector<double> jump_times() const { return {}; }
};

using FunctionalPtr = std::shared_ptr<const PathFunctional>;

// Closures over R^d x R^d. Arguments are the two points; outputs are written
// into a caller-provided buffer (length d, or d*d row-major for Hessians).
using ScalarFn2 = std::function<double(std::span<const double>, std::span<const double>)>;
using VectorFn2 = std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;

struct TwoPointFunction {
  ScalarFn2 value;
  VectorFn2 d1;   // gradient in the first argument
  VectorFn2 d2;   // gradient in the second argument
  VectorFn2 d11;  // Hessian in the first argument
};

// F(t, x) = int_{-t}^0 g(x1, x2(r)) dr, extension G(t, x) = g(x1, x1).
FunctionalPtr integral_functional(std::string name, TwoPointFunction g);

// F(t, x) = q(x1, x2(t0 - t)) for t >= t0, zero before; G = 0; jump at t0.
FunctionalPtr pointeval_functional(std::string name, TwoPointFunction q, double t0);

// F(t, x) = phi(x1); G = 0. Used as a terminal payoff.
FunctionalPtr head_functional(std::string name, std::function<double(const Vec&)> phi,
                              std::function<Vec(const Vec&)> dphi, std::function<Mat(const Vec&)> d2phi);

// Built-in functionals: "integral:gbilinear" (g = a.b), "integral:gsin"
// (g = sin(sum a + sum b)), "integral:gsecond" (g = sum b) and
// "pointeval:qsecond" (q = sum b, needs t0).
FunctionalPtr make_functional(const std::string& name, double t0 = 0.5);
bool is_path_functional_name(const std::string& name);

// Central-difference validation of a bundle along direction h:
// max over {gradient pairing, head-Hessian quadratic form} of
// |analytic - FD| / (1 + |analytic|). The Hessian probe is a Richardson-extrapolated
// second difference with steps hess_step and hess_step / 2.
// Throws std::invalid_argument at a jump time of the functional.
double frechet_fd_check(const PathFunctional& f, std::size_t t_index, const ProductState& x, const ProductState& h,
                        double step = 1e-5, double hess_step = 1e-2);

// [dF/dt (central, step h_t) + <A x, DF>] - G at a grid time; x must be in D(A).
double cancellation_defect(const PathFunctional& f, std::size_t t_index, const ProductState& x, double h_t = 1e-4);

}  // namespace pathflow
