#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pathflow/functionals.hpp"
#include "pathflow/group.hpp"
#include "pathflow/simulate.hpp"

namespace pathflow {

/**
 * Both sides of the Ito identity along one path:
 *   lhs = F(t, X(t)) - F(0, X0)
 *   rhs = int G + int <B, DF> + 1/2 int tr[C C* D^2F] + int <DF, C dW> + sum of jumps.
 * Lebesgue terms use the trapezoid rule on the grid, the stochastic term left-point
 * sums with the simulation's own increments.
 */
struct ItoLedger {
  double lhs = 0.0;
  double term_G = 0.0;
  double term_drift = 0.0;
  double term_trace = 0.0;
  double term_stoch = 0.0;
  double term_jumps = 0.0;
  double residual = 0.0;

  double rhs() const noexcept { return term_G + term_drift + term_trace + term_stoch + term_jumps; }
  // Sets residual = lhs - rhs.
  void close() noexcept { residual = lhs - rhs(); }
  bool finite() const noexcept;
};

// Simulates y with euler_pathdep and accounts for F along X(t) = L^t y_t over [0, T].
ItoLedger ito_ledger(const PathFunctional& f, const SdeModel& model, const BrownianDriver& driver);
// Same for an already simulated path y ((n + 1) x d) driven by `driver`.
ItoLedger ito_ledger(const PathFunctional& f, const SdeModel& model, const BrownianDriver& driver,
                     const NodeMatrix& y);

// Ledger along group_mild_process; the trace term uses the full m x m Hessian.
ItoLedger ito_ledger_group(const GroupFunctional& f, const GroupSdeModel& model, const BrownianDriver& driver);
ItoLedger ito_ledger_group(const GroupFunctional& f, const GroupSdeModel& model, const GroupPropagator& prop,
                           const BrownianDriver& driver);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
};
// Sample mean and standard error, summed in index order.
MonteCarloEstimate summarize(const std::vector<double>& samples);

using StatePayoff = std::function<double(const ProductState&)>;

// E[Phi(X^{t,x}(T))]: each path restarts the SDE from restrict(t, x). Throws DomainViolation for x outside E~.
MonteCarloEstimate feynman_kac(const StatePayoff& phi, const SdeModel& model, std::size_t t_index,
                               const ProductState& x, std::size_t paths, std::uint64_t seed, std::size_t workers = 1);

struct MartingaleCheck {
  MonteCarloEstimate drift;  // F(T, X(T)) - F(t0, x0)
  bool pass = false;         // |mean| <= 3 SE (or exactly zero)
};

// F is asserted to solve dF/dt + <Ax, DF> + <B, DF> + 1/2 tr[C C* D^2F] = 0; X starts from model.x0 at t0.
MartingaleCheck kolmogorov_group_martingale(const std::function<double(double, const Vec&)>& f,
                                            const GroupSdeModel& model, const TimeGrid& grid,
                                            std::size_t t0_index, std::size_t paths, std::uint64_t seed,
                                            std::size_t workers = 1);

struct ConvergenceConfig {
  std::string functional = "integral:gbilinear";
  std::string sde = "window-mean";
  double horizon = 1.0;
  std::vector<std::size_t> n_list{64, 128, 256, 512};
  std::size_t paths = 2000;
  std::uint64_t seed = 7;
  std::size_t workers = 1;
  double t0 = 0.5;
  double y0 = 1.0;
};

struct ConvergenceReport {
  std::vector<std::size_t> n_list;
  std::vector<double> rms;
  std::vector<double> max_abs;
  std::vector<ItoLedger> mean_terms;  // per-N averages of the ledger fields
  double slope = 0.0;                 // least-squares slope of log rms against log N
  double intercept = 0.0;
  bool monotone = true;  // rms strictly decreasing in N
  std::uint64_t seed = 0;
  std::size_t paths = 0;
};

// Rotation-group process used by the convergence study: x0 = (1, 1/2, 0, ...), B(t, x) = -x / 4, C = I.
GroupSdeModel default_group_model(const GroupFunctional& f);

// Same Brownian paths at every N: each path is sampled at the finest N and coarsened.
// Path functionals run over `sde`; group functionals over the rotation group with
// B(t, x) = -x / 4 and C = I.
ConvergenceReport convergence_study(const ConvergenceConfig& config);

// Least-squares fit of log(y) = intercept + slope log(x).
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

struct NamedTail {
  std::string name;
  ProductState state;
};
// errors[i][k] = sup-norm distance between J_{n_k} x2 and x2 for tails[i].
std::vector<std::vector<double>> mollifier_convergence(const std::vector<NamedTail>& tails,
                                                       const std::vector<std::size_t>& n_list);

struct YosidaRow {
  double n = 0.0;
  double distance = 0.0;  // ||J_n y - y|| in the discrete H norm
  double boundary = 0.0;  // |(J_n y)_1 - (J_n y)_2(0-)|
};
std::vector<YosidaRow> yosida_sweep(const ProductState& y, const std::vector<double>& n_list);

}  // namespace pathflow
