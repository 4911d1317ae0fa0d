#include "pathflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pathflow/errors.hpp"
#include "pathflow/parallel.hpp"
#include "pathflow/smoothing.hpp"

namespace pathflow {

bool ItoLedger::finite() const noexcept {
  return std::isfinite(lhs) && std::isfinite(term_G) && std::isfinite(term_drift) && std::isfinite(term_trace) &&
         std::isfinite(term_stoch) && std::isfinite(term_jumps) && std::isfinite(residual);
}

namespace {

// Integrand pieces of the Lebesgue terms at one node.
struct NodeTerms {
  double g = 0.0;
  double drift = 0.0;
  double trace = 0.0;
};

NodeTerms node_terms(double g, const Vec& grad, const Mat& hess, const Vec& b, const Mat& s) {
  return {g, grad.dot(b), 0.5 * (s * s.transpose()).cwiseProduct(hess).sum()};
}

void add_cell(ItoLedger& led, const NodeTerms& left, const NodeTerms& right, double dt) {
  led.term_G += 0.5 * dt * (left.g + right.g);
  led.term_drift += 0.5 * dt * (left.drift + right.drift);
  led.term_trace += 0.5 * dt * (left.trace + right.trace);
}

}  // namespace

ItoLedger ito_ledger(const PathFunctional& f, const SdeModel& model, const BrownianDriver& driver) {
  return ito_ledger(f, model, driver, euler_pathdep(model, driver));
}

ItoLedger ito_ledger(const PathFunctional& f, const SdeModel& model, const BrownianDriver& driver,
                     const NodeMatrix& y) {
  const TimeGrid& grid = driver.grid();
  const std::size_t n = grid.n_steps();
  if (y.rows() != static_cast<Eigen::Index>(n + 1)) throw GridMismatch("ito_ledger: path does not match driver grid");
  std::vector<bool> is_jump(n + 1, false);
  for (double tj : f.jump_times()) {
    const std::size_t k = grid.require_index(tj);
    if (k > 0) is_jump[k] = true;
  }
  const double dt = grid.dt();
  ItoLedger led;
  ProductState x = lift_process(grid, y, 0);
  NodeTerms prev;
  double first_value = 0.0;
  double last_value = 0.0;
  for (std::size_t l = 0; l <= n; ++l) {
    const WindowView w = path_window(grid, y, l);
    if (l > 0) lift_into(w, x);
    const Vec b = model.drift(w);
    const Mat s = model.diffusion(w);
    const FrechetBundle now = f.frechet(l, x, BundleDetail::head_only);
    if (l == 0) first_value = now.value;
    if (l > 0) {
      if (is_jump[l]) {
        const FrechetBundle before = f.frechet_left(l, x, BundleDetail::head_only);
        add_cell(led, prev, node_terms(before.extension_G, before.grad_head, before.hess_head, b, s), dt);
        led.term_jumps += now.value - before.value;
      } else {
        add_cell(led, prev, node_terms(now.extension_G, now.grad_head, now.hess_head, b, s), dt);
      }
    }
    if (l < n) led.term_stoch += now.grad_head.dot(s * driver.increment(l).transpose());
    prev = node_terms(now.extension_G, now.grad_head, now.hess_head, b, s);
    last_value = now.value;
  }
  led.lhs = last_value - first_value;
  led.close();
  return led;
}

ItoLedger ito_ledger_group(const GroupFunctional& f, const GroupSdeModel& model, const BrownianDriver& driver) {
  return ito_ledger_group(f, model, GroupPropagator(model.a, driver.grid()), driver);
}

ItoLedger ito_ledger_group(const GroupFunctional& f, const GroupSdeModel& model, const GroupPropagator& prop,
                           const BrownianDriver& driver) {
  if ((model.a - f.generator()).cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("ito_ledger_group: process and functional use different generators");
  }
  const TimeGrid& grid = driver.grid();
  const std::size_t n = grid.n_steps();
  const double dt = grid.dt();
  const Eigen::Index m = model.x0.size();
  const NodeMatrix xs = group_mild_process(model, prop, driver);
  ItoLedger led;
  NodeTerms prev;
  double first_value = 0.0;
  double last_value = 0.0;
  for (std::size_t l = 0; l <= n; ++l) {
    const double t = grid.node(l);
    const Vec x = xs.row(static_cast<Eigen::Index>(l)).transpose();
    const GroupBundle bd = f.bundle(t, x);
    const Vec b = model.drift ? model.drift(t, x) : Vec::Zero(m);
    const Mat c = model.diffusion ? model.diffusion(t, x) : Mat::Zero(m, driver.noise_dim());
    const NodeTerms now = node_terms(bd.extension_G, bd.grad, bd.hess, b, c);
    if (l == 0) first_value = bd.value;
    if (l > 0) add_cell(led, prev, now, dt);
    if (l < n) led.term_stoch += bd.grad.dot(c * driver.increment(l).transpose());
    prev = now;
    last_value = bd.value;
  }
  led.lhs = last_value - first_value;
  led.close();
  return led;
}

MonteCarloEstimate summarize(const std::vector<double>& samples) {
  MonteCarloEstimate est;
  est.paths = samples.size();
  if (samples.empty()) return est;
  double sum = 0.0;
  for (double v : samples) sum += v;
  est.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - est.mean) * (v - est.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return est;
}

MonteCarloEstimate feynman_kac(const StatePayoff& phi, const SdeModel& model, std::size_t t_index,
                               const ProductState& x, std::size_t paths, std::uint64_t seed, std::size_t workers) {
  if (!in_tilde_E(x)) throw DomainViolation("feynman_kac: initial state is not in E~ (head differs from x2(0-))");
  if (paths == 0) throw std::invalid_argument("feynman_kac: need at least one path");
  const TimeGrid& grid = x.grid;
  const WindowPath start = restrict_to(t_index, x);
  const auto samples = parallel_map(paths, workers, [&](std::size_t p) {
    const BrownianDriver driver = sample_brownian(grid, model.noise_dim, seed, p);
    const NodeMatrix y = euler_pathdep(model, driver, start);
    return phi(lift_process(grid, y, grid.n_steps()));
  });
  return summarize(samples);
}

MartingaleCheck kolmogorov_group_martingale(const std::function<double(double, const Vec&)>& f,
                                            const GroupSdeModel& model, const TimeGrid& grid,
                                            std::size_t t0_index, std::size_t paths, std::uint64_t seed,
                                            std::size_t workers) {
  if (paths == 0) throw std::invalid_argument("kolmogorov_group_martingale: need at least one path");
  const GroupPropagator prop(model.a, grid);
  const auto noise = static_cast<std::size_t>(model.diffusion ? model.diffusion(grid.node(t0_index), model.x0).cols()
                                                              : model.x0.size());
  const double start = f(grid.node(t0_index), model.x0);
  const auto samples = parallel_map(paths, workers, [&](std::size_t p) {
    const BrownianDriver driver = sample_brownian(grid, noise, seed, p);
    const NodeMatrix xs = group_mild_process(model, prop, driver, t0_index);
    const Vec xt = xs.row(xs.rows() - 1).transpose();
    return f(grid.horizon(), xt) - start;
  });
  MartingaleCheck check;
  check.drift = summarize(samples);
  check.pass = std::abs(check.drift.mean) <= 3.0 * check.drift.std_error;
  return check;
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_fit: need two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

GroupSdeModel default_group_model(const GroupFunctional& f) {
  GroupSdeModel model;
  model.a = f.generator();
  model.x0 = Vec::Zero(f.dim());
  model.x0[0] = 1.0;
  if (model.x0.size() > 1) model.x0[1] = 0.5;
  model.drift = [](double, const Vec& x) -> Vec { return -0.25 * x; };
  model.diffusion = [](double, const Vec& x) -> Mat { return Mat::Identity(x.size(), x.size()); };
  return model;
}

ConvergenceReport convergence_study(const ConvergenceConfig& config) {
  if (config.n_list.size() < 2) throw std::invalid_argument("convergence_study: need at least two grid sizes");
  if (!std::is_sorted(config.n_list.begin(), config.n_list.end())) {
    throw std::invalid_argument("convergence_study: N list must be ascending");
  }
  if (config.paths == 0) throw std::invalid_argument("convergence_study: need at least one path");
  const std::size_t levels = config.n_list.size();
  const TimeGrid finest(config.horizon, config.n_list.back());
  std::vector<TimeGrid> grids;
  for (std::size_t n : config.n_list) grids.emplace_back(config.horizon, n);

  const bool group = is_group_functional_name(config.functional);
  using PerPath = std::vector<ItoLedger>;
  std::vector<PerPath> ledgers;
  if (group) {
    const GroupFunctionalPtr f = make_group_functional(config.functional);
    const GroupSdeModel model = default_group_model(*f);
    std::vector<GroupPropagator> props;
    for (const auto& g : grids) props.emplace_back(model.a, g);
    ledgers = parallel_map(config.paths, config.workers, [&](std::size_t p) {
      PerPath out(levels);
      const BrownianDriver fine = sample_brownian(finest, static_cast<std::size_t>(f->dim()), config.seed, p);
      for (std::size_t i = 0; i < levels; ++i) {
        out[i] = ito_ledger_group(*f, model, props[i], fine.coarsened_to(grids[i]));
      }
      return out;
    });
  } else {
    const FunctionalPtr f = make_functional(config.functional, config.t0);
    const SdeModel model = make_sde(config.sde, 1, config.y0);
    ledgers = parallel_map(config.paths, config.workers, [&](std::size_t p) {
      PerPath out(levels);
      const BrownianDriver fine = sample_brownian(finest, model.noise_dim, config.seed, p);
      for (std::size_t i = 0; i < levels; ++i) out[i] = ito_ledger(*f, model, fine.coarsened_to(grids[i]));
      return out;
    });
  }

  ConvergenceReport rep;
  rep.n_list = config.n_list;
  rep.seed = config.seed;
  rep.paths = config.paths;
  rep.rms.assign(levels, 0.0);
  rep.max_abs.assign(levels, 0.0);
  rep.mean_terms.assign(levels, ItoLedger{});
  const double inv_m = 1.0 / static_cast<double>(config.paths);
  for (std::size_t p = 0; p < config.paths; ++p) {
    for (std::size_t i = 0; i < levels; ++i) {
      const ItoLedger& l = ledgers[p][i];
      rep.rms[i] += l.residual * l.residual;
      rep.max_abs[i] = std::max(rep.max_abs[i], std::abs(l.residual));
      ItoLedger& m = rep.mean_terms[i];
      m.lhs += inv_m * l.lhs;
      m.term_G += inv_m * l.term_G;
      m.term_drift += inv_m * l.term_drift;
      m.term_trace += inv_m * l.term_trace;
      m.term_stoch += inv_m * l.term_stoch;
      m.term_jumps += inv_m * l.term_jumps;
      m.residual += inv_m * l.residual;
    }
  }
  for (auto& r : rep.rms) r = std::sqrt(r * inv_m);
  for (std::size_t i = 1; i < levels; ++i) rep.monotone = rep.monotone && rep.rms[i] < rep.rms[i - 1];
  std::vector<double> ns(config.n_list.begin(), config.n_list.end());
  if (std::all_of(rep.rms.begin(), rep.rms.end(), [](double r) { return r > 0.0; })) {
    std::tie(rep.slope, rep.intercept) = loglog_fit(ns, rep.rms);
  } else {
    rep.slope = std::nan("");
    rep.intercept = std::nan("");
  }
  return rep;
}

std::vector<std::vector<double>> mollifier_convergence(const std::vector<NamedTail>& tails,
                                                       const std::vector<std::size_t>& n_list) {
  std::vector<std::vector<double>> table;
  for (const auto& t : tails) {
    std::vector<double> row;
    for (std::size_t n : n_list) {
      const SmoothingOperator op(t.state.grid, n);
      row.push_back(tail_sup_distance(op.apply_tail(t.state.tail), t.state.tail));
    }
    table.push_back(std::move(row));
  }
  return table;
}

std::vector<YosidaRow> yosida_sweep(const ProductState& y, const std::vector<double>& n_list) {
  std::vector<YosidaRow> rows;
  for (double n : n_list) {
    const ProductState j = yosida_resolvent(n, y);
    rows.push_back({n, h_distance(j, y), (j.head - j.tail_left_limit().transpose()).cwiseAbs().maxCoeff()});
  }
  return rows;
}

}  // namespace pathflow
