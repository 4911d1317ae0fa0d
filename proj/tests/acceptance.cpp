// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pathflow/cli.hpp"
#include "pathflow/gausskolm.hpp"
#include "pathflow/parallel.hpp"
#include "pathflow/smoothing.hpp"
#include "pathflow/verify.hpp"
#include "support.hpp"

using namespace pathflow;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!ok) {
      pass = false;
      detail += " [x]";
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const std::vector<std::string> kPathFunctionals{"integral:gbilinear", "integral:gsin", "integral:gsecond",
                                                "pointeval:qsecond"};
const std::vector<std::string> kGroupFunctionals{"group:rotation", "group:invariant", "group:normsq"};

Vec random_vec(std::mt19937_64& rng, Eigen::Index m) {
  std::normal_distribution<double> n;
  Vec v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = n(rng);
  return v;
}

Verdict operator_algebra() {
  Verdict v;
  std::mt19937_64 rng(1001);
  const TimeGrid g(1.0, 200);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = static_cast<std::size_t>(rng() % 201);
    const NodeMatrix vals = testing::random_walk(rng, g, k + 1, 2);
    const WindowPath p = WindowPath::continuous(g, vals);
    const WindowPath back = restrict_to(k, lift(p));
    worst = std::max({worst, (back.values - p.values).cwiseAbs().maxCoeff(), (back.terminal - p.terminal).cwiseAbs().maxCoeff()});
  }
  v.require(worst <= 1e-12, "restrict(lift(y)) error " + num(worst) + " on 100 paths");

  bool law = true;
  for (int i = 0; i < 20; ++i) {
    const ProductState x = testing::random_state(rng, g, 2);
    const std::size_t s = rng() % 100, t = rng() % 100;
    const ProductState a = semigroup_apply(s, semigroup_apply(t, x));
    const ProductState b = semigroup_apply(s + t, x);
    law = law && a.head == b.head && a.tail == b.tail;
  }
  v.require(law, "e^{sA} e^{tA} = e^{(s+t)A} exactly");
  const ProductState x = testing::random_state(rng, g, 3);
  const ProductState id = semigroup_apply(0, x);
  v.require(id.head == x.head && id.tail == x.tail, "e^{0A} = id");
  return v;
}

Verdict frechet_validation() {
  Verdict v;
  std::mt19937_64 rng(1002);
  const TimeGrid g(1.0, 256);
  for (const auto& name : kPathFunctionals) {
    const FunctionalPtr f = make_functional(name, 0.5);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      std::size_t k = 1 + rng() % 255;
      if (k == 128) ++k;
      worst = std::max(worst, frechet_fd_check(*f, k, testing::random_state(rng, g, 2), testing::random_state(rng, g, 2)));
    }
    v.require(worst <= 1e-4, name + " " + num(worst));
  }
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  for (const auto& name : kGroupFunctionals) {
    const GroupFunctionalPtr f = make_group_functional(name);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) worst = std::max(worst, group_fd_check(*f, ut(rng), random_vec(rng, 2), random_vec(rng, 2)));
    v.require(worst <= 1e-4, name + " " + num(worst));
  }
  return v;
}

// G recomputed from its closed form, independently of the functional classes.
double expected_path_G(const std::string& name, const Vec& a) {
  if (name == "integral:gbilinear") return a.squaredNorm();
  if (name == "integral:gsin") return std::sin(2.0 * a.sum());
  if (name == "integral:gsecond") return a.sum();
  return 0.0;
}

double expected_group_G(const std::string& name, double s, const Vec& x) {
  if (name == "group:rotation") return 0.5 * std::cos(s) * x[0] * x[1] + 0.2 * x[1] + 0.25 * std::cos(x[0]);
  if (name == "group:normsq") return x.squaredNorm();
  return 0.0;
}

Verdict cancellation() {
  Verdict v;
  std::mt19937_64 rng(1003);
  const TimeGrid g(1.0, 512);
  for (const auto& name : kPathFunctionals) {
    const FunctionalPtr f = make_functional(name, 0.5);
    double worst = 0.0, g_err = 0.0;
    bool in_d = true;
    for (int i = 0; i < 50; ++i) {
      const ProductState x = testing::smooth_state(rng, g, 2);
      in_d = in_d && in_tilde_D(x);
      std::size_t k = 1 + rng() % 511;
      if (k == 256) ++k;
      const double G = f->frechet(k, x, BundleDetail::head_only).extension_G;
      g_err = std::max(g_err, std::abs(G - expected_path_G(name, x.head)));
      worst = std::max(worst, std::abs(cancellation_defect(*f, k, x, 1e-4)) / (1.0 + std::abs(G)));
    }
    v.require(in_d && worst <= 1e-2 && g_err <= 1e-12, name + " " + num(worst));
  }
  std::uniform_real_distribution<double> ut(0.01, 0.99);
  for (const auto& name : kGroupFunctionals) {
    const GroupFunctionalPtr f = make_group_functional(name);
    double worst = 0.0, g_err = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double t = ut(rng);
      const Vec x = random_vec(rng, 2);
      const double G = f->extension(t, x);
      g_err = std::max(g_err, std::abs(G - expected_group_G(name, t, x)));
      worst = std::max(worst, std::abs(group_cancellation_defect(*f, t, x, 1e-4)) / (1.0 + std::abs(G)));
    }
    v.require(worst <= 1e-2 && g_err <= 1e-12, name + " " + num(worst));
  }
  return v;
}

Verdict ito_convergence() {
  Verdict v;
  ConvergenceConfig c;
  c.functional = "integral:gbilinear";
  c.sde = "window-mean";
  c.n_list = {64, 128, 256, 512};
  c.paths = 2000;
  c.seed = 7;
  const ConvergenceReport r = convergence_study(c);
  std::string series;
  for (double x : r.rms) series += (series.empty() ? "" : ",") + num(x);
  v.require(r.monotone, "rms " + series + " strictly decreasing");
  v.require(std::abs(r.slope) >= 0.35 && std::abs(r.slope) <= 0.7, "slope " + num(r.slope) + " in band [0.35, 0.7]");
  return v;
}

Verdict jump_corollary() {
  Verdict v;
  const FunctionalPtr f = make_functional("pointeval:qsecond", 0.5);
  const SdeModel m = make_sde("window-mean", 1, 1.0);
  for (std::size_t n : {64u, 128u, 256u, 512u}) {
    const TimeGrid g(1.0, n);
    const auto ledgers = parallel_map(200, 1, [&](std::size_t p) { return ito_ledger(*f, m, sample_brownian(g, 1, 7, p)); });
    double worst = 0.0;
    for (const auto& l : ledgers) worst = std::max(worst, std::abs(l.residual));
    v.require(worst <= 1e-10, "N=" + std::to_string(n) + " max " + num(worst));
  }
  return v;
}

Verdict group_generator() {
  Verdict v;
  ConvergenceConfig c;
  c.functional = "group:rotation";
  c.n_list = {64, 128, 256, 512};
  c.paths = 2000;
  c.seed = 7;
  const ConvergenceReport r = convergence_study(c);
  v.require(std::abs(r.slope) >= 0.35 && std::abs(r.slope) <= 0.7, "rotation slope " + num(r.slope));

  // Rotation-invariant F0 with H0 = 0 along the deterministic rotation flow.
  const GroupFunctionalPtr inv = make_group_functional("group:invariant");
  const TimeGrid g(1.0, 256);
  const GroupSdeModel flow{inv->generator(), (Vec(2) << 1.0, 0.5).finished(), {}, {}};
  const GroupPropagator prop(flow.a, g);
  double worst = 0.0;
  for (std::uint64_t p = 0; p < 100; ++p) {
    worst = std::max(worst, std::abs(ito_ledger_group(*inv, flow, prop, sample_brownian(g, 2, 7, p)).residual));
  }
  v.require(worst <= 1e-10, "invariant max " + num(worst));
  return v;
}

Verdict feynman_kac_check() {
  Verdict v;
  const TimeGrid g(1.0, 128);
  const SdeModel bm = make_sde("brownian", 1, 0.0);
  std::mt19937_64 rng(1007);
  NodeMatrix w = testing::random_walk(rng, g, 129, 1);
  w.array() += 0.3;
  const std::size_t k = 64;
  const ProductState x = lift_process(g, w, k);
  const double x1 = x.head[0];

  const MonteCarloEstimate e1 = feynman_kac([](const ProductState& s) { return s.head[0]; }, bm, k, x, 5000, 7);
  v.require(std::abs(e1.mean - x1) <= 3.0 * e1.std_error, "head z=" + num(std::abs(e1.mean - x1) / e1.std_error));
  const MonteCarloEstimate e2 =
      feynman_kac([](const ProductState& s) { return s.head[0] * s.head[0]; }, bm, k, x, 5000, 7);
  const double c2 = x1 * x1 + 1.0 - g.node(k);
  v.require(std::abs(e2.mean - c2) <= 3.0 * e2.std_error, "head2 z=" + num(std::abs(e2.mean - c2) / e2.std_error));

  GaussianModel m = GaussianModel::from_string("N=1;g1=poly:1,0;f=quad", 1.0);
  m.cache_grid(g);
  const MonteCarloEstimate e3 = feynman_kac(
      [&m](const ProductState& s) { return m.u_eval(1.0, s.head[0], s.grid, s.tail); }, bm, k, x, 5000, 7);
  const double c3 = m.u_eval(g.node(k), x1, g, x.tail);
  v.require(std::abs(e3.mean - c3) <= 3.0 * e3.std_error, "gauss z=" + num(std::abs(e3.mean - c3) / e3.std_error));
  return v;
}

Verdict gaussian_kolmogorov() {
  Verdict v;
  const GaussianModel quad = GaussianModel::from_string("N=1;g1=poly:1,0;f=quad", 1.0);
  const GaussianModel c0 = GaussianModel::from_string("N=1;g1=poly:1,0;f=cos0;gh_order=64", 1.0);
  std::mt19937_64 rng(1008);
  std::uniform_real_distribution<double> ut(0.05, 0.95);
  double moment = 0.0, pde_q = 0.0, pde_c = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double t = ut(rng);
    const Vec x = random_vec(rng, 2);
    // |x|^2 + tr Sigma(t) with tr Sigma(t) = (1 - t) + (1 - t^3) / 3.
    const double oracle = x.squaredNorm() + (1.0 - t) + (1.0 - t * t * t) / 3.0;
    moment = std::max(moment, std::abs(quad.u_tilde(t, x) - oracle));
    pde_q = std::max(pde_q, quad.pde_residual(t, x));
    pde_c = std::max(pde_c, c0.pde_residual(t, x));
  }
  v.require(moment <= 1e-8, "moment " + num(moment));
  v.require(pde_q <= 1e-6, "quad PDE " + num(pde_q));
  v.require(pde_c <= 1e-3, "cos0 PDE " + num(pde_c));

  const TimeGrid g(1.0, 64);
  GaussianModel m = quad;
  m.cache_grid(g);
  const Vec m0 = m.martingale_path(g, Vec::Zero(64));
  const auto drifts = parallel_map(5000, 1, [&](std::size_t p) {
    return m.martingale_path(g, sample_brownian(g, 1, 7, p).increments().col(0))[64] - m0[0];
  });
  const MonteCarloEstimate e = summarize(drifts);
  v.require(std::abs(e.mean) <= 3.0 * e.std_error, "martingale z=" + num(std::abs(e.mean) / e.std_error));
  return v;
}

Verdict smoothing_operators() {
  Verdict v;
  const MollifierFamily& fam = default_mollifier();
  boost::math::quadrature::tanh_sinh<double> ts;
  double mass = 0.0;
  for (double n : {1.0, 4.0, 16.0, 64.0}) {
    mass = std::max(mass, std::abs(ts.integrate([&](double x) { return fam.eval(n, x); }, -1.0 / n, 1.0 / n) - 1.0));
  }
  v.require(mass <= 1e-8, "mass error " + num(mass));

  const TimeGrid g(1.0, 2048);
  NodeMatrix lip(2049, 1);
  for (std::size_t j = 0; j <= 2048; ++j) lip(static_cast<Eigen::Index>(j), 0) = std::abs(g.tail_node(j) + 0.4);
  const auto errs = mollifier_convergence({{"lip", ProductState(g, lip.row(2048).transpose(), lip)}}, {4, 8, 16, 32, 64})[0];
  v.require(errs.back() < errs.front() / 4.0, "Lipschitz " + num(errs.front()) + " -> " + num(errs.back()));

  std::mt19937_64 rng(1009);
  const ProductState y = testing::smooth_state(rng, TimeGrid(1.0, 1024), 1);
  const auto rows = yosida_sweep(y, {16, 32, 64, 128, 256});
  bool decreasing = true;
  double bc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) decreasing = decreasing && rows[i].distance < rows[i - 1].distance;
    bc = std::max(bc, rows[i].boundary);
  }
  v.require(decreasing, "Yosida " + num(rows.front().distance) + " -> " + num(rows.back().distance));
  v.require(bc <= 1e-6, "boundary " + num(bc));
  return v;
}

Verdict reproducibility() {
  Verdict v;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pathflow_acceptance";
  fs::create_directories(dir);
  const auto read = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  };
  const std::vector<std::vector<std::string>> runs{
      {"ito-verify", "--N", "128", "--M", "200", "--seed", "7"},
      {"ito-verify", "--functional", "group:rotation", "--N", "128", "--M", "200", "--seed", "7"},
      {"converge", "--N", "32,64,128", "--M", "200", "--seed", "7"},
      {"kolmogorov", "--payoff", "gauss", "--M", "1000", "--seed", "7"},
      {"gauss", "--M", "1000", "--seed", "7"},
      {"smooth", "--seed", "7"},
  };
  for (const auto& base : runs) {
    std::vector<std::string> texts;
    for (const char* workers : {"1", "1", "4"}) {
      const fs::path out = dir / ("report_" + std::to_string(texts.size()) + ".json");
      std::vector<std::string> args{"pathflow"};
      args.insert(args.end(), base.begin(), base.end());
      args.insert(args.end(), {"--workers", workers, "--output", out.string()});
      std::ostringstream so, se;
      cli::run(args, so, se);
      texts.push_back(read(out));
    }
    const bool same = !texts[0].empty() && texts[0] == texts[1];
    const bool par = nlohmann::json::parse(texts[0]) == nlohmann::json::parse(texts[2]);
    v.require(same && par, base[0] + (base.size() > 2 && base[1] == "--functional" ? "(" + base[2] + ")" : ""));
  }
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {"operator algebra", 1.0, operator_algebra},
      {"Frechet validation", 10.0, frechet_validation},
      {"cancellation identity", 30.0, cancellation},
      {"Ito formula convergence", 120.0, ito_convergence},
      {"jump corollary", 5.0, jump_corollary},
      {"group generator", 60.0, group_generator},
      {"Feynman-Kac", 60.0, feynman_kac_check},
      {"Gaussian Kolmogorov", 60.0, gaussian_kolmogorov},
      {"smoothing operators", 10.0, smoothing_operators},
      {"reproducibility", 300.0, reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.require(secs < criteria[i].budget_s, "runtime " + num(secs) + " s < " + num(criteria[i].budget_s) + " s");
    if (!v.pass) ++failed;
    std::printf("[%s] %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
