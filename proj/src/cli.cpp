#include "pathflow/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "pathflow/errors.hpp"
#include "pathflow/functionals.hpp"
#include "pathflow/gausskolm.hpp"
#include "pathflow/group.hpp"
#include "pathflow/parallel.hpp"
#include "pathflow/quadrature.hpp"
#include "pathflow/report.hpp"
#include "pathflow/rng.hpp"
#include "pathflow/smoothing.hpp"
#include "pathflow/verify.hpp"

namespace pathflow::cli {

using nlohmann::json;

const std::vector<std::string>& commands() {
  static const std::vector<std::string> list{"ito-verify", "converge", "kolmogorov", "gauss", "smooth"};
  return list;
}

namespace {

// Keys that only choose where results go or how fast they come; they never enter the hash.
const std::set<std::string> kPresentationKeys{"workers", "output", "csv", "timing", "dump_paths", "paths_csv"};

const std::set<std::string> kTopKeys{"command", "grid",   "functional", "t0",         "sde",    "y0",
                                     "M",       "seed",   "workers",    "output",     "csv",    "timing",
                                     "model",   "payoff", "t",          "tol",        "slope_band",
                                     "smooth",  "dump_paths", "paths_csv"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("'" + key + "' must be finite");
  return v;
}

long long get_integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return j.get<long long>();
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("'" + key + "' must be a string");
  return j.get<std::string>();
}

std::vector<long long> get_int_list(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw ConfigError("'" + key + "' must be a non-empty array of integers");
  std::vector<long long> out;
  for (const auto& e : j) out.push_back(get_integer(e, key));
  return out;
}

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

struct Defaults {
  long long n_steps;
  long long paths;
  const char* sde;
};

Defaults defaults_for(const std::string& command) {
  if (command == "ito-verify") return {256, 200, "window-mean"};
  if (command == "converge") return {512, 2000, "window-mean"};
  if (command == "kolmogorov") return {128, 5000, "brownian"};
  if (command == "gauss") return {64, 5000, "brownian"};
  return {512, 1, "brownian"};
}

bool known_functional(const std::string& name) {
  return is_path_functional_name(name) || is_group_functional_name(name);
}

}  // namespace

json normalize_config(const std::string& command, const json& raw_in) {
  const auto& cmds = commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) throw ConfigError("unknown command '" + command + "'");
  const json raw = raw_in.is_null() ? json::object() : raw_in;
  reject_unknown(raw, kTopKeys, "config");
  if (raw.contains("command") && get_string(raw["command"], "command") != command) {
    throw ConfigError("config is for command '" + raw["command"].get<std::string>() + "', not '" + command + "'");
  }
  const Defaults d = defaults_for(command);
  json c = json::object();
  c["command"] = command;

  // Grid.
  const json grid_in = raw.value("grid", json::object());
  reject_unknown(grid_in, {"T", "n_steps", "N_list"}, "grid");
  const double horizon = grid_in.contains("T") ? get_number(grid_in["T"], "grid.T") : 1.0;
  if (!(horizon > 0.0)) throw ConfigError("grid.T must be positive");
  json grid = {{"T", horizon}};
  if (command == "converge") {
    const auto list = grid_in.contains("N_list") ? get_int_list(grid_in["N_list"], "grid.N_list")
                                                 : std::vector<long long>{64, 128, 256, 512};
    if (list.size() < 2) throw ConfigError("grid.N_list needs at least two sizes");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i] < 2 || list[i] > (1 << 20)) throw ConfigError("grid.N_list entries must lie in [2, 2^20]");
      if (i > 0 && list[i] <= list[i - 1]) throw ConfigError("grid.N_list must be strictly ascending");
    }
    for (long long n : list) {
      if (list.back() % n != 0 || !is_power_of_two(static_cast<std::size_t>(list.back() / n))) {
        throw ConfigError("grid.N_list sizes must differ by powers of two");
      }
    }
    grid["N_list"] = list;
  } else {
    if (grid_in.contains("N_list")) throw ConfigError("grid.N_list is only used by converge");
    const long long n = grid_in.contains("n_steps") ? get_integer(grid_in["n_steps"], "grid.n_steps") : d.n_steps;
    if (n < 2 || n > (1 << 20)) throw ConfigError("grid.n_steps must lie in [2, 2^20]");
    grid["n_steps"] = n;
  }
  c["grid"] = grid;

  // Sampling.
  const long long paths = raw.contains("M") ? get_integer(raw["M"], "M") : d.paths;
  if (paths < 1) throw ConfigError("M must be a positive integer");
  c["M"] = paths;
  const long long seed = raw.contains("seed") ? get_integer(raw["seed"], "seed") : 7;
  if (seed < 0) throw ConfigError("seed must be non-negative");
  c["seed"] = seed;
  const long long workers = raw.contains("workers") ? get_integer(raw["workers"], "workers") : 1;
  if (workers < 1 || workers > 256) throw ConfigError("workers must lie in [1, 256]");
  c["workers"] = workers;
  for (const char* key : {"output", "csv", "timing", "paths_csv"}) {
    c[key] = raw.contains(key) ? get_string(raw[key], key) : std::string();
  }
  const long long dump = raw.contains("dump_paths") ? get_integer(raw["dump_paths"], "dump_paths") : 0;
  if (dump < 0) throw ConfigError("dump_paths must be non-negative");
  c["dump_paths"] = dump;
  if (raw.contains("tol")) {
    const double tol = get_number(raw["tol"], "tol");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    c["tol"] = tol;
  } else {
    c["tol"] = nullptr;
  }

  const auto grid_sizes = [&] {
    std::vector<long long> out;
    if (c["grid"].contains("N_list")) {
      out = c["grid"]["N_list"].get<std::vector<long long>>();
    } else {
      out.push_back(c["grid"]["n_steps"].get<long long>());
    }
    return out;
  }();

  if (command == "ito-verify" || command == "converge") {
    const std::string f = raw.contains("functional") ? get_string(raw["functional"], "functional") : "integral:gbilinear";
    if (!known_functional(f)) throw ConfigError("unknown functional '" + f + "'");
    c["functional"] = f;
    const std::string sde = raw.contains("sde") ? get_string(raw["sde"], "sde") : d.sde;
    if (!is_sde_name(sde)) throw ConfigError("unknown sde '" + sde + "'");
    c["sde"] = sde;
    c["y0"] = raw.contains("y0") ? get_number(raw["y0"], "y0") : 1.0;
    const double t0 = raw.contains("t0") ? get_number(raw["t0"], "t0") : 0.5 * horizon;
    if (f.rfind("pointeval:", 0) == 0) {
      if (!(t0 > 0.0 && t0 < horizon)) throw ConfigError("t0 must lie in (0, T)");
      for (long long n : grid_sizes) {
        if (!TimeGrid(horizon, static_cast<std::size_t>(n)).index_of(t0)) {
          throw ConfigError("t0 must be a grid node for every grid size");
        }
      }
    }
    c["t0"] = t0;
    if (command == "converge") {
      json band = raw.value("slope_band", json::array({0.35, 0.7}));
      if (!band.is_array() || band.size() != 2) throw ConfigError("slope_band must be [low, high]");
      const double lo = get_number(band[0], "slope_band");
      const double hi = get_number(band[1], "slope_band");
      if (!(lo >= 0.0 && lo < hi)) throw ConfigError("slope_band must satisfy 0 <= low < high");
      c["slope_band"] = {lo, hi};
    }
  }

  if (command == "kolmogorov") {
    const std::string payoff = raw.contains("payoff") ? get_string(raw["payoff"], "payoff") : "head";
    if (payoff != "head" && payoff != "head2" && payoff != "gauss") {
      throw ConfigError("payoff must be head, head2 or gauss");
    }
    c["payoff"] = payoff;
    const std::string sde = raw.contains("sde") ? get_string(raw["sde"], "sde") : "brownian";
    if (sde != "brownian") throw ConfigError("kolmogorov candidates are known in closed form only for sde brownian");
    c["sde"] = sde;
    const double t = raw.contains("t") ? get_number(raw["t"], "t") : 0.5 * horizon;
    if (!(t >= 0.0 && t < horizon) || !TimeGrid(horizon, static_cast<std::size_t>(grid_sizes[0])).index_of(t)) {
      throw ConfigError("t must be a grid node in [0, T)");
    }
    c["t"] = t;
    c["y0"] = raw.contains("y0") ? get_number(raw["y0"], "y0") : 0.0;
  }

  if (command == "gauss" || (command == "kolmogorov" && c["payoff"] == "gauss")) {
    json model = raw.value("model", json("N=1;g1=poly:1,0;f=quad"));
    if (model.is_string()) {
      // Parse now so that errors surface before any computation; keep the text form.
      GaussianModel::from_string(model.get<std::string>(), horizon);
    } else {
      GaussianModel::from_json(model, horizon);
    }
    c["model"] = model;
  }

  if (command == "smooth") {
    const json s = raw.value("smooth", json::object());
    reject_unknown(s, {"n_list", "yosida_n"}, "smooth");
    const auto n_list = s.contains("n_list") ? get_int_list(s["n_list"], "smooth.n_list")
                                             : std::vector<long long>{4, 8, 16, 32, 64};
    const auto yn = s.contains("yosida_n") ? get_int_list(s["yosida_n"], "smooth.yosida_n")
                                           : std::vector<long long>{16, 32, 64, 128, 256};
    for (long long n : n_list) {
      if (n < 2 || !(1.0 / static_cast<double>(n) < 0.5 * horizon)) throw ConfigError("smooth.n_list: need 1/n < T/2");
    }
    for (long long n : yn) {
      if (n < 1) throw ConfigError("smooth.yosida_n entries must be positive");
    }
    c["smooth"] = {{"n_list", n_list}, {"yosida_n", yn}};
  }

  return c;
}

namespace {

json hashed_part(const json& config) {
  json h = config;
  for (const auto& k : kPresentationKeys) h.erase(k);
  return h;
}

GaussianModel model_from(const json& config) {
  const double horizon = config["grid"]["T"].get<double>();
  const json& m = config["model"];
  return m.is_string() ? GaussianModel::from_string(m.get<std::string>(), horizon) : GaussianModel::from_json(m, horizon);
}

std::string terminal_name(const json& model) {
  if (model.is_string()) {
    std::stringstream ss(model.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ';')) {
      if (item.rfind("f=", 0) == 0) return item.substr(2);
    }
    return "";
  }
  return model.value("f", "");
}

json ledger_json(const ItoLedger& l) {
  return {{"lhs", l.lhs},
          {"term_G", l.term_G},
          {"term_drift", l.term_drift},
          {"term_trace", l.term_trace},
          {"term_stoch", l.term_stoch},
          {"term_jumps", l.term_jumps},
          {"residual", l.residual}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw ConfigError("failed writing '" + path + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Result {
  json body = json::object();
  std::vector<std::string> failures;
  std::string csv;
  std::string paths_csv;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

Result run_ito_verify(const json& c) {
  Result r;
  const TimeGrid grid(c["grid"]["T"].get<double>(), c["grid"]["n_steps"].get<std::size_t>());
  const auto paths = c["M"].get<std::size_t>();
  const auto seed = c["seed"].get<std::uint64_t>();
  const auto workers = c["workers"].get<std::size_t>();
  const std::string name = c["functional"].get<std::string>();
  std::vector<ItoLedger> ledgers;
  if (is_group_functional_name(name)) {
    const GroupFunctionalPtr f = make_group_functional(name);
    const GroupSdeModel model = default_group_model(*f);
    const GroupPropagator prop(model.a, grid);
    ledgers = parallel_map(paths, workers, [&](std::size_t p) {
      return ito_ledger_group(*f, model, prop, sample_brownian(grid, static_cast<std::size_t>(f->dim()), seed, p));
    });
  } else {
    const FunctionalPtr f = make_functional(name, c["t0"].get<double>());
    const SdeModel model = make_sde(c["sde"].get<std::string>(), 1, c["y0"].get<double>());
    ledgers = parallel_map(paths, workers, [&](std::size_t p) {
      return ito_ledger(*f, model, sample_brownian(grid, model.noise_dim, seed, p));
    });
    const auto dump = std::min(c["dump_paths"].get<std::size_t>(), paths);
    if (dump > 0) {
      std::ostringstream os;
      os << "path,t,y0,W0\n";
      for (std::size_t p = 0; p < dump; ++p) {
        const BrownianDriver driver = sample_brownian(grid, model.noise_dim, seed, p);
        const NodeMatrix y = euler_pathdep(model, driver);
        const NodeMatrix w = driver.path();
        for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
          const auto kk = static_cast<Eigen::Index>(k);
          os << p << ',' << fmt(grid.node(k)) << ',' << fmt(y(kk, 0)) << ',' << fmt(w(kk, 0)) << '\n';
        }
      }
      r.paths_csv = os.str();
    }
  }
  ItoLedger mean;
  double ss = 0.0, max_abs = 0.0;
  bool finite = true;
  const double inv = 1.0 / static_cast<double>(paths);
  std::ostringstream csv;
  csv << "path,lhs,term_G,term_drift,term_trace,term_stoch,term_jumps,residual\n";
  for (std::size_t p = 0; p < ledgers.size(); ++p) {
    const ItoLedger& l = ledgers[p];
    finite = finite && l.finite();
    mean.lhs += inv * l.lhs;
    mean.term_G += inv * l.term_G;
    mean.term_drift += inv * l.term_drift;
    mean.term_trace += inv * l.term_trace;
    mean.term_stoch += inv * l.term_stoch;
    mean.term_jumps += inv * l.term_jumps;
    mean.residual += inv * l.residual;
    ss += l.residual * l.residual;
    max_abs = std::max(max_abs, std::abs(l.residual));
    csv << p << ',' << fmt(l.lhs) << ',' << fmt(l.term_G) << ',' << fmt(l.term_drift) << ',' << fmt(l.term_trace)
        << ',' << fmt(l.term_stoch) << ',' << fmt(l.term_jumps) << ',' << fmt(l.residual) << '\n';
  }
  const double rms = std::sqrt(ss * inv);
  r.csv = csv.str();
  r.body["terms"] = ledger_json(mean);
  r.body["residual_rms"] = json::array({rms});
  r.body["max_abs_residual"] = max_abs;
  r.require(finite, "ledger fields are not all finite");
  if (!c["tol"].is_null()) {
    r.require(rms <= c["tol"].get<double>(), "residual rms " + fmt(rms) + " exceeds tol " + fmt(c["tol"].get<double>()));
  }
  return r;
}

Result run_converge(const json& c) {
  Result r;
  ConvergenceConfig cc;
  cc.functional = c["functional"].get<std::string>();
  cc.sde = c["sde"].get<std::string>();
  cc.horizon = c["grid"]["T"].get<double>();
  cc.n_list = c["grid"]["N_list"].get<std::vector<std::size_t>>();
  cc.paths = c["M"].get<std::size_t>();
  cc.seed = c["seed"].get<std::uint64_t>();
  cc.workers = c["workers"].get<std::size_t>();
  cc.t0 = c["t0"].get<double>();
  cc.y0 = c["y0"].get<double>();
  const ConvergenceReport rep = convergence_study(cc);
  json terms = json::array();
  std::ostringstream csv;
  csv << "N,rms,max_abs,lhs,term_G,term_drift,term_trace,term_stoch,term_jumps,residual\n";
  for (std::size_t i = 0; i < rep.n_list.size(); ++i) {
    terms.push_back(ledger_json(rep.mean_terms[i]));
    const ItoLedger& m = rep.mean_terms[i];
    csv << rep.n_list[i] << ',' << fmt(rep.rms[i]) << ',' << fmt(rep.max_abs[i]) << ',' << fmt(m.lhs) << ','
        << fmt(m.term_G) << ',' << fmt(m.term_drift) << ',' << fmt(m.term_trace) << ',' << fmt(m.term_stoch) << ','
        << fmt(m.term_jumps) << ',' << fmt(m.residual) << '\n';
  }
  r.csv = csv.str();
  r.body["N_list"] = rep.n_list;
  r.body["residual_rms"] = rep.rms;
  r.body["max_abs_residual"] = rep.max_abs;
  r.body["terms"] = terms;
  r.body["slope"] = rep.slope;
  r.body["intercept"] = rep.intercept;
  r.body["monotone"] = rep.monotone;
  const double lo = c["slope_band"][0].get<double>();
  const double hi = c["slope_band"][1].get<double>();
  r.require(rep.monotone, "residual rms is not strictly decreasing in N");
  r.require(std::isfinite(rep.slope) && std::abs(rep.slope) >= lo && std::abs(rep.slope) <= hi,
            "slope magnitude " + fmt(std::abs(rep.slope)) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
  return r;
}

// The restart state: y0 plus a Brownian window on [0, t], drawn from a stream the Monte Carlo paths never use.
ProductState kolmogorov_state(const TimeGrid& grid, std::size_t t_index, double y0, std::uint64_t seed) {
  constexpr std::uint64_t kReservedPath = 0xFFFFFFFFull << 16;
  const BrownianDriver driver = sample_brownian(grid, 1, seed, kReservedPath);
  NodeMatrix w = driver.path();
  w.array() += y0;
  return lift_process(grid, w, t_index);
}

Result run_kolmogorov(const json& c) {
  Result r;
  const TimeGrid grid(c["grid"]["T"].get<double>(), c["grid"]["n_steps"].get<std::size_t>());
  const double t = c["t"].get<double>();
  const std::size_t k = grid.require_index(t);
  const auto seed = c["seed"].get<std::uint64_t>();
  const ProductState x = kolmogorov_state(grid, k, c["y0"].get<double>(), seed);
  const std::string payoff = c["payoff"].get<std::string>();
  StatePayoff phi;
  double candidate = 0.0;
  std::optional<GaussianModel> model;
  if (payoff == "head") {
    phi = [](const ProductState& s) { return s.head[0]; };
    candidate = x.head[0];
  } else if (payoff == "head2") {
    phi = [](const ProductState& s) { return s.head[0] * s.head[0]; };
    candidate = x.head[0] * x.head[0] + grid.horizon() - t;
  } else {
    model.emplace(model_from(c));
    model->cache_grid(grid);
    const GaussianModel& m = *model;
    phi = [&m](const ProductState& s) { return m.u_eval(m.horizon(), s.head[0], s.grid, s.tail); };
    candidate = m.u_eval(t, x.head[0], grid, x.tail);
  }
  const SdeModel sde = make_sde("brownian", 1, 0.0);
  const MonteCarloEstimate est =
      feynman_kac(phi, sde, k, x, c["M"].get<std::size_t>(), seed, c["workers"].get<std::size_t>());
  r.body["estimate"] = est.mean;
  r.body["std_error"] = est.std_error;
  r.body["candidate"] = candidate;
  r.body["head"] = x.head[0];
  const double gap = std::abs(est.mean - candidate);
  r.body["z_score"] = est.std_error > 0.0 ? gap / est.std_error : 0.0;
  r.require(gap <= 3.0 * est.std_error, "|estimate - candidate| = " + fmt(gap) + " exceeds 3 SE = " +
                                            fmt(3.0 * est.std_error));
  return r;
}

Result run_gauss(const json& c) {
  Result r;
  const GaussianModel probe_model = model_from(c);
  GaussianModel model = probe_model;
  const TimeGrid grid(c["grid"]["T"].get<double>(), c["grid"]["n_steps"].get<std::size_t>());
  model.cache_grid(grid);
  const auto seed = c["seed"].get<std::uint64_t>();
  const double horizon = grid.horizon();
  const double tol = c["tol"].is_null() ? 1e-3 : c["tol"].get<double>();
  const std::string f = terminal_name(c["model"]);
  const CounterNormal rng(seed);
  constexpr std::uint64_t kProbeStream = 0xFFFFFFFFull << 20;

  double pde_max = 0.0, moment_max = 0.0, prop_iv_max = 0.0;
  json probes = json::array();
  for (std::uint32_t i = 0; i < 20; ++i) {
    const double t = horizon * (0.05 + 0.85 * i / 19.0);
    Vec x(model.dim());
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = rng.normal(kProbeStream, i, static_cast<std::uint32_t>(j));
    const double res = model.pde_residual(t, x);
    pde_max = std::max(pde_max, res);
    if (f == "quad") {
      const double oracle = x.squaredNorm() + model.sigma(t).trace();
      moment_max = std::max(moment_max, std::abs(model.u_tilde(t, x) - oracle));
    }
    // Prop iv on a smooth scalar tail psi(r) = x0 + sin(r) - sin(0), closed by the head x0.
    TimeGrid tail_grid(horizon, 64);
    NodeMatrix psi(65, 1);
    for (std::size_t j = 0; j <= 64; ++j) psi(static_cast<Eigen::Index>(j), 0) = x[0] + std::sin(tail_grid.tail_node(j));
    const double piv = model.prop_iv_residual(t, x[0], tail_grid, psi);
    prop_iv_max = std::max(prop_iv_max, piv);
    probes.push_back({{"t", t}, {"pde_residual", res}, {"prop_iv_residual", piv}});
  }
  r.body["probes"] = probes;
  r.body["pde_residual_max"] = pde_max;
  r.body["prop_iv_residual_max"] = prop_iv_max;
  r.require(pde_max <= tol, "PDE residual " + fmt(pde_max) + " exceeds " + fmt(tol));
  r.require(prop_iv_max <= tol, "A(U) + U_xx / 2 residual " + fmt(prop_iv_max) + " exceeds " + fmt(tol));
  if (f == "quad") {
    r.body["moment_error_max"] = moment_max;
    r.require(moment_max <= 1e-8, "U~ differs from |x|^2 + tr Sigma by " + fmt(moment_max));
  }

  const auto paths = c["M"].get<std::size_t>();
  const auto series = parallel_map(paths, c["workers"].get<std::size_t>(), [&](std::size_t p) {
    const BrownianDriver driver = sample_brownian(grid, 1, seed, p);
    return Vec(model.martingale_path(grid, driver.increments().col(0)));
  });
  std::vector<double> drift(paths), inc(paths), prod(paths);
  const std::size_t mid = grid.n_steps() / 2;
  for (std::size_t p = 0; p < paths; ++p) {
    const Vec& m = series[p];
    drift[p] = m[m.size() - 1] - m[0];
    inc[p] = m[static_cast<Eigen::Index>(mid + 1)] - m[static_cast<Eigen::Index>(mid)];
    prod[p] = inc[p] * m[static_cast<Eigen::Index>(mid)];
  }
  const MonteCarloEstimate d = summarize(drift);
  const MonteCarloEstimate di = summarize(inc);
  const MonteCarloEstimate dp = summarize(prod);
  r.body["martingale"] = {{"M0", series.empty() ? 0.0 : series[0][0]},
                          {"drift_mean", d.mean},
                          {"drift_std_error", d.std_error},
                          {"increment_mean", di.mean},
                          {"increment_std_error", di.std_error},
                          {"increment_cross_mean", dp.mean},
                          {"increment_cross_std_error", dp.std_error}};
  r.require(std::abs(d.mean) <= 3.0 * d.std_error, "|E[M_T] - M_0| exceeds 3 SE");
  r.require(std::abs(di.mean) <= 3.0 * di.std_error, "mid-grid martingale increment mean exceeds 3 SE");
  r.require(std::abs(dp.mean) <= 3.0 * dp.std_error, "martingale increment correlates with M_t beyond 3 SE");
  return r;
}

Result run_smooth(const json& c) {
  Result r;
  const TimeGrid grid(c["grid"]["T"].get<double>(), c["grid"]["n_steps"].get<std::size_t>());
  const double horizon = grid.horizon();
  const auto n_list = c["smooth"]["n_list"].get<std::vector<std::size_t>>();
  const auto yn = c["smooth"]["yosida_n"].get<std::vector<double>>();
  const MollifierFamily& fam = default_mollifier();

  json masses = json::array();
  double mass_err = 0.0;
  for (std::size_t n : n_list) {
    const double nn = static_cast<double>(n);
    const double mass = adaptive_simpson([&](double x) { return fam.eval(nn, x); }, -1.0 / nn, 1.0 / nn, 1e-13);
    masses.push_back(mass);
    mass_err = std::max(mass_err, std::abs(mass - 1.0));
  }
  r.body["kernel_mass"] = masses;
  r.require(mass_err <= 1e-8, "kernel mass differs from one by " + fmt(mass_err));

  const auto n = static_cast<Eigen::Index>(grid.n_steps());
  NodeMatrix lip(n + 1, 1), brown(n + 1, 1);
  for (Eigen::Index j = 0; j <= n; ++j) {
    lip(j, 0) = std::abs(grid.tail_node(static_cast<std::size_t>(j)) + 0.5 * horizon);
  }
  const NodeMatrix w = sample_brownian(grid, 1, c["seed"].get<std::uint64_t>(), 0).path();
  brown = w;
  std::vector<NamedTail> tails{
      {"constant", ProductState::constant(grid, Vec::Constant(1, 0.75))},
      {"lipschitz", ProductState(grid, lip.row(n).transpose(), lip)},
      {"brownian", ProductState(grid, brown.row(n).transpose(), brown)},
  };
  const auto table = mollifier_convergence(tails, n_list);
  json mj = json::object();
  for (std::size_t i = 0; i < tails.size(); ++i) mj[tails[i].name] = table[i];
  r.body["mollifier_sup_error"] = mj;
  r.body["mollifier_n"] = n_list;
  const auto& constant = table[0];
  r.require(*std::max_element(constant.begin(), constant.end()) <= 1e-6, "constant tail is not preserved");
  const auto& lerr = table[1];
  for (std::size_t i = 1; i < lerr.size(); ++i) {
    r.require(lerr[i] < lerr[i - 1], "Lipschitz mollifier error does not decrease at n = " + std::to_string(n_list[i]));
  }
  r.require(lerr.back() < lerr.front() / 4.0, "Lipschitz mollifier error does not drop by a factor four");

  NodeMatrix smooth(n + 1, 1);
  for (Eigen::Index j = 0; j <= n; ++j) {
    const double rr = grid.tail_node(static_cast<std::size_t>(j));
    smooth(j, 0) = std::sin(3.0 * rr) + rr * rr;
  }
  const ProductState y(grid, smooth.row(n).transpose(), smooth);
  const auto rows = yosida_sweep(y, yn);
  json yj = json::array();
  double bc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    yj.push_back({{"n", rows[i].n}, {"distance", rows[i].distance}, {"boundary", rows[i].boundary}});
    bc = std::max(bc, rows[i].boundary);
    if (i > 0) r.require(rows[i].distance < rows[i - 1].distance, "Yosida distance does not decrease at n = " + fmt(rows[i].n));
  }
  r.body["yosida"] = yj;
  r.require(bc <= 1e-6, "Yosida boundary condition defect " + fmt(bc));

  std::ostringstream csv;
  csv << "tail";
  for (std::size_t nn : n_list) csv << ",n" << nn;
  csv << '\n';
  for (std::size_t i = 0; i < tails.size(); ++i) {
    csv << tails[i].name;
    for (double e : table[i]) csv << ',' << fmt(e);
    csv << '\n';
  }
  r.csv = csv.str();
  return r;
}

}  // namespace

Outcome execute(const json& config) {
  const auto start = std::chrono::steady_clock::now();
  const std::string command = config.at("command").get<std::string>();
  Result r;
  if (command == "ito-verify") {
    r = run_ito_verify(config);
  } else if (command == "converge") {
    r = run_converge(config);
  } else if (command == "kolmogorov") {
    r = run_kolmogorov(config);
  } else if (command == "gauss") {
    r = run_gauss(config);
  } else if (command == "smooth") {
    r = run_smooth(config);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  Outcome out;
  json report = r.body;
  const json hashed = hashed_part(config);
  report["schema"] = kReportSchema;
  report["command"] = command;
  report["config"] = hashed;
  report["config_hash"] = config_hash(hashed);
  report["seed"] = config["seed"];
  report["failures"] = r.failures;
  report["pass"] = r.failures.empty();
  out.report = std::move(report);
  out.exit_code = r.failures.empty() ? kPass : kAssertionFailed;
  out.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  if (const auto path = config["csv"].get<std::string>(); !path.empty() && !r.csv.empty()) write_text(path, r.csv);
  if (const auto path = config["paths_csv"].get<std::string>(); !path.empty() && !r.paths_csv.empty()) {
    write_text(path, r.paths_csv);
  }
  if (const auto path = config["output"].get<std::string>(); !path.empty()) write_text(path, dump_json(out.report));
  if (const auto path = config["timing"].get<std::string>(); !path.empty()) {
    write_text(path, dump_json({{"runtime_ms", out.runtime_ms}, {"config_hash", out.report["config_hash"]}}));
  }
  return out;
}

namespace {

std::vector<long long> parse_list(const std::string& text, const std::string& flag) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad integer '" + item + "' in " + flag);
    }
  }
  if (out.empty()) throw ConfigError(flag + " needs at least one value");
  return out;
}

json load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks of Ito formulae for path-dependent functionals", "pathflow"};
  app.require_subcommand(1);
  struct Flags {
    std::string config, functional, sde, payoff, model, output, csv, timing, paths_csv, n_list;
    std::optional<double> horizon, t0, t, y0, tol;
    std::optional<long long> n_steps, paths, seed, workers, dump;
  } fl;
  for (const auto& name : commands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " check");
    sub->add_option("--config", fl.config, "JSON config file");
    sub->add_option("--T", fl.horizon, "horizon T");
    sub->add_option("--n-steps", fl.n_steps, "grid steps");
    sub->add_option("--N", fl.n_list, "grid size, or comma-separated sizes for converge");
    sub->add_option("--M", fl.paths, "Monte Carlo paths");
    sub->add_option("--seed", fl.seed, "random seed");
    sub->add_option("--workers", fl.workers, "worker threads");
    sub->add_option("--output", fl.output, "report file (stdout when absent)");
    sub->add_option("--csv", fl.csv, "CSV table file");
    sub->add_option("--timing", fl.timing, "file receiving the wall-clock runtime");
    sub->add_option("--tol", fl.tol, "residual tolerance");
    if (name == "ito-verify" || name == "converge") {
      sub->add_option("--functional", fl.functional, "functional name");
      sub->add_option("--sde", fl.sde, "SDE model name");
      sub->add_option("--t0", fl.t0, "evaluation time of pointeval functionals");
      sub->add_option("--y0", fl.y0, "initial value");
    }
    if (name == "ito-verify") {
      sub->add_option("--dump-paths", fl.dump, "number of paths written to --paths-csv");
      sub->add_option("--paths-csv", fl.paths_csv, "path dump file");
    }
    if (name == "kolmogorov") {
      sub->add_option("--payoff", fl.payoff, "head, head2 or gauss");
      sub->add_option("--t", fl.t, "restart time");
      sub->add_option("--y0", fl.y0, "initial value of the restart window");
    }
    if (name == "kolmogorov" || name == "gauss") sub->add_option("--model", fl.model, "Gaussian model, e.g. N=1;g1=poly:1,0;f=quad");
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    json raw = fl.config.empty() ? json::object() : load_config(fl.config);
    if (!raw.is_object()) throw ConfigError("config must be a JSON object");
    auto& grid = raw["grid"];
    if (grid.is_null()) grid = json::object();
    if (fl.horizon) grid["T"] = *fl.horizon;
    if (fl.n_steps) grid["n_steps"] = *fl.n_steps;
    if (!fl.n_list.empty()) {
      const auto list = parse_list(fl.n_list, "--N");
      if (command == "converge") {
        grid["N_list"] = list;
      } else if (list.size() == 1) {
        grid["n_steps"] = list[0];
      } else {
        throw ConfigError("--N takes a list only for converge");
      }
    }
    if (grid.empty()) raw.erase("grid");
    if (fl.paths) raw["M"] = *fl.paths;
    if (fl.seed) raw["seed"] = *fl.seed;
    if (fl.workers) raw["workers"] = *fl.workers;
    if (fl.dump) raw["dump_paths"] = *fl.dump;
    if (fl.t0) raw["t0"] = *fl.t0;
    if (fl.t) raw["t"] = *fl.t;
    if (fl.y0) raw["y0"] = *fl.y0;
    if (fl.tol) raw["tol"] = *fl.tol;
    if (!fl.functional.empty()) raw["functional"] = fl.functional;
    if (!fl.sde.empty()) raw["sde"] = fl.sde;
    if (!fl.payoff.empty()) raw["payoff"] = fl.payoff;
    if (!fl.model.empty()) raw["model"] = fl.model;
    if (!fl.output.empty()) raw["output"] = fl.output;
    if (!fl.csv.empty()) raw["csv"] = fl.csv;
    if (!fl.timing.empty()) raw["timing"] = fl.timing;
    if (!fl.paths_csv.empty()) raw["paths_csv"] = fl.paths_csv;

    const json config = normalize_config(command, raw);
    const Outcome o = execute(config);
    if (config["output"].get<std::string>().empty()) out << dump_json(o.report);
    for (const auto& f : o.report["failures"]) err << "FAIL: " << f.get<std::string>() << '\n';
    return o.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kAssertionFailed;
  }
}

}  // namespace pathflow::cli
