#include "pathflow/gausskolm.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "pathflow/errors.hpp"
#include "pathflow/quadrature.hpp"

namespace pathflow {

GaussHermiteRule gauss_hermite(std::size_t order) {
  if (order == 0) throw std::invalid_argument("gauss_hermite: order must be positive");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  const auto q = static_cast<Eigen::Index>(order);
  Mat jacobi = Mat::Zero(q, q);
  for (Eigen::Index k = 1; k < q; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  double mass = 0.0;
  for (Eigen::Index k = 0; k < q; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
    const double v = eig.eigenvectors()(0, k);
    rule.weights[static_cast<std::size_t>(k)] = v * v;
    mass += v * v;
  }
  for (auto& w : rule.weights) w /= mass;
  return rule;
}

std::function<double(double)> parse_g_function(const std::string& spec) {
  const std::string prefix = "poly:";
  if (spec.rfind(prefix, 0) != 0) throw ConfigError("unsupported g function '" + spec + "' (expected poly:...)");
  std::vector<double> coeffs;
  std::stringstream ss(spec.substr(prefix.size()));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      coeffs.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad coefficient '" + item + "' in g function '" + spec + "'");
    }
  }
  if (coeffs.empty()) throw ConfigError("g function '" + spec + "' has no coefficients");
  return [coeffs](double s) {
    double acc = 0.0;
    for (double c : coeffs) acc = acc * s + c;
    return acc;
  };
}

namespace {

std::function<double(const Vec&)> parse_terminal(const std::string& name) {
  if (name == "quad") return [](const Vec& x) { return x.squaredNorm(); };
  if (name == "cos0") return [](const Vec& x) { return std::cos(x[0]); };
  if (name == "linear") return [](const Vec& x) { return x.sum(); };
  throw ConfigError("unknown terminal function '" + name + "' (expected quad, cos0 or linear)");
}

}  // namespace

GaussianModel::GaussianModel(double horizon, std::vector<std::function<double(double)>> g,
                             std::function<double(const Vec&)> f, std::size_t gh_order, bool validate)
    : horizon_(horizon), g_(std::move(g)), f_(std::move(f)), gh_order_(gh_order) {
  if (!(horizon_ > 0.0)) throw std::invalid_argument("GaussianModel: horizon must be positive");
  if (g_.size() > 3) throw std::invalid_argument("GaussianModel: at most N = 3 is supported");
  const GaussHermiteRule rule = gauss_hermite(gh_order_);
  const Eigen::Index d = dim();
  std::size_t count = 1;
  for (Eigen::Index i = 0; i < d; ++i) count *= gh_order_;
  nodes_.resize(static_cast<Eigen::Index>(count), d);
  weights_.resize(static_cast<Eigen::Index>(count));
  for (std::size_t p = 0; p < count; ++p) {
    std::size_t rest = p;
    double w = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const std::size_t k = rest % gh_order_;
      rest /= gh_order_;
      nodes_(static_cast<Eigen::Index>(p), i) = rule.nodes[k];
      w *= rule.weights[k];
    }
    weights_(static_cast<Eigen::Index>(p)) = w;
  }
  if (validate) {
    for (int i = 0; i < 16; ++i) {
      const double t = horizon_ * i / 16.0;
      if (Eigen::LLT<Mat>(sigma(t)).info() != Eigen::Success) {
        throw NotPositiveDefinite("Sigma(t) is not positive definite at t = " + std::to_string(t));
      }
    }
  }
}

GaussianModel GaussianModel::from_json(const nlohmann::json& spec, double horizon) {
  if (!spec.is_object()) throw ConfigError("model must be an object");
  for (const auto& [key, _] : spec.items()) {
    if (key != "N" && key != "g" && key != "f" && key != "gh_order") throw ConfigError("unknown model key '" + key + "'");
  }
  try {
    const auto n = spec.at("N").get<int>();
    const auto gs = spec.value("g", std::vector<std::string>{});
    if (n < 0 || static_cast<std::size_t>(n) != gs.size()) throw ConfigError("model: N must equal the number of g entries");
    std::vector<std::function<double(double)>> g;
    for (const auto& s : gs) g.push_back(parse_g_function(s));
    const auto order = spec.value("gh_order", 32);
    if (order < 1 || order > 128) throw ConfigError("model: gh_order must lie in [1, 128]");
    return GaussianModel(horizon, std::move(g), parse_terminal(spec.at("f").get<std::string>()),
                         static_cast<std::size_t>(order));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  } catch (const NotPositiveDefinite& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

GaussianModel GaussianModel::from_string(const std::string& spec, double horizon) {
  nlohmann::json j = nlohmann::json::object();
  std::stringstream ss(spec);
  std::string item;
  std::map<int, std::string> gs;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("model: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "N") {
        j["N"] = std::stoi(value);
      } else if (key == "f") {
        j["f"] = value;
      } else if (key == "gh_order") {
        j["gh_order"] = std::stoi(value);
      } else if (key.size() > 1 && key[0] == 'g') {
        gs[std::stoi(key.substr(1))] = value;
      } else {
        throw ConfigError("model: unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("model: bad value in '" + item + "'");
    }
  }
  std::vector<std::string> list;
  for (const auto& [idx, s] : gs) {
    if (idx != static_cast<int>(list.size()) + 1) throw ConfigError("model: g entries must be numbered g1..gN");
    list.push_back(s);
  }
  j["g"] = list;
  return from_json(j, horizon);
}

Vec GaussianModel::g_values(double t) const {
  Vec v(dim());
  v[0] = 1.0;
  for (std::size_t j = 0; j < g_.size(); ++j) v[static_cast<Eigen::Index>(j) + 1] = g_[j](t);
  return v;
}

Mat GaussianModel::sigma(double t) const {
  const Eigen::Index d = dim();
  Mat s = Mat::Zero(d, d);
  if (t >= horizon_) return s;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      auto gi = [&](double u) { return i == 0 ? 1.0 : g_[static_cast<std::size_t>(i - 1)](u); };
      auto gj = [&](double u) { return j == 0 ? 1.0 : g_[static_cast<std::size_t>(j - 1)](u); };
      s(i, j) = s(j, i) = adaptive_simpson([&](double u) { return gi(u) * gj(u); }, t, horizon_, 1e-10);
    }
  }
  return s;
}

void GaussianModel::cache_grid(const TimeGrid& grid) {
  for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
    const double t = grid.node(k);
    if (!root_table_.count(t)) root_table_.emplace(t, sqrt_sigma(t));
  }
}

Mat GaussianModel::sqrt_sigma(double t) const {
  if (const auto it = root_table_.find(t); it != root_table_.end()) return it->second;
  const Mat s = sigma(t);
  if (t >= horizon_) return s;
  Eigen::LLT<Mat> llt(s);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Near t = T the Cholesky factor can fail in floating point; fall back to a symmetric root.
  Eigen::SelfAdjointEigenSolver<Mat> eig(s);
  const Vec root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double GaussianModel::density(double t, const Vec& xi) const {
  if (t >= horizon_) throw NotPositiveDefinite("density is undefined at t = T");
  const Mat s = sigma(t);
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("Sigma(t) is not positive definite");
  const Mat l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const Vec z = llt.matrixL().solve(xi);
  const double d = static_cast<double>(dim());
  return std::exp(-0.5 * z.squaredNorm() - 0.5 * log_det - 0.5 * d * std::log(2.0 * std::numbers::pi));
}

double GaussianModel::u_tilde(double t, const Vec& x) const {
  if (x.size() != dim()) throw std::invalid_argument("u_tilde: dimension mismatch");
  if (t >= horizon_) return f_(x);
  const Mat l = sqrt_sigma(t);
  Vec point(dim());
  double acc = 0.0;
  for (Eigen::Index p = 0; p < nodes_.rows(); ++p) {
    point.noalias() = x + l * nodes_.row(p).transpose();
    acc += weights_(p) * f_(point);
  }
  return acc;
}

Vec GaussianModel::path_coordinates(double t, double x, const TimeGrid& grid, const NodeMatrix& psi) const {
  if (psi.rows() != static_cast<Eigen::Index>(grid.n_steps() + 1) || psi.cols() != 1) {
    throw GridMismatch("path_coordinates: psi must be a scalar tail on the grid");
  }
  Vec c(dim());
  c[0] = x;
  const auto n = static_cast<Eigen::Index>(grid.n_steps());
  for (std::size_t j = 0; j < g_.size(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += g_[j](grid.tail_node(static_cast<std::size_t>(i)) + t) * (psi(i + 1, 0) - psi(i, 0));
    }
    acc += g_[j](t) * (x - psi(n, 0));
    c[static_cast<Eigen::Index>(j) + 1] = acc;
  }
  return c;
}

double GaussianModel::u_eval(double t, double x, const TimeGrid& grid, const NodeMatrix& psi) const {
  return u_tilde(t, path_coordinates(t, x, grid, psi));
}

namespace {

template <typename F>
double time_derivative(const F& u, double t, double horizon, double h) {
  if (t + h <= horizon) return (u(t + h) - u(t - h)) / (2.0 * h);
  return (3.0 * u(t) - 4.0 * u(t - h) + u(t - 2.0 * h)) / (2.0 * h);
}

}  // namespace

double GaussianModel::pde_residual(double t, const Vec& x, FdSteps steps) const {
  const double h = steps.h_x;
  const Eigen::Index d = dim();
  const double dt_u = time_derivative([&](double s) { return u_tilde(s, x); }, t, horizon_, steps.h_t);
  const Vec gv = g_values(t);
  const double u0 = u_tilde(t, x);
  double second = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      double dij;
      if (i == j) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        dij = (u_tilde(t, xp) - 2.0 * u0 + u_tilde(t, xm)) / (h * h);
      } else {
        Vec pp = x, pm = x, mp = x, mm = x;
        pp[i] += h, pp[j] += h;
        pm[i] += h, pm[j] -= h;
        mp[i] -= h, mp[j] += h;
        mm[i] -= h, mm[j] -= h;
        dij = (u_tilde(t, pp) - u_tilde(t, pm) - u_tilde(t, mp) + u_tilde(t, mm)) / (4.0 * h * h);
      }
      second += (i == j ? 1.0 : 2.0) * gv[i] * gv[j] * dij;
    }
  }
  return std::abs(dt_u + 0.5 * second);
}

double GaussianModel::a_operator(double t, double x, const TimeGrid& grid, const NodeMatrix& psi, double h_t) const {
  const Vec c = path_coordinates(t, x, grid, psi);
  return time_derivative([&](double s) { return u_tilde(s, c); }, t, horizon_, h_t);
}

double GaussianModel::prop_iv_residual(double t, double x, const TimeGrid& grid, const NodeMatrix& psi,
                                       FdSteps steps) const {
  const double h = steps.h_x;
  const double uxx =
      (u_eval(t, x + h, grid, psi) - 2.0 * u_eval(t, x, grid, psi) + u_eval(t, x - h, grid, psi)) / (h * h);
  return std::abs(a_operator(t, x, grid, psi, steps.h_t) + 0.5 * uxx);
}

Vec GaussianModel::martingale_path(const TimeGrid& grid, const Vec& dw) const {
  const std::size_t n = grid.n_steps();
  if (dw.size() != static_cast<Eigen::Index>(n)) throw GridMismatch("martingale_path: increments do not match grid");
  Vec m(static_cast<Eigen::Index>(n + 1));
  Vec c = Vec::Zero(dim());  // (W, I_1, ..., I_N)
  for (std::size_t k = 0;; ++k) {
    m[static_cast<Eigen::Index>(k)] = u_tilde(grid.node(k), c);
    if (k == n) break;
    const Vec gv = g_values(grid.node(k));
    c += gv * dw[static_cast<Eigen::Index>(k)];
  }
  return m;
}

}  // namespace pathflow
