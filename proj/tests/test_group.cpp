#include <doctest.h>

#include <random>

#include "pathflow/group.hpp"

using namespace pathflow;

namespace {

Mat rotation(double t) {
  Mat r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Vec random_vec(std::mt19937_64& rng, Eigen::Index m) {
  std::normal_distribution<double> n;
  Vec v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = n(rng);
  return v;
}

// F0(x) = <v, x>, H0 = 0.
GroupFunctional linear_group(const Vec& v) {
  SmoothScalar f0{[v](const Vec& x) { return v.dot(x); }, [v](const Vec&) { return v; },
                  [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); }};
  TimeSmoothScalar h0{[](double, const Vec&) { return 0.0; }, [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); },
                      [](double, const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); }};
  return GroupFunctional("linear", rotation_generator(), f0, h0);
}

}  // namespace

TEST_CASE("matrix exponential") {
  for (double t : {0.0, 0.3, -1.7, 6.0}) {
    CHECK((matrix_exp(rotation_generator(), t) - rotation(t)).cwiseAbs().maxCoeff() <= 1e-13);
  }
  Mat nil(2, 2);
  nil << 0.0, 1.0, 0.0, 0.0;
  Mat expected(2, 2);
  expected << 1.0, 2.5, 0.0, 1.0;
  CHECK((matrix_exp(nil, 2.5) - expected).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(matrix_exp(Mat::Identity(3, 3), 0.0).isIdentity(0.0));
  const Mat diag = Vec::LinSpaced(3, -1.0, 1.0).asDiagonal();
  CHECK((matrix_exp(diag).diagonal() - Vec(Vec::LinSpaced(3, -1.0, 1.0).array().exp())).norm() <= 1e-14);
}

TEST_CASE("rotation-invariant functional") {
  const GroupFunctionalPtr f = make_group_functional("group:invariant");
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_vec(rng, 2);
    const double t = 0.05 * i;
    CHECK(f->eval(t, x) == doctest::Approx(x.squaredNorm()).epsilon(1e-13));
    const GroupBundle b = f->bundle(t, x);
    CHECK((b.grad - 2.0 * x).norm() <= 1e-13);
    CHECK((b.hess - 2.0 * Mat::Identity(2, 2)).norm() <= 1e-13);
    CHECK(b.extension_G == 0.0);
  }
}

TEST_CASE("pure running cost") {
  // F(t, x) = int_0^t |e^{-(t-s)A} x|^2 ds = t |x|^2.
  const GroupFunctionalPtr f = make_group_functional("group:normsq");
  std::mt19937_64 rng(32);
  const Vec x = random_vec(rng, 2);
  for (double t : {0.0, 0.25, 1.0}) {
    CHECK(f->eval(t, x) == doctest::Approx(t * x.squaredNorm()).epsilon(1e-12));
    CHECK(f->extension(t, x) == doctest::Approx(x.squaredNorm()));
  }
}

TEST_CASE("time derivative of a linear functional under rotation") {
  const Vec v = (Vec(2) << 0.7, -1.1).finished();
  const GroupFunctional f = linear_group(v);
  const Mat a = rotation_generator();
  std::mt19937_64 rng(33);
  for (int i = 0; i < 10; ++i) {
    const Vec x = random_vec(rng, 2);
    const double t = 0.1 + 0.08 * i;
    CHECK(f.eval(t, x) == doctest::Approx(v.dot(rotation(-t) * x)).epsilon(1e-13));
    const double analytic = -v.dot(rotation(-t) * a * x);
    const double h = 1e-5;
    const double fd = (f.eval(t + h, x) - f.eval(t - h, x)) / (2.0 * h);
    CHECK(fd == doctest::Approx(analytic).epsilon(1e-8));
    CHECK(std::abs(group_cancellation_defect(f, t, x)) <= 1e-8);
  }
}

TEST_CASE("catalogue bundles against finite differences") {
  std::mt19937_64 rng(34);
  for (const std::string name : {"group:rotation", "group:invariant", "group:normsq"}) {
    const GroupFunctionalPtr f = make_group_functional(name);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double t = 0.02 * i;
      worst = std::max(worst, group_fd_check(*f, t, random_vec(rng, 2), random_vec(rng, 2)));
    }
    INFO(name);
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("the derivative by the chain rule through the flow") {
  // <DF(t,x), h> = <DF0(e^{-tA}x), e^{-tA}h> + int_0^t <DH0(s, e^{-(t-s)A}x), e^{-(t-s)A}h> ds
  // evaluated here with an independent fine trapezoid.
  const GroupFunctionalPtr f = make_group_functional("group:rotation");
  auto df0 = [](const Vec& y) {
    return (Vec(2) << std::cos(y[0]) + 0.5 * y[1], 0.5 * y[0] + 0.5 * y[1]).finished();
  };
  auto dh0 = [](double s, const Vec& y) {
    return (Vec(2) << 0.5 * std::cos(s) * y[1] - 0.25 * std::sin(y[0]), 0.5 * std::cos(s) * y[0] + 0.2).finished();
  };
  std::mt19937_64 rng(35);
  const Vec x = random_vec(rng, 2), h = random_vec(rng, 2);
  const double t = 0.8;
  double integral = 0.0;
  const int m = 4000;
  for (int i = 0; i <= m; ++i) {
    const double s = t * i / m;
    const double w = (i == 0 || i == m) ? 0.5 : 1.0;
    const Mat e = rotation(-(t - s));
    integral += w * (t / m) * dh0(s, e * x).dot(e * h);
  }
  const double expected = df0(rotation(-t) * x).dot(rotation(-t) * h) + integral;
  CHECK(f->bundle(t, x).grad.dot(h) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("cancellation on the catalogue") {
  std::mt19937_64 rng(36);
  for (const std::string name : {"group:rotation", "group:invariant", "group:normsq"}) {
    const GroupFunctionalPtr f = make_group_functional(name);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double t = 0.01 + 0.019 * i;
      const Vec x = random_vec(rng, 2);
      worst = std::max(worst, std::abs(group_cancellation_defect(*f, t, x)) / (1.0 + std::abs(f->extension(t, x))));
    }
    INFO(name);
    CHECK(worst <= 1e-6);
  }
  CHECK_THROWS(make_group_functional("group:unknown"));
  CHECK(is_group_functional_name("group:rotation"));
  CHECK_FALSE(is_group_functional_name("integral:gsin"));
}
