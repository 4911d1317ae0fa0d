#include <doctest.h>

#include <cmath>
#include <limits>

#include "pathflow/errors.hpp"
#include "pathflow/rng.hpp"
#include "pathflow/simulate.hpp"
#include "pathflow/verify.hpp"

using namespace pathflow;

TEST_CASE("Philox4x32-10 known answers") {
  using C = Philox4x32Counter;
  using K = Philox4x32Key;
  CHECK(philox4x32(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniforms and inverse normal CDF") {
  CHECK(uniform_open(0, 0) > 0.0);
  CHECK(uniform_open(0xffffffffu, 0xffffffffu) < 1.0);
  CHECK(inverse_normal_cdf(0.5) == 0.0);
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(inverse_normal_cdf(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-13));
  for (double u : {1e-6, 0.1, 0.3}) CHECK(inverse_normal_cdf(u) == doctest::Approx(-inverse_normal_cdf(1.0 - u)).epsilon(1e-10));
}

TEST_CASE("counter stream is a pure function of its coordinates") {
  const CounterNormal a(42), b(42), c(43);
  CHECK(a.normal(7, 3, 1) == b.normal(7, 3, 1));
  CHECK(a.normal(7, 3, 1) != a.normal(7, 3, 0));
  CHECK(a.normal(7, 3, 1) != c.normal(7, 3, 1));
  CHECK(a.normal(1ull << 40, 3, 1) != a.normal(0, 3, 1));
}

TEST_CASE("Brownian increments") {
  const TimeGrid g(1.0, 1000);
  const BrownianDriver d1 = sample_brownian(g, 2, 9, 4), d2 = sample_brownian(g, 2, 9, 4);
  CHECK(d1.increments() == d2.increments());
  CHECK(d1.increments() != sample_brownian(g, 2, 9, 5).increments());

  double s = 0.0, s2 = 0.0;
  std::size_t count = 0;
  for (std::uint64_t p = 0; p < 100; ++p) {
    const NodeMatrix inc = sample_brownian(g, 1, 17, p).increments();
    for (Eigen::Index l = 0; l < inc.rows(); ++l) {
      s += inc(l, 0);
      s2 += inc(l, 0) * inc(l, 0);
      ++count;
    }
  }
  const double n = static_cast<double>(count);
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(count == 100000);
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(g.dt() / n));
  CHECK(std::abs(var - g.dt()) <= 3.0 * g.dt() * std::sqrt(2.0 / n));

  const NodeMatrix w = d1.path();
  CHECK(w.row(0).isZero(0.0));
  CHECK((w.row(1000) - d1.increments().colwise().sum()).norm() <= 1e-12);
}

TEST_CASE("coarsening and refinement") {
  const TimeGrid g(1.0, 64);
  const BrownianDriver fine = sample_brownian(g, 2, 3, 0);
  const BrownianDriver coarse = fine.coarsened();
  CHECK(coarse.grid().n_steps() == 32);
  for (Eigen::Index l = 0; l < 32; ++l) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      CHECK(coarse.increments()(l, c) == fine.increments()(2 * l, c) + fine.increments()(2 * l + 1, c));
    }
  }
  const BrownianDriver c8 = fine.coarsened_to(TimeGrid(1.0, 8));
  CHECK(c8.grid().n_steps() == 8);
  CHECK((c8.path().row(8) - fine.path().row(64)).norm() <= 1e-12);
  CHECK_THROWS(fine.coarsened_to(TimeGrid(1.0, 24)));

  const BrownianDriver refined = coarse.refined(3, 0);
  CHECK(refined.grid().n_steps() == 64);
  for (Eigen::Index l = 0; l < 32; ++l) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double parent = coarse.increments()(l, c);
      const double sum = refined.increments()(2 * l, c) + refined.increments()(2 * l + 1, c);
      CHECK(std::abs(sum - parent) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(parent)));
    }
  }
  CHECK(refined.increments() == coarse.refined(3, 0).increments());

  // Bridge midpoints have the right fine-scale variance.
  double s2 = 0.0;
  std::size_t count = 0;
  for (std::uint64_t p = 0; p < 200; ++p) {
    const NodeMatrix inc = sample_brownian(TimeGrid(1.0, 250), 1, 5, p).refined(6, p).increments();
    for (Eigen::Index l = 0; l < inc.rows(); ++l, ++count) s2 += inc(l, 0) * inc(l, 0);
  }
  const double dt_fine = 1.0 / 500.0;
  CHECK(std::abs(s2 / static_cast<double>(count) - dt_fine) <= 3.0 * dt_fine * std::sqrt(2.0 / static_cast<double>(count)));
}

TEST_CASE("Euler: trivial coefficients") {
  const TimeGrid g(1.0, 50);
  SdeModel still{"still", 2, 2, Vec::Constant(2, 0.4),
                 [](const WindowView& w) -> Vec { return Vec::Zero(w.dim()); },
                 [](const WindowView& w) -> Mat { return Mat::Zero(w.dim(), w.dim()); }};
  const BrownianDriver d = sample_brownian(g, 2, 1, 0);
  const NodeMatrix y = euler_pathdep(still, d);
  CHECK((y.array() - 0.4).abs().maxCoeff() == 0.0);

  const NodeMatrix b = euler_pathdep(make_sde("brownian", 2, 0.4), d);
  CHECK((b.array() - 0.4 - d.path().array()).abs().maxCoeff() <= 1e-13);
}

TEST_CASE("Euler restart from a window reproduces the path") {
  const TimeGrid g(1.0, 64);
  const SdeModel m = make_sde("window-mean-mult", 1, 0.8);
  const BrownianDriver d = sample_brownian(g, 1, 12, 1);
  const NodeMatrix y = euler_pathdep(m, d);
  const WindowPath start(g, 20, y.topRows(21), y.row(20).transpose());
  CHECK(euler_pathdep(m, d, start) == y);
}

TEST_CASE("Euler aborts on overflow") {
  const TimeGrid g(1.0, 20);
  SdeModel blow{"blow", 1, 1, Vec::Constant(1, 1.0),
                [](const WindowView& w) -> Vec { return 1e300 * Vec(w.terminal()); },
                [](const WindowView&) -> Mat { return Mat::Zero(1, 1); }};
  CHECK_THROWS_AS(euler_pathdep(blow, sample_brownian(g, 1, 1, 0)), NonFinite);
}

TEST_CASE("Euler strong order on the multiplicative window-mean model") {
  const TimeGrid ref_grid(1.0, 1024);
  const SdeModel m = make_sde("window-mean-mult", 1, 1.0);
  const std::vector<std::size_t> ns{16, 32, 64, 128};
  std::vector<double> sq(ns.size(), 0.0);
  const std::size_t paths = 300;
  for (std::uint64_t p = 0; p < paths; ++p) {
    const BrownianDriver fine = sample_brownian(ref_grid, 1, 99, p);
    const double ref = euler_pathdep(m, fine)(1024, 0);
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const TimeGrid g(1.0, ns[i]);
      const double e = euler_pathdep(m, fine.coarsened_to(g))(static_cast<Eigen::Index>(ns[i]), 0) - ref;
      sq[i] += e * e;
    }
  }
  std::vector<double> rms, x;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    rms.push_back(std::sqrt(sq[i] / paths));
    x.push_back(static_cast<double>(ns[i]));
  }
  const double slope = loglog_fit(x, rms).first;
  INFO("slope " << slope);
  CHECK(-slope >= 0.35);
  CHECK(-slope <= 0.7);
}

TEST_CASE("lifted process") {
  const TimeGrid g(1.0, 40);
  const SdeModel m = make_sde("window-mean", 1, -0.2);
  const NodeMatrix y = euler_pathdep(m, sample_brownian(g, 1, 4, 2));
  const ProductState x0 = lift_process(g, y, 0);
  CHECK(x0.head[0] == -0.2);
  CHECK((x0.tail.array() + 0.2).abs().maxCoeff() == 0.0);
  for (std::size_t k = 1; k <= 40; k += 7) {
    const ProductState x = lift_process(g, y, k);
    CHECK(in_tilde_E(x));
    const WindowPath back = restrict_to(k, x);
    CHECK(back.values == y.topRows(static_cast<Eigen::Index>(k + 1)));
    for (std::size_t j = 40 - k; j <= 40; ++j) {
      // X2(t)(r) = y(t + r).
      CHECK(x.tail(static_cast<Eigen::Index>(j), 0) == y(static_cast<Eigen::Index>(k + j - 40), 0));
    }
  }
}

TEST_CASE("mild group process") {
  const TimeGrid g(2.0, 80);
  const Mat a = rotation_generator();
  const Vec x0 = (Vec(2) << 1.0, -0.5).finished();

  SUBCASE("deterministic flow") {
    const GroupSdeModel m{a, x0, {}, {}};
    const NodeMatrix x = group_mild_process(m, sample_brownian(g, 2, 1, 0));
    for (std::size_t l = 0; l <= 80; l += 10) {
      const double t = g.node(l);
      const Vec expected = (Vec(2) << std::cos(t) * 1.0 + std::sin(t) * 0.5, std::sin(t) * 1.0 - std::cos(t) * 0.5).finished();
      CHECK((x.row(static_cast<Eigen::Index>(l)).transpose() - expected).norm() <= 1e-12);
    }
  }
  SUBCASE("zero generator is plain Euler accumulation") {
    const GroupSdeModel m{Mat::Zero(2, 2), x0, [](double, const Vec& x) { return Vec(-0.3 * x); },
                          [](double, const Vec& x) { return Mat(Mat::Identity(2, 2) * (1.0 + 0.1 * x[0])); }};
    const BrownianDriver d = sample_brownian(g, 2, 8, 0);
    const NodeMatrix x = group_mild_process(m, d);
    Vec y = x0;
    for (std::size_t l = 0; l < 80; ++l) {
      y = y + m.drift(0.0, y) * g.dt() + m.diffusion(0.0, y) * d.increment(l).transpose();
    }
    CHECK((x.row(80).transpose() - y).norm() <= 1e-12);
  }
  SUBCASE("late start repeats x0") {
    const GroupSdeModel m{a, x0, {}, {}};
    const NodeMatrix x = group_mild_process(m, sample_brownian(g, 2, 1, 0), 30);
    CHECK(x.row(0).transpose() == x0);
    CHECK(x.row(30).transpose().isApprox(x0, 1e-14));
    CHECK((x.row(31).transpose() - matrix_exp(a, g.dt()) * x0).norm() <= 1e-12);
  }
  SUBCASE("Ito correction for the squared norm") {
    const GroupSdeModel m{a, x0, {}, [](double, const Vec&) { return Mat(Mat::Identity(2, 2)); }};
    const GroupPropagator prop(a, g);
    std::vector<double> defect(4000);
    for (std::size_t p = 0; p < defect.size(); ++p) {
      const NodeMatrix x = group_mild_process(m, prop, sample_brownian(g, 2, 55, p));
      defect[p] = x.row(80).squaredNorm() - x0.squaredNorm() - 2.0 * g.horizon();
    }
    const MonteCarloEstimate e = summarize(defect);
    CHECK(std::abs(e.mean) <= 3.0 * e.std_error);
  }
}
