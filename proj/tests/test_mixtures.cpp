#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "loggap/errors.hpp"
#include "loggap/measure.hpp"
#include "loggap/mixtures.hpp"

using namespace loggap;
using doctest::Approx;

namespace {

double x1(std::span<const double> x) { return x[0]; }

double ball_log(std::span<const double> x, double r) { return x[0] * x[0] + x[1] * x[1] <= r * r ? 0.0 : -INFINITY; }

}  // namespace

TEST_CASE("alpha weight of laplace is |t| + 1") {
  const auto l = laplace_mixture();
  for (double t : {0.0, 0.5, -1.5, 3.0, 10.0, 25.0}) CHECK(alpha_weight(l, t) == Approx(std::abs(t) + 1).epsilon(1e-9));
}

TEST_CASE("a point-mass mixing gives a constant alpha") {
  for (double sigma : {0.5, 1.0, 2.5}) {
    const auto a = atomic_mixture({{sigma, 1.0}});
    const auto g = gaussian_mixture(sigma);
    for (double t : {0.0, 0.7, 2.0, 4.0}) {
      CHECK(alpha_weight(a, t) == Approx(sigma * sigma).epsilon(1e-9));
      CHECK(alpha_weight_from_mixing(a, t) == Approx(sigma * sigma).epsilon(1e-9));
      CHECK(alpha_weight(g, t) == Approx(sigma * sigma).epsilon(1e-7));
    }
  }
}

TEST_CASE("both alpha formulas agree on a two-atom mixture") {
  const auto a = atomic_mixture({{0.5, 0.3}, {2.0, 0.7}});
  for (double t : {0.0, 0.4, 1.1, 3.0}) CHECK(alpha_weight(a, t) == Approx(alpha_weight_from_mixing(a, t)).epsilon(1e-9));
}

TEST_CASE("alpha of nu_{3/2} at zero matches quadrature and sits below the bound") {
  const auto d = nu_p_mixture(1.5);
  // Independent midpoint quadrature of the tail first moment.
  double tail = 0.0;
  const int cells = 400000;
  const double top = 60.0, h = top / cells;
  for (int i = 0; i < cells; ++i) {
    const double u = (i + 0.5) * h;
    tail += u * d.phi(u) * h;
  }
  const double expected = tail / d.phi(0.0);
  CHECK(alpha_weight(d, 0.0) == Approx(expected).epsilon(1e-7));
  CHECK(alpha_weight(d, 0.0) <= 1.0 / (4 * d.phi0 * d.phi0));
}

TEST_CASE("alpha bound") {
  const auto l = laplace_mixture();
  CHECK(alpha_bound(l, 3.0) == Approx(4.0).epsilon(1e-14));
  CHECK(alpha_weight(l, 3.0) == Approx(4.0).epsilon(1e-9));
  const auto g = gaussian_mixture(1.0);
  CHECK(alpha_bound(g, 0.0) == Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(alpha_weight(g, 0.0) <= alpha_bound(g, 0.0));
  for (const auto& d : {l, g, nu_p_mixture(1.5)})
    CHECK(alpha_bound(d, 1.0) - alpha_bound(d, 0.0) == Approx(1.0 / (2 * d.phi0)).epsilon(1e-12));
}

TEST_CASE("refined nu_p bound") {
  SUBCASE("p near 2 is flat in t") {
    for (double t : {0.0, 1.0, 5.0}) CHECK(alpha_bound_nu_p(2.0, t, 1.3) == Approx(2.6));
  }
  SUBCASE("calibrated constant dominates alpha") {
    const auto b = calibrate_alpha_bound_nu_p(1.5);
    const auto d = nu_p_mixture(1.5);
    CHECK(b(0.0) == Approx(b.c));
    CHECK(b(0.0) >= alpha_weight(d, 0.0));
    for (int i = 0; i <= 100; ++i) {
      const double t = b.t_max * i / 100.0;
      CHECK(alpha_weight(d, t) <= b(t) * (1 + 1e-9));
    }
  }
  SUBCASE("tail refinement where t V'(t) >= 2") {
    const auto d = nu_p_mixture(1.5);
    for (double t : {2.0, 3.0, 5.0}) {
      const auto c = tail_refinement_check(d, t);
      REQUIRE(c.applicable);
      CHECK(c.holds);
      CHECK(c.tail <= c.bound);
    }
    CHECK_FALSE(tail_refinement_check(d, 0.2).applicable);
  }
  CHECK_THROWS_AS(calibrate_alpha_bound_nu_p(2.5), Error);
}

TEST_CASE("weighted variance bound") {
  SUBCASE("gaussian product saturates") {
    const auto g = gaussian_mixture(1.0);
    const auto r = weighted_variance_bound({g, g}, nullptr, x1);
    CHECK(r.variance == Approx(1.0).epsilon(1e-3));
    CHECK(r.weighted_energy == Approx(1.0).epsilon(1e-3));
    CHECK(r.holds);
  }
  SUBCASE("laplace product: equality case") {
    const auto l = laplace_mixture();
    const auto r = weighted_variance_bound({l, l}, nullptr, x1, 512);
    CHECK(r.variance == Approx(2.0).epsilon(1e-3));
    CHECK(r.weighted_energy == Approx(2.0).epsilon(1e-3));
    CHECK(r.holds);
  }
  SUBCASE("laplace product restricted to a disc, sine") {
    const auto l = laplace_mixture();
    const auto r = weighted_variance_bound({l, l}, [](std::span<const double> x) { return ball_log(x, 2.0); },
                                           [](std::span<const double> x) { return std::sin(x[0]); });
    CHECK(r.holds);
    CHECK(r.variance < r.weighted_energy * 0.99);
  }
}

TEST_CASE("property: alpha stays below the alpha bound for log-concave members") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MixtureDensity> ds = {laplace_mixture()};
  for (int i = 0; i < 4; ++i) {
    ds.push_back(gaussian_mixture(0.2 + 3 * u(rng)));
    ds.push_back(nu_p_mixture(1.0 + u(rng)));
  }
  for (const auto& d : ds) {
    INFO(d.name);
    for (int k = 0; k < 40; ++k) {
      const double t = 6.0 * u(rng);
      CHECK(alpha_weight(d, t) <= alpha_bound(d, t) + 1e-9);
    }
  }
}

TEST_CASE("property: alpha is even and both formulas agree on random atomic mixings") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 6; ++i) {
    std::vector<MixtureAtom> atoms;
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      atoms.push_back({0.2 + 2 * u(rng), u(rng) + 0.1});
      total += atoms.back().weight;
    }
    for (auto& a : atoms) a.weight /= total;
    const auto d = atomic_mixture(atoms);
    for (int k = 0; k < 20; ++k) {
      const double t = 5.0 * u(rng);
      const double a = alpha_weight(d, t);
      CHECK(alpha_weight(d, -t) == Approx(a).epsilon(1e-12));
      CHECK(alpha_weight_from_mixing(d, t) == Approx(a).epsilon(1e-8));
    }
  }
}

TEST_CASE("property: even quasi-concave indicators are positively correlated") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double p : {1.0, 1.5, 2.0}) {
    const Density mu = build_measure(product_spec({nu_p_spec(p), nu_p_spec(p)}));
    for (int trial = 0; trial < 4; ++trial) {
      const double q1 = 1 + 3 * u(rng), r1 = 0.3 + 2 * u(rng);
      const double q2 = 1 + 3 * u(rng), a = 0.3 + 2 * u(rng), b = 0.3 + 2 * u(rng);
      const ScalarField f = [=](std::span<const double> x) {
        return std::pow(std::abs(x[0]), q1) + std::pow(std::abs(x[1]), q1) <= std::pow(r1, q1) ? 1.0 : 0.0;
      };
      const ScalarField g = [=](std::span<const double> x) {
        return std::pow(std::abs(x[0] / a), q2) + std::pow(std::abs(x[1] / b), q2) <= 1.0 ? 1.0 : 0.0;
      };
      const auto c = correlation_check(mu, f, g, true, 512, 1e-4);
      CHECK(c.holds);
      CHECK(c.lhs >= c.rhs - 1e-4);
    }
  }
}

TEST_CASE("property: even convex and log-concave functions are negatively correlated") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double p : {1.0, 1.5}) {
    const Density mu = build_measure(product_spec({nu_p_spec(p), nu_p_spec(p)}));
    for (int trial = 0; trial < 4; ++trial) {
      const double angle = 2 * std::numbers::pi * u(rng), s = 0.2 + u(rng);
      const double a = std::cos(angle), b = std::sin(angle);
      const ScalarField convex = [=](std::span<const double> x) { return (a * x[0] + b * x[1]) * (a * x[0] + b * x[1]); };
      const ScalarField logconcave = [=](std::span<const double> x) {
        return std::exp(-s * (x[0] * x[0] + x[1] * x[1]));
      };
      const auto c = correlation_check(mu, convex, logconcave, false, 512, 1e-4);
      CHECK(c.holds);
      CHECK(c.lhs <= c.rhs + 1e-4);
    }
  }
}

TEST_CASE("mixture product density carries the perturbation") {
  const auto l = laplace_mixture();
  const Density d = mixture_product_density({l, l}, [](std::span<const double> x) { return ball_log(x, 1.0); });
  CHECK(d.dim == 2);
  CHECK(std::isinf(d.log_at({1.0, 1.0})));
  CHECK(d.log_at({0.3, 0.0}) - d.log_at({0.0, 0.0}) == Approx(-0.3));
}

TEST_CASE("alpha profile JSON lists every requested point") {
  const auto j = alpha_profile_json(laplace_mixture(), {0.0, 1.0, 2.0});
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 3);
  CHECK(j[1]["alpha"].get<double>() == Approx(2.0).epsilon(1e-9));
  CHECK(j[2]["bound"].get<double>() == Approx(3.0).epsilon(1e-12));
}
