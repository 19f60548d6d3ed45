#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "loggap/errors.hpp"
#include "loggap/measure.hpp"
#include "loggap/spectral_1d.hpp"

using namespace loggap;
using doctest::Approx;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

Density custom_1d(LogDensityFn f, double half_width) {
  Density d;
  d.dim = 1;
  d.log_density = std::move(f);
  d.support_box = Box::cube(1, half_width);
  return d;
}

}  // namespace

TEST_CASE("uniform interval gives lambda1 = pi^2") {
  const auto s = solve_sturm_liouville(build_measure(uniform_interval_spec(-0.5, 0.5)), -0.5, 0.5, 4096, 3);
  CHECK(s.eigenvalues[1] == Approx(kPi2).epsilon(5e-3));
}

TEST_CASE("standard gaussian gives the Hermite spectrum") {
  const auto s = solve_sturm_liouville(build_measure(standard_gaussian_spec(1)), -10, 10, 4096, 4);
  CHECK(s.eigenvalues[1] == Approx(1.0).epsilon(2e-3));
  CHECK(s.eigenvalues[2] == Approx(2.0).epsilon(5e-3));
}

TEST_CASE("laplace on [-40,40] lies in the truncation bracket") {
  const auto s = solve_sturm_liouville(build_measure(laplace_spec()), -40, 40, 8192, 2);
  CHECK(s.eigenvalues[1] >= 0.25);
  CHECK(s.eigenvalues[1] <= 0.2625);
}

TEST_CASE("spectrum invariants: kernel and orthonormality") {
  for (const auto& spec : {laplace_spec(), standard_gaussian_spec(1), nu_p_spec(1.5), uniform_interval_spec(-1, 2)}) {
    const Density d = build_measure(spec);
    const auto w = d.support_box;
    const auto s = solve_sturm_liouville(d, std::max(w.lo[0], -20.0), std::min(w.hi[0], 20.0), 1024, 5);
    CHECK(s.eigenvalues[0] <= 1e-10 * s.eigenvalues[1]);
    for (std::size_t i = 1; i < s.eigenvalues.size(); ++i) CHECK(s.eigenvalues[i] >= s.eigenvalues[i - 1]);
    for (std::size_t a = 0; a < s.eigenvectors.size(); ++a)
      for (std::size_t b = 0; b < s.eigenvectors.size(); ++b) {
        double ip = 0.0;
        for (std::size_t c = 0; c < s.weights.size(); ++c) ip += s.weights[c] * s.eigenvectors[a][c] * s.eigenvectors[b][c];
        CHECK(std::abs(ip - (a == b ? 1.0 : 0.0)) <= 1e-8);
      }
  }
}

TEST_CASE("vanishing weight inside the window is a SingularWeight error") {
  const Density d = build_measure(uniform_interval_spec(-0.5, 0.5));
  try {
    solve_sturm_liouville(d, -1.0, 1.0, 256, 2);
    FAIL("expected SingularWeight");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularWeight);
  }
}

TEST_CASE("poincare_1d reproduces the laplace constant") {
  const auto r = poincare_1d(build_measure(laplace_spec()));
  CHECK(r.cp == Approx(4.0).epsilon(5e-2));
  CHECK(r.error >= 0.0);
}

TEST_CASE("p = 4 diagonal scaling multiplies C_P by n^{1-2/p}") {
  auto cp = [](int n) {
    const double m = std::pow(static_cast<double>(n), 0.5 - 0.25);
    return poincare_1d(build_measure(with_scale(nu_p_spec(4.0), {m}))).cp;
  };
  CHECK(cp(16) / cp(1) == Approx(4.0).epsilon(2e-2));
}

TEST_CASE("tilted nu_{1,0.9} has a much larger constant than nu_1") {
  const auto tilted = poincare_1d(build_measure(tilted_nu_p_spec(1.0, 0.9)));
  CHECK(tilted.cp > 5.0 * 4.0);
}

TEST_CASE("bobkov bracket") {
  const auto [lo, hi] = bobkov_bracket(build_measure(laplace_spec()));
  CHECK(lo == Approx(1.0 / 3.0));
  CHECK(hi == Approx(4.0));
  const auto [glo, ghi] = bobkov_bracket(build_measure(standard_gaussian_spec(1)));
  CHECK(glo == Approx(2 * std::numbers::pi / 12));
  CHECK(ghi == Approx(2 * std::numbers::pi));
  CHECK(glo <= 1.0);
  CHECK(1.0 <= ghi);
  const auto [ulo, uhi] = bobkov_bracket(build_measure(uniform_interval_spec(-0.5, 0.5)));
  CHECK(ulo == Approx(1.0 / 12));
  CHECK(uhi == Approx(1.0));
  CHECK(ulo <= 1 / kPi2);
}

TEST_CASE("bobkov bracket needs a normalized density") {
  Density d = custom_1d([](std::span<const double> t) { return -t[0] * t[0]; }, 10);
  try {
    bobkov_bracket(d);
    FAIL("expected NotNormalized");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotNormalized);
  }
}

TEST_CASE("conditional gaps") {
  const std::vector<double> origin{0.0, 0.0}, off{0.0, 1.3};
  CHECK(conditional_gap(build_measure(standard_gaussian_spec(2)), 0, off) == Approx(1.0).epsilon(5e-3));
  CHECK(conditional_gap(build_measure(nu_n_q_spec(Matrix::Zero(2, 2))), 1, origin) == Approx(0.25).epsilon(5e-2));
  Matrix precision(2, 2);
  precision << 1.0, 0.5, 0.5, 1.0;
  const Density g = build_measure(gaussian_spec(precision.inverse()));
  CHECK(conditional_gap(g, 0, off) == Approx(1.0).epsilon(5e-3));
}

TEST_CASE("property: C_P of a truncation grows with the window") {
  const Density d = build_measure(laplace_spec());
  double prev = 0.0;
  for (double w : {5.0, 10.0, 20.0, 40.0}) {
    Poincare1DOptions o;
    o.window = Box::cube(1, w);
    o.max_doublings = 0;
    o.tolerance = 1e9;
    const double cp = poincare_1d(d, o).cp;
    CHECK(cp <= 4.0 * (1 + 1e-3));
    CHECK(cp >= prev * (1 - 1e-6));
    prev = cp;
  }
}

TEST_CASE("property: bounded perturbations obey the oscillation bound") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const double s = 0.2 + u(rng), freq = 0.5 + 2 * u(rng), sd = 0.5 + u(rng);
    const Density base = custom_1d([sd](std::span<const double> t) { return -t[0] * t[0] / (2 * sd * sd); }, 12 * sd);
    // V = s sin(freq t) has oscillation 2s.
    const Density pert = custom_1d(
        [sd, s, freq](std::span<const double> t) { return -t[0] * t[0] / (2 * sd * sd) + s * std::sin(freq * t[0]); },
        12 * sd);
    const double cp_base = poincare_1d(base).cp, cp_pert = poincare_1d(pert).cp;
    CHECK(cp_pert <= cp_base * std::exp(2 * s) * (1 + 1e-2));
  }
}

TEST_CASE("property: even unimodal perturbations do not increase C_P") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const double p = 1.0 + u(rng);
    const double a = 0.05 + 2 * u(rng), r = 0.3 + 3 * u(rng);
    const double base = poincare_1d(build_measure(nu_p_spec(p))).cp;
    Matrix A(1, 1);
    A(0, 0) = a;
    const double quad = poincare_1d(build_measure(with_perturbation(nu_p_spec(p), quadratic_perturbation(A)))).cp;
    const double ind =
        poincare_1d(build_measure(with_perturbation(nu_p_spec(p), indicator_perturbation(AxisBox{{r}}))), {}).cp;
    CHECK(quad <= base * (1 + 1e-2));
    CHECK(ind <= base * (1 + 1e-2));
  }
}

TEST_CASE("property: dilation by lambda multiplies C_P by lambda^2") {
  for (double lambda : {0.5, 1.7, 3.0}) {
    const double base = poincare_1d(build_measure(nu_p_spec(1.5))).cp;
    const double scaled = poincare_1d(build_measure(with_scale(nu_p_spec(1.5), {lambda}))).cp;
    CHECK(scaled == Approx(lambda * lambda * base).epsilon(1e-2));
  }
}

TEST_CASE("property: shifting the log-density leaves C_P unchanged") {
  const double a = poincare_1d(custom_1d([](std::span<const double> t) { return -std::abs(t[0]); }, 60)).cp;
  const double b = poincare_1d(custom_1d([](std::span<const double> t) { return -std::abs(t[0]) + 250.0; }, 60)).cp;
  CHECK(a == Approx(b).epsilon(1e-12));
}

TEST_CASE("1-D results serialize with the documented keys") {
  const auto r = poincare_1d(build_measure(standard_gaussian_spec(1)));
  const Json j = to_json(r);
  for (const char* key : {"lambda", "cp", "error", "window", "nodes"}) CHECK(j.contains(key));
}
