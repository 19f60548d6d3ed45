#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "loggap/acceptance.hpp"
#include "loggap/eigensolver.hpp"
#include "loggap/errors.hpp"
#include "loggap/grid.hpp"
#include "loggap/measure.hpp"
#include "loggap/spectral_1d.hpp"
#include "loggap/spectral_nd.hpp"

using namespace loggap;
using doctest::Approx;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

double x1(std::span<const double> x) { return x[0]; }

// Residual of projecting g onto the span of the given eigenvector columns.
double span_residual(const GridOperator& op, const Matrix& basis, const Vector& g) {
  Vector r = g;
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    const Vector b = basis.col(c);
    r -= op.inner(r, b) / op.inner(b, b) * b;
  }
  return std::sqrt(op.inner(r, r) / op.inner(g, g));
}

}  // namespace

TEST_CASE("assembled generator has the structure of a weighted graph laplacian") {
  const GridOperator op = assemble_generator(build_measure(standard_gaussian_spec(2)), 64);
  const SparseMatrix& A = op.stiffness;
  CHECK(op.size() == 64 * 64);
  double asym = 0.0, rowsum = 0.0, scale = 0.0;
  bool offdiag_nonpositive = true;
  Vector sums = Vector::Zero(op.size());
  for (Eigen::Index c = 0; c < A.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) {
      sums[it.row()] += it.value();
      scale = std::max(scale, std::abs(it.value()));
      asym = std::max(asym, std::abs(it.value() - A.coeff(it.col(), it.row())));
      if (it.row() != it.col() && it.value() > 0) offdiag_nonpositive = false;
    }
  rowsum = sums.cwiseAbs().maxCoeff();
  CHECK(asym <= 1e-14 * scale);
  CHECK(rowsum <= 1e-12 * scale);
  CHECK(offdiag_nonpositive);
  CHECK(op.mass.minCoeff() > 0.0);
  const Vector ones = Vector::Ones(op.size());
  CHECK(op.energy(ones) <= 1e-12 * scale);
}

TEST_CASE("indicator densities keep only interior cells") {
  const GridOperator op = assemble_generator(build_measure(uniform_body_spec(LpBall{2, 1.0, 1.0})), 64);
  CHECK(op.size() < 64 * 64);
  CHECK(op.size() > 64 * 64 / 3);
  for (Eigen::Index c = 0; c < op.size(); ++c) {
    const auto x = op.center(c);
    REQUIRE(std::abs(x[0]) + std::abs(x[1]) <= 1.0);
  }
}

TEST_CASE("off-center boxes are refused") {
  const Density g = build_measure(standard_gaussian_spec(2));
  Box b{{-4.0, -4.0}, {5.0, 4.0}};
  try {
    assemble_generator(g, b, {32, 32});
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidSpec);
  }
}

TEST_CASE("2-D gaussian: Hermite spectrum, parity, H^-1 norms and interlacing") {
  const GridOperator op = assemble_generator(build_measure(standard_gaussian_spec(2)), 128);
  const SpectrumReport r = lowest_spectrum(op, 6);
  REQUIRE(r.eigenvalues.size() >= 6);
  const double expect[] = {0, 1, 1, 2, 2, 2};
  CHECK(std::abs(r.eigenvalues[0]) <= 1e-10);
  for (int i = 1; i < 6; ++i) CHECK(r.eigenvalues[i] == Approx(expect[i]).epsilon(1e-2));
  CHECK(r.parity[1] == Parity::Odd);
  CHECK(r.parity[2] == Parity::Odd);
  for (int i = 3; i < 6; ++i) CHECK(r.parity[i] == Parity::Even);

  const auto il = verify_interlacing(r, 2);
  CHECK(il.holds);
  CHECK(il.lambda_even_first == Approx(2.0).epsilon(1e-2));
  CHECK(il.lambda_odd_sorted.back() == Approx(3.0).epsilon(1e-2));

  const auto es = eigenspace_structure(op, r, cube_group_generators(2));
  CHECK(es.multiplicity == 2);
  CHECK(es.span_dimension == 2);
  CHECK(es.claim_holds);

  const Vector f = op.evaluate(x1);
  CHECK(hminus_norm(op, f) == Approx(1.0).epsilon(1e-2));
  CHECK(hminus_norm(op, Vector::Zero(op.size())) == 0.0);
  // -Lu = x1^2 - 1 is solved by u = (x1^2 - 1)/2, so the squared norm is
  // E[(x1^2 - 1)^2]/2 = 1.
  const Vector q = centered(op, op.evaluate([](std::span<const double> x) { return x[0] * x[0] - 1; }));
  CHECK(hminus_norm(op, q) == Approx(1.0).epsilon(1e-2));

  const auto vr = verify_variance_inequality(op, q);
  CHECK(vr.lhs == Approx(2.0).epsilon(1e-2));
  CHECK(vr.rhs == Approx(4.0).epsilon(2e-2));
  CHECK(vr.holds);
  const auto vc = verify_variance_inequality(op, Vector::Constant(op.size(), 3.0));
  CHECK(std::abs(vc.lhs) <= 1e-12);
  CHECK(std::abs(vc.rhs) <= 1e-12);
  CHECK(vc.holds);
}

TEST_CASE("laplace product assembles across the kinks and matches tensorization") {
  const GridOperator op = assemble_generator(build_measure(nu_n_q_spec(Matrix::Zero(2, 2))), 256);
  const auto r = lowest_spectrum(op, 2);
  CHECK(r.eigenvalues[1] == Approx(0.25).epsilon(5e-2));
  CHECK(r.parity[1] == Parity::Odd);
}

TEST_CASE("laplace product: even functions of one coordinate are equality cases of the variance inequality") {
  // With u solving -Lu = f - E f, u is even so u'(0) = 0 and -L u' = f';
  // both sides then equal the integral of u''^2.
  const Density d = build_measure(nu_n_q_spec(Matrix::Zero(2, 2)));
  const ScalarField smoothed_abs = [](std::span<const double> x) { return std::sqrt(x[0] * x[0] + 1.0); };
  double previous_gap = INFINITY;
  for (int res : {128, 256}) {
    const GridOperator op = assemble_generator(d, res);
    const auto vr = verify_variance_inequality(op, centered(op, op.evaluate(smoothed_abs)));
    const double gap = std::abs(vr.lhs - vr.rhs) / vr.lhs;
    CHECK(gap < previous_gap / 3);
    previous_gap = gap;
    if (res == 256) {
      CHECK(vr.holds);
      CHECK(gap <= 1e-2);
    }
  }
}

TEST_CASE("nu^{2,Q} with Q = I/2 has an odd first eigenfunction") {
  const GridOperator op = assemble_generator(build_measure(nu_n_q_spec(diag2(0.5, 0.5))), 96);
  const auto r = lowest_spectrum(op, 3);
  CHECK(r.parity[1] == Parity::Odd);
  CHECK(verify_interlacing(lowest_spectrum(op, 6), 2).holds);
}

TEST_CASE("unit square: Neumann spectrum") {
  const GridOperator op = assemble_generator(build_measure(uniform_body_spec(AxisBox{{0.5, 0.5}})), 64);
  const auto r = lowest_spectrum(op, 6);
  CHECK(r.eigenvalues[1] == Approx(kPi2).epsilon(1e-2));
  CHECK(r.eigenvalues[2] == Approx(kPi2).epsilon(1e-2));
  CHECK(r.multiplicity_groups[static_cast<std::size_t>(r.group_of(1))].size() == 2);
  const Matrix pair = r.eigenvectors.middleCols(1, 2);
  for (int axis = 0; axis < 2; ++axis) {
    const Vector s = op.evaluate([axis](std::span<const double> x) { return std::sin(std::numbers::pi * x[axis]); });
    CHECK(span_residual(op, pair, s) <= 1e-2);
  }
  for (int i = 1; i <= 2; ++i)
    if (r.type_decided[i]) CHECK(r.type_I[i].size() == 1);
  CHECK(verify_interlacing(r, 2).holds);
}

TEST_CASE("eigenspace structure") {
  SUBCASE("cube-symmetric l4 potential") {
    auto spec = with_perturbation(
        uniform_body_spec(AxisBox{{4.0, 4.0}}),
        convex_perturbation([](std::span<const double> x) { return std::pow(x[0], 4) + std::pow(x[1], 4); }, "l4",
                            true, true));
    const GridOperator op = assemble_generator(build_measure(spec), 96);
    const auto r = lowest_spectrum(op, 4);
    const auto es = eigenspace_structure(op, r, cube_group_generators(2));
    CHECK(es.multiplicity == 2);
    CHECK(es.hypothesis_met);
    CHECK(es.claim_holds);
    CHECK(es.basis_error <= 1e-4);
    CHECK(es.max_inner <= 1e-6);
  }
  SUBCASE("anisotropic gaussian with only coordinate flips") {
    const GridOperator op = assemble_generator(build_measure(gaussian_spec(diag2(4, 1))), 96);
    const auto r = lowest_spectrum(op, 4);
    const auto es = eigenspace_structure(op, r, flip_group_generators(2));
    CHECK(es.multiplicity == 1);
    CHECK_FALSE(es.hypothesis_met);
    CHECK(es.status == "hypothesis not met");
  }
}

TEST_CASE("Brascamp-Lieb check") {
  const HessianFn identity = [](std::span<const double> x) {
    return Matrix::Identity(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x.size()));
  };
  SUBCASE("standard gaussian, linear f") {
    const auto r = brascamp_lieb_check(build_measure(standard_gaussian_spec(2)), identity, x1);
    CHECK(r.variance == Approx(1.0).epsilon(1e-3));
    CHECK(r.weighted_energy == Approx(1.0).epsilon(1e-3));
    CHECK(r.holds);
  }
  SUBCASE("quartic correction in 1-D") {
    auto spec = with_perturbation(standard_gaussian_spec(1),
                                  convex_perturbation([](std::span<const double> x) { return std::pow(x[0], 4) / 12; },
                                                      "quartic", true, true));
    const HessianFn hess = [](std::span<const double> x) { return Matrix::Constant(1, 1, 1 + x[0] * x[0]); };
    const auto r = brascamp_lieb_check(build_measure(spec), hess, x1);
    CHECK(r.holds);
    CHECK(r.variance < r.weighted_energy);
  }
  SUBCASE("anisotropic gaussian saturates") {
    const Matrix prec = diag2(0.25, 1.0);
    const HessianFn hess = [prec](std::span<const double>) { return prec; };
    const auto r = brascamp_lieb_check(build_measure(gaussian_spec(diag2(4, 1))), hess,
                                       [](std::span<const double> x) { return x[0] + x[1]; });
    CHECK(r.variance == Approx(5.0).epsilon(1e-3));
    CHECK(r.weighted_energy == Approx(5.0).epsilon(1e-3));
    CHECK(r.holds);
  }
}

TEST_CASE("property: interlacing over a random nu^{2,Q} sweep") {
  const auto suite = nu_q_sweep_suite(6, 17);
  for (const auto& m : suite) {
    const GridOperator op = assemble_generator(build_measure(m.spec), 64);
    const auto r = lowest_spectrum(op, 6);
    INFO(m.label);
    CHECK(verify_interlacing(r, 2).holds);
    CHECK(r.parity[1] == Parity::Odd);
  }
}

TEST_CASE("property: grid gap of a product is the minimum of the factor gaps") {
  Matrix var(1, 1);
  var(0, 0) = 0.64;
  const auto a = gaussian_spec(var);
  const auto b = uniform_interval_spec(-0.9, 0.9);
  const double l1 = poincare_1d(build_measure(a)).lambda1;
  const double l2 = poincare_1d(build_measure(b)).lambda1;
  const auto op = assemble_generator(build_measure(product_spec({b, a})), 128);
  const auto r = lowest_spectrum(op, 3);
  CHECK(r.eigenvalues[1] == Approx(std::min(l1, l2)).epsilon(1e-2));
}

TEST_CASE("property: H^-1 norm by pseudo-inverse agrees with direct ascent") {
  const GridOperator op = assemble_generator(build_measure(nu_n_q_spec(diag2(0.3, 0.1))), 32);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 3; ++trial) {
    const double a = g(rng), b = g(rng), c = g(rng);
    const Vector f = centered(op, op.evaluate([=](std::span<const double> x) {
      return a * x[0] + b * std::sin(x[1]) + c * x[0] * x[0] * x[1];
    }));
    const double direct = hminus_norm(op, f);
    const double ascent = hminus_norm_ascent(op, f, 200);
    CHECK(ascent == Approx(direct).epsilon(5e-3));
  }
}

TEST_CASE("property: unconditional nonincreasing perturbations do not lower the gap") {
  const auto base = product_spec({nu_p_spec(1.5), nu_p_spec(1.5)});
  const double lambda_base = lowest_spectrum(assemble_generator(build_measure(base), 96), 2).eigenvalues[1];
  const std::vector<PerturbationSpec> perts = {
      indicator_perturbation(LpBall{2, 2.0, 1.2}),
      indicator_perturbation(LpBall{2, 1.0, 1.5}),
      quadratic_perturbation(diag2(0.5, 0.2)),
  };
  for (const auto& p : perts) {
    const auto op = assemble_generator(build_measure(with_perturbation(base, p)), 96);
    CHECK(lowest_spectrum(op, 2).eigenvalues[1] >= lambda_base * (1 - 1e-2));
  }
}

TEST_CASE("property: refinement moves lambda_1 consistently with the observed order") {
  const Density d = build_measure(nu_n_q_spec(diag2(0.4, 0.2)));
  auto lambda = [&](int res) { return lowest_spectrum(assemble_generator(d, res), 2).eigenvalues[1]; };
  const double l32 = lambda(32), l64 = lambda(64), l128 = lambda(128);
  const double err = std::abs(l64 - l32) / 3.0;
  CHECK(std::abs(l128 - l64) <= 4.0 * err + 1e-12);
}

TEST_CASE("property: unconditional measures have no fully even lambda_1 eigenvector") {
  const std::vector<MeasureSpec> specs = {
      nu_n_q_spec(diag2(0.7, 0.1)),
      with_perturbation(product_spec({nu_p_spec(1.25), nu_p_spec(1.75)}), indicator_perturbation(LpBall{2, 1.0, 1.4})),
      with_perturbation(product_spec({laplace_spec(), uniform_interval_spec(-2.0, 2.0)}),
                        quadratic_perturbation(diag2(0.3, 0.6))),
      uniform_body_spec(LpBall{2, 1.5, 1.0}),
  };
  for (const auto& s : specs) {
    const Density d = build_measure(s);
    REQUIRE(d.unconditional);
    const auto r = lowest_spectrum(assemble_generator(d, 64), 4);
    for (int i : r.multiplicity_groups[static_cast<std::size_t>(r.group_of(1))]) {
      const auto idx = static_cast<std::size_t>(i);
      CHECK_FALSE((r.type_decided[idx] && r.type_I[idx].size() == 2));
    }
  }
}

TEST_CASE("eigensolver reproduces the Neumann path-graph spectrum") {
  const int n = 400;
  std::vector<Eigen::Triplet<double, std::int64_t>> trips;
  for (int i = 0; i + 1 < n; ++i) {
    trips.emplace_back(i, i + 1, -1.0);
    trips.emplace_back(i + 1, i, -1.0);
    trips.emplace_back(i, i, 1.0);
    trips.emplace_back(i + 1, i + 1, 1.0);
  }
  SparseMatrix B(n, n);
  B.setFromTriplets(trips.begin(), trips.end());
  const auto r = smallest_eigenpairs(B, Vector::Ones(n), 5);
  for (int k = 1; k <= 5; ++k)
    CHECK(r.values[static_cast<std::size_t>(k)] ==
          Approx(2 - 2 * std::cos(k * std::numbers::pi / n)).epsilon(1e-9));
}

TEST_CASE("eigensolver converges when stiff tails dominate the operator norm") {
  Matrix K(2, 2);
  K << 1.0, 0.3, 0.3, 1.0;
  const auto spec = with_perturbation(
      gaussian_spec(K.inverse()),
      convex_perturbation([](std::span<const double> x) { return std::pow(x[0], 4) / 12; }, "quartic", true, false));
  const Density d = build_measure(spec);
  const double l64 = lowest_spectrum(assemble_generator(d, 64), 2).eigenvalues[1];
  const double l128 = lowest_spectrum(assemble_generator(d, 128), 2).eigenvalues[1];
  CHECK(l64 == Approx(l128).epsilon(1e-3));
}
