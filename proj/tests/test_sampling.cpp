#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "loggap/errors.hpp"
#include "loggap/measure.hpp"
#include "loggap/parallel.hpp"
#include "loggap/sampling.hpp"

using namespace loggap;
using doctest::Approx;

namespace {

// |C_ij - target_ij| <= 3 stderr for every entry.
void check_within_3se(const CovEstimate& c, const Matrix& target) {
  for (Eigen::Index i = 0; i < c.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < c.matrix.cols(); ++j) {
      INFO("entry " << i << "," << j << " value " << c.matrix(i, j) << " se " << c.standard_error(i, j));
      CHECK(std::abs(c.matrix(i, j) - target(i, j)) <= 3 * c.standard_error(i, j));
    }
}

Matrix eye(int n) { return Matrix::Identity(n, n); }

}  // namespace

TEST_CASE("section specs validate their basis") {
  const auto full = SectionSpec::full(3, 1.0);
  CHECK(full.d() == 3);
  const std::vector<double> inside{0.2, 0.3, 0.4}, outside{0.5, 0.5, 0.1};
  CHECK(full.contains(inside));
  CHECK_FALSE(full.contains(outside));
  const auto plane = SectionSpec::random(4, 2, 1.0, 9);
  CHECK((plane.basis * plane.basis.transpose() - eye(2)).cwiseAbs().maxCoeff() <= 1e-12);
  SectionSpec bad = full;
  bad.basis(0, 0) = 2.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("hit-and-run on B_1^2 reproduces Cov = I/6") {
  const auto batch = run_hit_and_run(SectionSpec::full(2, 1.0), 100000, 42);
  const auto c = covariance(batch);
  check_within_3se(c, eye(2) / 6.0);
  CHECK(c.trace == Approx(1.0 / 3.0).epsilon(3e-2));
  CHECK(batch.audit_passed);
  for (double e : batch.ess) CHECK(e <= static_cast<double>(batch.samples.rows()));
}

TEST_CASE("hit-and-run on the euclidean ball reproduces Cov = I/(d+2)") {
  for (int d : {2, 3}) {
    const auto c = covariance(run_hit_and_run(SectionSpec::full(d, 2.0), 100000, 100 + d));
    check_within_3se(c, eye(d) / (d + 2.0));
  }
}

TEST_CASE("hit-and-run on a 2-plane section of B_1^4 stays inside") {
  const auto body = SectionSpec::random(4, 2, 1.0, 3);
  const auto batch = run_hit_and_run(body, 20000, 5);
  for (Eigen::Index r = 0; r < batch.samples.rows(); r += 97) {
    const Vector y = batch.samples.row(r);
    REQUIRE(body.contains(std::span<const double>(y.data(), 2)));
  }
  const auto c = covariance(batch);
  CHECK(c.op_norm > 0.0);
  CHECK(c.op_norm >= c.trace / 2);
}

TEST_CASE("MALA on a 4-D standard gaussian reproduces the identity") {
  MalaOptions o;
  o.seed = 7;
  const auto batch = run_mala(build_measure(standard_gaussian_spec(4)), o);
  CHECK(batch.acceptance >= 0.5);
  CHECK(batch.acceptance <= 0.6);
  CHECK(batch.burn_in == o.steps / 10);
  const auto c = covariance(batch);
  check_within_3se(c, eye(4));
  CHECK(c.op_norm == Approx(1.0).epsilon(0.1));
}

TEST_CASE("MALA on the laplace product has coordinate variance 2") {
  MalaOptions o;
  o.seed = 11;
  const auto batch = run_mala(build_measure(product_spec({laplace_spec(), laplace_spec()})), o);
  CHECK(batch.smoothing > 0.0);
  const auto c = covariance(batch);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(c.matrix(i, i) - 2.0) <= 3 * c.standard_error(i, i));
}

TEST_CASE("MALA runs on nu^{4,Q} with an all-ones quadratic and reports ESS") {
  MalaOptions o;
  o.seed = 3;
  o.steps = 20000;
  const auto batch = run_mala(build_measure(nu_n_q_spec(Matrix::Constant(4, 4, 0.1))), o);
  REQUIRE(batch.ess.size() == 4);
  for (double e : batch.ess) {
    CHECK(e > 0.0);
    CHECK(e <= static_cast<double>(batch.samples.rows()));
  }
  CHECK(batch.audit_passed);
}

TEST_CASE("property: identical seeds give bit-identical batches") {
  MalaOptions o;
  o.seed = 99;
  o.steps = 5000;
  o.chains = 3;
  const Density g = build_measure(nu_n_q_spec(Matrix::Identity(2, 2) * 0.3));
  const auto a = run_mala(g, o), b = run_mala(g, o);
  CHECK(a.samples == b.samples);
  const auto h1 = run_hit_and_run(SectionSpec::full(3, 1.5), 5000, 8, 2);
  const auto h2 = run_hit_and_run(SectionSpec::full(3, 1.5), 5000, 8, 2);
  CHECK(h1.samples == h2.samples);
  o.seed = 100;
  CHECK_FALSE(run_mala(g, o).samples == a.samples);
}

TEST_CASE("property: results do not depend on the worker count") {
  MalaOptions o;
  o.seed = 5;
  o.steps = 4000;
  o.chains = 4;
  const Density g = build_measure(standard_gaussian_spec(2));
  const int saved = thread_count();
  set_thread_count(1);
  const auto serial = run_mala(g, o);
  const auto serial_cov = covariance(serial);
  set_thread_count(4);
  const auto threaded = run_mala(g, o);
  const auto threaded_cov = covariance(threaded);
  set_thread_count(saved);
  CHECK(serial.samples == threaded.samples);
  CHECK(serial_cov.matrix == threaded_cov.matrix);
}

TEST_CASE("covariance edge cases") {
  SampleBatch flat;
  flat.samples = Matrix::Constant(2000, 3, 0.25);
  const auto c = covariance(flat);
  CHECK(c.matrix.cwiseAbs().maxCoeff() == 0.0);
  SampleBatch tiny;
  tiny.samples = Matrix::Zero(999, 2);
  try {
    covariance(tiny);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewSamples);
  }
}

TEST_CASE("dominance check") {
  const auto base = product_spec({laplace_spec(), laplace_spec()});
  const auto B = quadrature_covariance(build_measure(base), 512);
  SUBCASE("laplace product cut to the unit disc") {
    const auto A =
        quadrature_covariance(build_measure(with_perturbation(base, indicator_perturbation(LpBall{2, 2.0, 1.0}))), 512);
    const auto r = dominance_check(A, B, 1.0);
    CHECK(r.holds);
    CHECK(r.margin >= -1e-8);
  }
  SUBCASE("A = B") {
    const auto r = dominance_check(B, B, 1.0);
    CHECK(r.holds);
    CHECK(std::abs(r.margin) <= 1e-12);
  }
  SUBCASE("dimension mismatch") {
    const auto C = quadrature_covariance(build_measure(laplace_spec()), 512);
    try {
      dominance_check(C, B, 1.0);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
  }
}

TEST_CASE("the rotated parallelotope breaks factor-one domination in the cube") {
  const double eps = 0.1, s = 1 / std::sqrt(2.0);
  Matrix F(2, 2);
  F << s, s, -s, s;
  const auto cube = uniform_body_spec(AxisBox{{0.5, 0.5}});
  const auto par = with_perturbation(
      cube, indicator_perturbation(RotatedBox{F, {(1 - eps) * std::sqrt(2.0) / 2, eps * std::sqrt(2.0) / 2}}));
  const auto A = quadrature_covariance(build_measure(par), 512);
  const auto B = quadrature_covariance(build_measure(cube), 512);
  const auto one = dominance_check(A, B, 1.0);
  CHECK_FALSE(one.holds);
  CHECK(one.margin < 0.0);
  CHECK(dominance_check(A, B, 2.0).holds);
}

TEST_CASE("property: mixture bases dominate, general even bases dominate with factor n") {
  Matrix Q = Matrix::Identity(3, 3) * 0.4;
  Q(0, 1) = Q(1, 0) = 0.2;
  for (int n : {2, 3}) {
    const int res = n == 2 ? 256 : 64;
    for (double p : {1.0, 1.5, 2.0}) {
      std::vector<MeasureSpec> comps(static_cast<std::size_t>(n), nu_p_spec(p));
      const auto base = product_spec(comps);
      const auto B = quadrature_covariance(build_measure(base), res);
      const std::vector<PerturbationSpec> rhos = {indicator_perturbation(LpBall{n, 2.0, 1.0}),
                                                  quadratic_perturbation(Q.topLeftCorner(n, n))};
      for (const auto& rho : rhos) {
        const auto A = quadrature_covariance(build_measure(with_perturbation(base, rho)), res);
        INFO("n=" << n << " p=" << p);
        CHECK(dominance_check(A, B, 1.0).margin >= -1e-8);
        for (int i = 0; i < n; ++i) CHECK(A.matrix(i, i) <= B.matrix(i, i) + 1e-8);
      }
    }
    std::vector<MeasureSpec> unif(static_cast<std::size_t>(n), uniform_interval_spec(-0.5, 0.5));
    const auto cube = product_spec(unif);
    const auto B = quadrature_covariance(build_measure(cube), res);
    const auto A = quadrature_covariance(build_measure(with_perturbation(cube, indicator_perturbation(LpBall{n, 1.0, 0.5}))), res);
    CHECK(dominance_check(A, B, static_cast<double>(n)).holds);
  }
}

TEST_CASE("samples and diagnostics export") {
  const auto batch = run_hit_and_run(SectionSpec::full(2, 1.0), 2000, 1);
  const auto path = std::filesystem::temp_directory_path() / "loggap_samples_test.csv";
  write_samples_csv(batch, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("x0") != std::string::npos);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == static_cast<std::size_t>(batch.samples.rows()));
  std::filesystem::remove(path);
  const Json d = diagnostics_json(batch);
  CHECK(d.contains("ess"));
  CHECK(d.contains("seed"));
}
