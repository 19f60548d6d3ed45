#include "loggap/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "loggap/errors.hpp"
#include "loggap/parallel.hpp"
#include "loggap/quadrature.hpp"

namespace loggap {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<std::uint64_t> chain_seeds(std::uint64_t seed, int chains) {
  std::vector<std::uint64_t> out;
  std::uint64_t state = seed;
  for (int c = 0; c < chains; ++c) out.push_back(splitmix64(state));
  return out;
}

double lp_norm(const Vector& x, double p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

// ---------------------------------------------------------------- sections

bool SectionSpec::contains(std::span<const double> y) const {
  const Eigen::Map<const Vector> v(y.data(), static_cast<Eigen::Index>(y.size()));
  return lp_norm(basis.transpose() * v, p) <= 1.0;
}

void SectionSpec::validate() const {
  if (basis.cols() != n || basis.rows() < 1 || basis.rows() > n)
    fail(ErrorKind::InvalidSpec, "section basis must be d x n with 1 <= d <= n");
  if (!(p >= 1.0)) fail(ErrorKind::InvalidSpec, "section needs p >= 1");
  const Matrix gram = basis * basis.transpose();
  if ((gram - Matrix::Identity(basis.rows(), basis.rows())).cwiseAbs().maxCoeff() > 1e-12)
    fail(ErrorKind::InvalidSpec, "section basis rows are not orthonormal");
}

SectionSpec SectionSpec::full(int n, double p) { return SectionSpec{n, p, Matrix::Identity(n, n)}; }

SectionSpec SectionSpec::random(int n, int d, double p, std::uint64_t seed) {
  if (d < 1 || d > n) fail(ErrorKind::InvalidSpec, "need 1 <= d <= n");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix G(n, d);
  for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, d);
  SectionSpec s{n, p, Q.transpose()};
  // Re-orthonormalize to full precision.
  Eigen::HouseholderQR<Matrix> qr2(s.basis.transpose());
  s.basis = (qr2.householderQ() * Matrix::Identity(n, d)).transpose();
  return s;
}

// -------------------------------------------------------------------- MALA

SampleBatch run_mala(const Density& density, const MalaOptions& o) {
  if (o.steps < 10 || o.chains < 1) fail(ErrorKind::InvalidSpec, "MALA needs at least 10 steps and one chain");
  const int dim = density.dim;
  const int burn = o.steps / 10;
  const int kept = o.steps - burn;
  const auto seeds = chain_seeds(o.seed, o.chains);
  std::vector<Matrix> chain_samples(static_cast<std::size_t>(o.chains));
  std::vector<double> accept_rate(static_cast<std::size_t>(o.chains)), steps_used(static_cast<std::size_t>(o.chains));

  auto gradient = [&density, dim](const Vector& x, Vector& g) {
    if (density.grad_log_density) {
      density.grad_log_density(std::span<const double>(x.data(), static_cast<std::size_t>(dim)),
                               std::span<double>(g.data(), static_cast<std::size_t>(dim)));
      return;
    }
    Vector y = x;
    for (int i = 0; i < dim; ++i) {
      const double h = 1e-6 * (1.0 + std::abs(x[i]));
      y[i] = x[i] + h;
      const double up = density.log_density(std::span<const double>(y.data(), static_cast<std::size_t>(dim)));
      y[i] = x[i] - h;
      const double down = density.log_density(std::span<const double>(y.data(), static_cast<std::size_t>(dim)));
      y[i] = x[i];
      g[i] = (up - down) / (2 * h);
    }
  };
  auto logp = [&density, dim](const Vector& x) {
    return density.log_density(std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
  };

  parallel_chunks(static_cast<std::size_t>(o.chains), 1, [&](std::size_t c, std::size_t, std::size_t) {
    std::mt19937_64 rng(seeds[c]);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    Vector x = Vector::Zero(dim);
    if (!std::isfinite(logp(x)))
      for (int i = 0; i < dim; ++i) x[i] = 0.5 * (density.support_box.lo[static_cast<std::size_t>(i)] + density.support_box.hi[static_cast<std::size_t>(i)]);
    Vector g(dim), gy(dim), xi(dim);
    double lx = logp(x);
    gradient(x, g);
    double tau = o.initial_step;
    int accepts = 0, averaged = 0;
    double log_tau_sum = 0.0;
    Matrix out(kept, dim);
    for (int step = 0; step < o.steps; ++step) {
      for (int i = 0; i < dim; ++i) xi[i] = gauss(rng);
      const Vector y = x + tau * g + std::sqrt(2.0 * tau) * xi;
      const double ly = logp(y);
      bool accept = false;
      if (std::isfinite(ly)) {
        gradient(y, gy);
        const Vector fwd = y - x - tau * g;
        const Vector back = x - y - tau * gy;
        const double log_ratio = ly - lx - (back.squaredNorm() - fwd.squaredNorm()) / (4.0 * tau);
        accept = std::log(unif(rng)) < log_ratio;
      } else {
        unif(rng);
      }
      if (accept) {
        x = y;
        lx = ly;
        g = gy;
      }
      if (x.norm() > 1e6) fail(ErrorKind::DivergentChain, "chain position exceeded 1e6");
      if (step < burn) {
        // Robbins–Monro on log τ toward the middle of the target band.
        const double target = 0.5 * (o.target_low + o.target_high);
        tau *= std::exp(std::pow(1.0 + step / 100.0, -0.6) * ((accept ? 1.0 : 0.0) - target));
        // The frozen step is the average of log τ over the second half.
        if (2 * step >= burn) {
          log_tau_sum += std::log(tau);
          ++averaged;
        }
        if (step + 1 == burn && averaged > 0) tau = std::exp(log_tau_sum / averaged);
      } else {
        accepts += accept;
        out.row(step - burn) = x.transpose();
      }
    }
    chain_samples[c] = std::move(out);
    accept_rate[c] = static_cast<double>(accepts) / kept;
    steps_used[c] = tau;
  });

  SampleBatch batch;
  batch.seed = o.seed;
  batch.chains = o.chains;
  batch.burn_in = burn;
  batch.smoothing = density.grad_log_density ? density.smoothing_width : 0.0;
  batch.samples.resize(static_cast<Eigen::Index>(kept) * o.chains, dim);
  double acc = 0.0, tau = 0.0;
  for (int c = 0; c < o.chains; ++c) {
    batch.samples.middleRows(static_cast<Eigen::Index>(c) * kept, kept) = chain_samples[static_cast<std::size_t>(c)];
    acc += accept_rate[static_cast<std::size_t>(c)];
    tau += steps_used[static_cast<std::size_t>(c)];
  }
  batch.acceptance = acc / o.chains;
  batch.step_size = tau / o.chains;
  batch.ess = effective_sample_size(batch.samples, o.chains);
  // Audit 1% of the samples against the support.
  for (Eigen::Index r = 0; r < batch.samples.rows(); r += 100) {
    const Vector x = batch.samples.row(r).transpose();
    if (!std::isfinite(logp(x))) batch.audit_passed = false;
  }
  return batch;
}

// ------------------------------------------------------------- hit-and-run

SampleBatch run_hit_and_run(const SectionSpec& body, int steps, std::uint64_t seed, int chains) {
  body.validate();
  if (steps < 10 || chains < 1) fail(ErrorKind::InvalidSpec, "hit-and-run needs at least 10 steps and one chain");
  const int d = body.d();
  const int burn = steps / 10;
  const int kept = steps - burn;
  const auto seeds = chain_seeds(seed, chains);
  std::vector<Matrix> chain_samples(static_cast<std::size_t>(chains));
  auto inside = [&body](const Vector& y) { return body.contains(std::span<const double>(y.data(), static_cast<std::size_t>(y.size()))); };
  // Largest t ≥ 0 with y + t u inside, by bracketing and 50 bisections.
  auto chord_end = [&inside](const Vector& y, const Vector& u) {
    double lo = 0.0, hi = 1.0;
    int grow = 0;
    while (inside(y + hi * u)) {
      lo = hi;
      hi *= 2.0;
      if (++grow > 60) fail(ErrorKind::ChordNotFound, "chord does not leave the body");
    }
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (inside(y + mid * u)) lo = mid;
      else hi = mid;
    }
    return lo;
  };
  parallel_chunks(static_cast<std::size_t>(chains), 1, [&](std::size_t c, std::size_t, std::size_t) {
    std::mt19937_64 rng(seeds[c]);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    Vector y = Vector::Zero(d), u(d);
    Matrix out(kept, d);
    for (int step = 0; step < steps; ++step) {
      for (int i = 0; i < d; ++i) u[i] = gauss(rng);
      u.normalize();
      const double up = chord_end(y, u);
      const double down = chord_end(y, -u);
      if (!(up + down > 0.0)) fail(ErrorKind::ChordNotFound, "degenerate chord");
      y += (-down + (up + down) * unif(rng)) * u;
      if (step >= burn) out.row(step - burn) = y.transpose();
    }
    chain_samples[c] = std::move(out);
  });
  SampleBatch batch;
  batch.seed = seed;
  batch.chains = chains;
  batch.burn_in = burn;
  batch.samples.resize(static_cast<Eigen::Index>(kept) * chains, d);
  for (int c = 0; c < chains; ++c)
    batch.samples.middleRows(static_cast<Eigen::Index>(c) * kept, kept) = chain_samples[static_cast<std::size_t>(c)];
  batch.ess = effective_sample_size(batch.samples, chains);
  for (Eigen::Index r = 0; r < batch.samples.rows(); r += 100)
    if (!inside(batch.samples.row(r).transpose())) batch.audit_passed = false;
  return batch;
}

// --------------------------------------------------------------- estimates

std::vector<double> effective_sample_size(const Matrix& samples, int chains) {
  const Eigen::Index per = samples.rows() / std::max(chains, 1);
  std::vector<double> out;
  for (Eigen::Index col = 0; col < samples.cols(); ++col) {
    double total_ess = 0.0;
    for (int c = 0; c < chains; ++c) {
      const Vector x = samples.col(col).segment(static_cast<Eigen::Index>(c) * per, per);
      const Vector z = x.array() - x.mean();
      const double var = z.squaredNorm() / static_cast<double>(per);
      if (!(var > 0.0)) {
        total_ess += static_cast<double>(per);
        continue;
      }
      const Eigen::Index max_lag = std::min<Eigen::Index>(per - 1, 5000);
      auto rho = [&](Eigen::Index lag) {
        return z.head(per - lag).dot(z.tail(per - lag)) / (static_cast<double>(per) * var);
      };
      // Pairs Γ_k = ρ_{2k} + ρ_{2k+1} summed while positive.
      double sum = 0.0;
      for (Eigen::Index k = 0; 2 * k + 1 <= max_lag; ++k) {
        const double pair = rho(2 * k) + rho(2 * k + 1);
        if (pair <= 0.0) break;
        sum += pair;
      }
      const double tau = std::max(2.0 * sum - 1.0, 1.0 / static_cast<double>(per));
      total_ess += std::min(static_cast<double>(per), static_cast<double>(per) / tau);
    }
    out.push_back(total_ess);
  }
  return out;
}

namespace {

void finish(CovEstimate& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c.matrix);
  c.op_norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  c.trace = c.matrix.trace();
}

}  // namespace

CovEstimate covariance(const SampleBatch& batch, int batches) {
  const auto& X = batch.samples;
  if (X.rows() < 1000) fail(ErrorKind::TooFewSamples, "covariance needs at least 1000 samples");
  const Eigen::Index dim = X.cols();
  const Vector mean = X.colwise().mean().transpose();
  const Matrix Z = X.rowwise() - mean.transpose();
  CovEstimate c;
  c.count = static_cast<std::size_t>(X.rows());
  c.matrix = Z.transpose() * Z / static_cast<double>(X.rows());
  c.matrix = 0.5 * (c.matrix + c.matrix.transpose()).eval();
  const Eigen::Index size = X.rows() / batches;
  Matrix sum = Matrix::Zero(dim, dim), sum_sq = Matrix::Zero(dim, dim);
  for (int b = 0; b < batches; ++b) {
    const Matrix Zb = Z.middleRows(static_cast<Eigen::Index>(b) * size, size);
    const Matrix Cb = Zb.transpose() * Zb / static_cast<double>(size);
    sum += Cb;
    sum_sq += Cb.cwiseProduct(Cb);
  }
  const Matrix m = sum / batches;
  const Matrix var = (sum_sq / batches - m.cwiseProduct(m)) * (static_cast<double>(batches) / (batches - 1));
  c.standard_error = (var.cwiseMax(0.0) / batches).cwiseSqrt();
  finish(c);
  return c;
}

CovEstimate quadrature_covariance(const Density& density, int resolution) {
  const int dim = density.dim;
  std::vector<ScalarField> fs;
  for (int i = 0; i < dim; ++i) fs.push_back([i](std::span<const double> x) { return x[static_cast<std::size_t>(i)]; });
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j)
      fs.push_back([i, j](std::span<const double> x) { return x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)]; });
  const auto e = expectations(density, fs, resolution);
  CovEstimate c;
  c.from_quadrature = true;
  c.matrix.resize(dim, dim);
  c.standard_error.resize(dim, dim);
  std::size_t k = static_cast<std::size_t>(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j, ++k) {
      const auto& mi = e[static_cast<std::size_t>(i)];
      const auto& mj = e[static_cast<std::size_t>(j)];
      c.matrix(i, j) = c.matrix(j, i) = e[k].value - mi.value * mj.value;
      c.standard_error(i, j) = c.standard_error(j, i) =
          e[k].error + std::abs(mi.value) * mj.error + std::abs(mj.value) * mi.error;
    }
  finish(c);
  return c;
}

DominanceReport dominance_check(const CovEstimate& A, const CovEstimate& B, double factor) {
  if (A.matrix.rows() != B.matrix.rows()) fail(ErrorKind::DimensionMismatch, "covariances have different dimensions");
  const Matrix D = factor * B.matrix - A.matrix;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (D + D.transpose()));
  DominanceReport rep;
  rep.margin = eig.eigenvalues()[0];
  if (A.from_quadrature && B.from_quadrature) {
    rep.tolerance = 1e-8;
  } else {
    // First-order perturbation of λ_min along its eigenvector.
    const Vector v = eig.eigenvectors().col(0);
    double var = 0.0;
    for (Eigen::Index i = 0; i < D.rows(); ++i)
      for (Eigen::Index j = 0; j < D.cols(); ++j) {
        const double w = v[i] * v[i] * v[j] * v[j];
        const double sb = factor * B.standard_error(i, j), sa = A.standard_error(i, j);
        var += w * (sb * sb + sa * sa);
      }
    rep.tolerance = 3.0 * std::sqrt(var);
  }
  rep.holds = rep.margin >= -rep.tolerance;
  return rep;
}

Json to_json(const CovEstimate& c) {
  return {{"matrix", matrix_to_json(c.matrix)},
          {"stderr", matrix_to_json(c.standard_error)},
          {"count", c.count},
          {"op_norm", c.op_norm},
          {"trace", c.trace},
          {"from_quadrature", c.from_quadrature}};
}

Json diagnostics_json(const SampleBatch& b) {
  return {{"seed", b.seed},       {"chains", b.chains},       {"burn_in", b.burn_in},
          {"acceptance", b.acceptance}, {"step_size", b.step_size}, {"smoothing", b.smoothing},
          {"ess", b.ess},         {"count", b.samples.rows()}, {"audit_passed", b.audit_passed}};
}

void write_samples_csv(const SampleBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  out.precision(17);
  for (Eigen::Index j = 0; j < batch.samples.cols(); ++j) out << (j ? ",x" : "x") << j;
  out << '\n';
  for (Eigen::Index r = 0; r < batch.samples.rows(); ++r) {
    for (Eigen::Index j = 0; j < batch.samples.cols(); ++j) out << (j ? "," : "") << batch.samples(r, j);
    out << '\n';
  }
}

}  // namespace loggap
