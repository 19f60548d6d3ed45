#include "loggap/eigensolver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "loggap/errors.hpp"

namespace loggap {

namespace {

void deflate(Matrix& W, const Vector& q) { W -= q * (q.transpose() * W); }

// Appends the columns of W to the orthonormal basis V (two Gram–Schmidt
// passes), dropping numerically dependent columns.
void extend_basis(Matrix& V, Eigen::Index& used, Matrix W) {
  for (int pass = 0; pass < 2; ++pass)
    if (used > 0) W -= V.leftCols(used) * (V.leftCols(used).transpose() * W);
  for (Eigen::Index c = 0; c < W.cols(); ++c) {
    Vector w = W.col(c);
    const double before = w.norm();
    if (!(before > 0.0)) continue;
    for (int pass = 0; pass < 2; ++pass)
      if (used > 0) w -= V.leftCols(used) * (V.leftCols(used).transpose() * w);
    const double after = w.norm();
    if (after < 1e-10 * before || used >= V.cols()) continue;
    V.col(used++) = w / after;
  }
}

}  // namespace

EigenResult smallest_eigenpairs(const SparseMatrix& B, const Vector& kernel, int count, const EigenOptions& options) {
  const Eigen::Index n = B.rows();
  if (count < 1) fail(ErrorKind::InvalidSpec, "need at least one eigenpair");
  if (count + 1 > n) fail(ErrorKind::InsufficientSpectrum, "grid too small for the requested spectrum");
  const Vector q = kernel.normalized();

  double norm = 0.0;
  {
    Vector rows = Vector::Zero(n);
    for (Eigen::Index c = 0; c < B.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(B, c); it; ++it) rows[it.row()] += std::abs(it.value());
    norm = rows.maxCoeff();
  }
  double shift = 1e-6 * norm;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  auto factor = [&] {
    SparseMatrix K = B;
    for (Eigen::Index i = 0; i < n; ++i) K.coeffRef(i, i) += shift;
    ldlt.compute(K);
    if (ldlt.info() != Eigen::Success) fail(ErrorKind::NoConvergence, "shifted factorization failed");
  };
  factor();
  bool reshifted = false;

  const Eigen::Index block = std::min<Eigen::Index>(count + options.guard, n - 1);
  const Eigen::Index max_dim = std::min<Eigen::Index>(block * (options.krylov_steps + 1), n - 1);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss;
  Matrix X(n, block);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = gauss(rng);
  deflate(X, q);

  EigenResult out;
  out.norm_estimate = norm;
  double best = std::numeric_limits<double>::infinity();
  EigenResult best_result;
  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    // Column 0 locks the kernel so every Gram–Schmidt pass removes it.
    Matrix V(n, max_dim + 1);
    V.col(0) = q;
    Eigen::Index used = 1;
    extend_basis(V, used, X);
    Eigen::Index block_start = 1;
    for (int step = 0; step < options.krylov_steps && used < max_dim; ++step) {
      const Eigen::Index block_end = used;
      Matrix W = ldlt.solve(Matrix(V.middleCols(block_start, block_end - block_start)));
      deflate(W, q);
      block_start = block_end;
      extend_basis(V, used, W);
      if (used == block_end) break;
    }
    const Matrix basis = V.middleCols(1, used - 1);
    const Matrix BV = B * basis;
    Matrix H = basis.transpose() * BV;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
    const Matrix Y = basis * eig.eigenvectors();
    const Matrix BY = BV * eig.eigenvectors();
    double worst = 0.0;
    std::vector<double> res(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      const double r = (BY.col(k) - eig.eigenvalues()[k] * Y.col(k)).norm() / norm;
      res[static_cast<std::size_t>(k)] = r;
      worst = std::max(worst, r);
    }
    if (worst < best) {
      best = worst;
      best_result = EigenResult{};
      best_result.norm_estimate = norm;
      best_result.restarts = restart;
      best_result.values.push_back(0.0);
      best_result.residuals.push_back((B * q).norm() / norm);
      best_result.vectors.resize(n, count + 1);
      best_result.vectors.col(0) = q;
      for (int k = 0; k < count; ++k) {
        best_result.values.push_back(eig.eigenvalues()[k]);
        best_result.residuals.push_back(res[static_cast<std::size_t>(k)]);
        best_result.vectors.col(k + 1) = Y.col(k);
      }
    }
    if (worst <= options.tol) return best_result;
    X = Y.leftCols(std::min(block, Y.cols()));
    // Reshift once if the norm-based shift swamps the low spectrum.
    const double low = eig.eigenvalues()[0];
    if (!reshifted && low > 0.0 && low < 1e-2 * shift) {
      shift = std::max(1e-3 * low, 1e-14 * norm);
      factor();
      reshifted = true;
    }
  }
  if (best <= options.accept_tol) return best_result;
  fail(ErrorKind::NoConvergence, "block Krylov iteration stalled after " + std::to_string(options.max_restarts) +
                                     " restarts; best relative residual " + std::to_string(best));
}

}  // namespace loggap
