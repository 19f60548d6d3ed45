#pragma once

#include <cstdint>
#include <vector>

#include "loggap/grid.hpp"

namespace loggap {

struct EigenOptions {
  /// Converged when every wanted Ritz residual is below tol · ‖B‖.
  double tol = 1e-10;
  /// After max_restarts, the best iterate is still returned when its
  /// residuals are below this floor.
  double accept_tol = 1e-8;
  int max_restarts = 40;
  int krylov_steps = 6;
  /// Block width beyond the number of wanted pairs.
  int guard = 4;
  std::uint64_t seed = 0x5eed;
};

struct EigenResult {
  std::vector<double> values;       // ascending, values[0] belongs to `kernel`
  Matrix vectors;                   // orthonormal columns
  std::vector<double> residuals;    // ‖B y − θ y‖ / ‖B‖
  double norm_estimate = 0.0;       // Gershgorin bound on ‖B‖
  int restarts = 0;
};

/// Smallest `count` eigenpairs of the symmetric PSD matrix B on the
/// orthogonal complement of the unit null vector `kernel`, by shift-invert
/// block Krylov iteration with Rayleigh–Ritz on B. Throws NoConvergence.
EigenResult smallest_eigenpairs(const SparseMatrix& B, const Vector& kernel, int count,
                                const EigenOptions& options = {});

}  // namespace loggap
