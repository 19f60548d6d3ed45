#pragma once

#include <Eigen/Sparse>

#include <cstdint>
#include <span>
#include <vector>

#include "loggap/measure.hpp"

namespace loggap {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;

/// Finite-volume form of -L on a centered box. Cells whose center has zero
/// density are dropped; `stiffness` and `mass` live on the remaining cells.
struct GridOperator {
  Box box;
  std::vector<int> shape;
  std::vector<double> step;
  SparseMatrix stiffness;
  /// M^{-1/2} A M^{-1/2}, formed in log space.
  SparseMatrix symmetric;
  Vector mass;
  /// log density at cell centers minus the peak, per active cell.
  Vector log_mass;
  double total_mass = 0.0;
  std::vector<std::int64_t> active_cells;  // active -> full index
  std::vector<std::int64_t> full_to_active;  // -1 for dropped cells

  int dim() const { return static_cast<int>(shape.size()); }
  Eigen::Index size() const { return mass.size(); }
  std::vector<int> multi_index(std::int64_t full) const;
  std::int64_t full_index(std::span<const int> idx) const;
  double coordinate(int axis, int j) const;
  std::vector<double> center(Eigen::Index active) const;

  /// Normalized weights m / Σ m.
  Vector probabilities() const { return mass / total_mass; }
  /// Samples f at the active cell centers.
  Vector evaluate(const ScalarField& f) const;
  /// Σ_p f and the p-weighted inner product.
  double mean(const Vector& f) const;
  double inner(const Vector& f, const Vector& g) const;
  /// Discrete Dirichlet energy over total mass: fᵀ A f / Σ m.
  double energy(const Vector& f) const;
};

struct AssemblyOptions {
  /// Refuse assemblies whose estimated footprint exceeds this many bytes.
  double memory_budget = 4.0e9;
};

/// Box must be centered and the per-axis node counts even and ≥ 32
/// (dimension 1 to 3). Throws OutOfMemory, SingularWeight, InvalidSpec.
GridOperator assemble_generator(const Density& density, const Box& box, std::vector<int> resolution,
                                const AssemblyOptions& options = {});
GridOperator assemble_generator(const Density& density, int resolution);

/// Index map of the reflection x_axis -> -x_axis (axis = -1: x -> -x) on
/// active cells, or empty when the map does not preserve the active set.
std::vector<Eigen::Index> reflection_map(const GridOperator& op, int axis);

/// Index map of x -> R x for a signed permutation matrix R; empty when the
/// grid or the active set is not preserved.
std::vector<Eigen::Index> signed_permutation_map(const GridOperator& op, const Eigen::MatrixXi& R);

/// Applies an index map: (f∘R)[c] = f[map[c]].
Vector apply_map(const std::vector<Eigen::Index>& map, const Vector& f);

/// True when the operator is invariant under the index map (masses and
/// stiffness pattern agree to relative tolerance `tol`).
bool map_is_symmetry(const GridOperator& op, const std::vector<Eigen::Index>& map, double tol = 1e-10);

}  // namespace loggap
