#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loggap/eigensolver.hpp"
#include "loggap/grid.hpp"
#include "loggap/measure_json.hpp"

namespace loggap {

enum class Parity { Even, Odd, None };
std::string to_string(Parity p);

struct SpectrumOptions {
  EigenOptions eigen;
  /// Consecutive eigenvalues within this relative gap share a cluster.
  double cluster_gap = 1e-3;
  double parity_threshold = 1e-6;
  /// Pairs computed beyond the requested ones so clusters are not cut.
  int extra = 4;
};

struct SpectrumReport {
  std::vector<double> eigenvalues;
  /// Columns are node values on active cells with Σ p u² = 1.
  Matrix eigenvectors;
  std::vector<Parity> parity;
  /// ‖f∘(-id) ∓ f‖_μ / ‖f‖_μ for the better of the two signs.
  std::vector<double> parity_score;
  /// Coordinates in which each eigenvector is even; meaningful only when
  /// `type_decided` holds (every coordinate flip gave a clean sign).
  std::vector<std::vector<int>> type_I;
  std::vector<bool> type_decided;
  std::vector<std::vector<int>> multiplicity_groups;
  /// ‖B y − λ y‖ / λ_max with B = M^{-1/2} A M^{-1/2}, ‖y‖ = 1.
  std::vector<double> residuals;
  double lambda_max = 0.0;
  int restarts = 0;
  double parity_threshold = 1e-6;

  /// Index of the cluster containing eigenvalue `i`.
  int group_of(int i) const;
  /// Eigen-indices (ascending) whose parity label is `p`, λ₀ excluded.
  std::vector<int> indices_with(Parity p) const;
};

/// k+1 smallest eigenpairs (λ₀ = 0 first). Eigenvectors inside each cluster
/// are adapted to the reflection symmetries of the operator before labeling.
SpectrumReport lowest_spectrum(const GridOperator& op, int k, const SpectrumOptions& options = {});
SpectrumReport lowest_spectrum(const GridOperator& op, int k, double tol);

/// Discrete ‖f‖_{H^{-1}(μ)} = √(fᵀ M A⁺ M f / Σm) by Jacobi-preconditioned
/// conjugate gradients. Throws NotCentered, SolverBreakdown.
double hminus_norm(const GridOperator& op, const Vector& f);
/// Same supremum by direct ascent of ∫ f u dμ / (∫|∇u|² dμ)^{1/2}.
double hminus_norm_ascent(const GridOperator& op, const Vector& f, int steps = 200);
/// f minus its μ-mean.
Vector centered(const GridOperator& op, const Vector& f);
/// Centered difference quotient along `axis` (one-sided at the boundary).
Vector partial_difference(const GridOperator& op, const Vector& f, int axis);

struct VarianceReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  /// Linear correction c_i subtracted so each difference has mean zero.
  std::vector<double> corrections;
  std::vector<double> partial_norms_squared;
};

VarianceReport verify_variance_inequality(const GridOperator& op, const Vector& f, double tol = 1e-2);

using HessianFn = std::function<Matrix(std::span<const double>)>;

struct BrascampLiebReport {
  double variance = 0.0;
  double weighted_energy = 0.0;
  bool holds = false;
};

/// Var_μ(f) against ∫⟨(D²V)^{-1}∇f, ∇f⟩ dμ by tensor quadrature (dim ≤ 3).
/// Throws HessianNotPD.
BrascampLiebReport brascamp_lieb_check(const Density& density, const HessianFn& hessian, const ScalarField& f,
                                       int resolution = 256, double tol = 1e-3);

struct InterlaceReport {
  std::vector<double> lambda_odd_sorted;  // first n+1 odd eigenvalues
  double lambda_even_first = 0.0;
  bool holds = false;
  double margin = 0.0;
};

/// Throws InsufficientSpectrum.
InterlaceReport verify_interlacing(const SpectrumReport& report, int n, double tol = 1e-2);

struct EigenspaceReport {
  int dimension = 0;
  int multiplicity = 0;
  int group_order = 0;
  bool group_preserves_measure = false;
  bool irreducible = false;
  bool hypothesis_met = false;
  int span_dimension = 0;
  /// Largest part of any f₁∘R outside the λ₁ cluster (relative).
  double span_leakage = 0.0;
  bool claim_holds = false;
  std::string status;
  bool cube_symmetric = false;
  /// max_i min_± ‖f_i ∓ f₁∘T_{1i}‖_μ / ‖f_i‖_μ
  double basis_error = 0.0;
  /// max_i |⟨f₁, f_i⟩_μ| / (‖f₁‖‖f_i‖)
  double max_inner = 0.0;
};

/// Generators are signed permutation matrices; the group is their closure.
/// Throws GroupDoesNotPreserveGrid.
EigenspaceReport eigenspace_structure(const GridOperator& op, const SpectrumReport& report,
                                      const std::vector<Eigen::MatrixXi>& generators);

/// Generators of the group of coordinate sign flips and permutations.
std::vector<Eigen::MatrixXi> cube_group_generators(int n);
/// Generators of coordinate sign flips only.
std::vector<Eigen::MatrixXi> flip_group_generators(int n);

Json to_json(const SpectrumReport& report);
Json to_json(const InterlaceReport& report);
Json to_json(const EigenspaceReport& report);
Json to_json(const VarianceReport& report);

/// Writes (x, y, value) rows; for 3-D grids the middle z-slice.
void write_slice_csv(const GridOperator& op, const Vector& values, const std::string& path);

}  // namespace loggap
