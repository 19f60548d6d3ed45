#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loggap/measure.hpp"
#include "loggap/measure_json.hpp"
#include "loggap/spectral_nd.hpp"

namespace loggap {

struct BoundValue {
  double value = 0.0;
  std::string formula_id;
  std::map<std::string, double> constants_used;
  std::string provenance;
  /// True when every constant kept its default of 1.
  bool nominal = true;
};

struct FormulaInfo {
  std::string id;
  std::string formula;
  std::vector<std::string> params;
  std::vector<std::string> constants;
};

const std::vector<FormulaInfo>& bound_registry();

/// Overrides for the universal constants; unknown names raise BadParams.
using ConstantOverrides = std::map<std::string, double>;
/// Dependence of the section constant on κ = d/n.
using KappaFn = std::function<double(double)>;

/// Pure arithmetic on `params`. Throws UnknownFormula, BadParams.
BoundValue eval_bound(const std::string& formula_id, const Json& params, const ConstantOverrides& constants = {},
                      const KappaFn& c_kappa = {});

struct Parallelotope {
  Matrix frame;                     // orthonormal rows; row 0 is the diagonal direction
  std::vector<double> half_widths;  // along the frame rows
  double constant = 0.0;            // max side² / π² via tensorization
};

/// Orthogonal box inside [-1/2,1/2]^n with longest side (1-ε)√n.
Parallelotope parallelotope(int n, double eps);
double parallelotope_constant(int n, double eps);

/// Rows 1..n-1 of the orthonormal Helmert matrix; row 0 is (1,…,1)/√n.
Matrix helmert_basis(int n);

/// Grid of per_axis^dim points over the support box clipped to ±half_width.
std::vector<std::vector<double>> probe_grid(const Density& density, int per_axis = 5, double half_width = 2.0);

struct HelfferReport {
  std::optional<BoundValue> bound;
  double min_eigenvalue = 0.0;
  std::vector<double> argmin;
};

/// K(x) has diagonal λ₁ of the conditional line measures and off-diagonal
/// ∂²_ij V(x); the bound is 1/min_x λ_min(K(x)) when positive.
HelfferReport helffer_bound(const Density& density, const HessianFn& potential_hessian,
                            const std::vector<std::vector<double>>& probes, int nodes = 2048);

Json to_json(const BoundValue& b);
Json registry_json();

}  // namespace loggap
