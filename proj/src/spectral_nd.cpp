#include "loggap/spectral_nd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "loggap/errors.hpp"
#include "loggap/quadrature.hpp"

namespace loggap {

std::string to_string(Parity p) {
  switch (p) {
    case Parity::Even: return "even";
    case Parity::Odd: return "odd";
    default: return "none";
  }
}

int SpectrumReport::group_of(int i) const {
  for (std::size_t g = 0; g < multiplicity_groups.size(); ++g)
    for (int j : multiplicity_groups[g])
      if (j == i) return static_cast<int>(g);
  return -1;
}

std::vector<int> SpectrumReport::indices_with(Parity p) const {
  std::vector<int> out;
  for (std::size_t i = 1; i < parity.size(); ++i)
    if (parity[i] == p) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

std::vector<std::vector<int>> cluster(const std::vector<double>& values, std::size_t first, double gap) {
  std::vector<std::vector<int>> groups;
  for (std::size_t i = first; i < values.size(); ++i) {
    if (!groups.empty()) {
      const double prev = values[static_cast<std::size_t>(groups.back().back())];
      if (values[i] - prev <= gap * std::max(std::abs(values[i]), 1e-300)) {
        groups.back().push_back(static_cast<int>(i));
        continue;
      }
    }
    groups.push_back({static_cast<int>(i)});
  }
  return groups;
}

// Splits the columns `cols` of Y into the ±1 eigenspaces of the reflection
// `map`, rotating Y in place; returns the sign of each column.
std::vector<int> split_by_reflection(Matrix& Y, const std::vector<int>& cols, const std::vector<Eigen::Index>& map) {
  const auto m = static_cast<Eigen::Index>(cols.size());
  Matrix Z(Y.rows(), m), SZ(Y.rows(), m);
  for (Eigen::Index c = 0; c < m; ++c) {
    Z.col(c) = Y.col(cols[static_cast<std::size_t>(c)]);
    SZ.col(c) = apply_map(map, Z.col(c));
  }
  Matrix C = Z.transpose() * SZ;
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
  const Matrix rotated = Z * eig.eigenvectors();
  std::vector<int> signs(cols.size());
  for (Eigen::Index c = 0; c < m; ++c) {
    Y.col(cols[static_cast<std::size_t>(c)]) = rotated.col(c);
    signs[static_cast<std::size_t>(c)] = eig.eigenvalues()[c] > 0.0 ? 1 : -1;
  }
  return signs;
}

// Rayleigh–Ritz of B inside the span of the given columns.
void ritz(Matrix& Y, std::vector<double>& values, const std::vector<int>& cols, const SparseMatrix& B) {
  const auto m = static_cast<Eigen::Index>(cols.size());
  Matrix Z(Y.rows(), m);
  for (Eigen::Index c = 0; c < m; ++c) Z.col(c) = Y.col(cols[static_cast<std::size_t>(c)]);
  Matrix H = Z.transpose() * (B * Z);
  H = 0.5 * (H + H.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  const Matrix rotated = Z * eig.eigenvectors();
  for (Eigen::Index c = 0; c < m; ++c) {
    Y.col(cols[static_cast<std::size_t>(c)]) = rotated.col(c);
    values[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])] = eig.eigenvalues()[c];
  }
}

double reflection_score(const Vector& y, const std::vector<Eigen::Index>& map, int sign) {
  const Vector s = apply_map(map, y);
  return (s - sign * y).norm() / std::max(y.norm(), 1e-300);
}

}  // namespace

SpectrumReport lowest_spectrum(const GridOperator& op, int k, double tol) {
  SpectrumOptions o;
  o.eigen.tol = tol;
  return lowest_spectrum(op, k, o);
}

SpectrumReport lowest_spectrum(const GridOperator& op, int k, const SpectrumOptions& options) {
  if (k < 1 || k > 20) fail(ErrorKind::InvalidSpec, "k must lie in 1..20");
  const SparseMatrix& B = op.symmetric;
  const Vector kernel = (0.5 * op.log_mass.array()).exp();
  const int wanted = k + options.extra;
  EigenResult eig = smallest_eigenpairs(B, kernel, wanted, options.eigen);
  Matrix Y = eig.vectors;
  std::vector<double> values = eig.values;

  // Reflections that are exact symmetries of the discrete operator.
  std::vector<std::vector<Eigen::Index>> maps;
  std::vector<std::vector<Eigen::Index>> all_maps;  // -1, 0, 1, ... order
  for (int axis = -1; axis < op.dim(); ++axis) {
    auto map = reflection_map(op, axis);
    all_maps.push_back(map);
    if (!map.empty() && map_is_symmetry(op, map)) maps.push_back(std::move(map));
  }
  for (const auto& grp : cluster(values, 1, options.cluster_gap)) {
    std::map<std::vector<int>, std::vector<int>> sectors{{{}, grp}};
    for (const auto& map : maps) {
      std::map<std::vector<int>, std::vector<int>> next;
      for (const auto& [label, cols] : sectors) {
        const auto signs = split_by_reflection(Y, cols, map);
        for (std::size_t c = 0; c < cols.size(); ++c) {
          auto l = label;
          l.push_back(signs[c]);
          next[l].push_back(cols[c]);
        }
      }
      sectors = std::move(next);
    }
    for (const auto& [label, cols] : sectors) ritz(Y, values, cols, B);
  }

  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin() + 1, order.end(), [&](int a, int b) {
    return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
  });
  const auto keep = static_cast<std::size_t>(k + 1);
  SpectrumReport rep;
  rep.lambda_max = eig.norm_estimate;
  rep.restarts = eig.restarts;
  rep.parity_threshold = options.parity_threshold;
  rep.eigenvectors.resize(op.size(), static_cast<Eigen::Index>(keep));
  const Vector unscale = (-0.5 * op.log_mass.array()).exp() * std::sqrt(op.total_mass);
  for (std::size_t r = 0; r < keep; ++r) {
    const int i = order[r];
    const Vector y = Y.col(i);
    rep.eigenvalues.push_back(values[static_cast<std::size_t>(i)]);
    rep.residuals.push_back((B * y - values[static_cast<std::size_t>(i)] * y).norm() / eig.norm_estimate);
    rep.eigenvectors.col(static_cast<Eigen::Index>(r)) =
        r == 0 ? Vector::Ones(op.size()) : Vector(y.cwiseProduct(unscale));
    // Parity from the global flip, type I from the coordinate flips.
    const auto& flip = all_maps[0];
    Parity p = Parity::None;
    double score = 1.0;
    if (!flip.empty()) {
      const double odd = reflection_score(y, flip, -1);
      const double even = reflection_score(y, flip, 1);
      score = std::min(odd, even);
      if (odd < options.parity_threshold) p = Parity::Odd;
      else if (even < options.parity_threshold) p = Parity::Even;
    }
    rep.parity.push_back(p);
    rep.parity_score.push_back(score);
    std::vector<int> type;
    bool decided = true;
    for (int axis = 0; axis < op.dim(); ++axis) {
      const auto& map = all_maps[static_cast<std::size_t>(axis + 1)];
      if (map.empty()) {
        decided = false;
        continue;
      }
      if (reflection_score(y, map, 1) < options.parity_threshold) type.push_back(axis);
      else if (reflection_score(y, map, -1) >= options.parity_threshold) decided = false;
    }
    rep.type_I.push_back(type);
    rep.type_decided.push_back(decided);
  }
  rep.multiplicity_groups = cluster(rep.eigenvalues, 1, options.cluster_gap);
  return rep;
}

// ------------------------------------------------------------------ H^{-1}

Vector centered(const GridOperator& op, const Vector& f) { return f.array() - op.mean(f); }

double hminus_norm(const GridOperator& op, const Vector& f) {
  if (f.size() != op.size()) fail(ErrorKind::DimensionMismatch, "grid function has the wrong length");
  const double scale = std::sqrt(std::max(op.inner(f, f), 0.0));
  if (scale == 0.0) return 0.0;
  if (std::abs(op.mean(f)) > 1e-8 * scale) fail(ErrorKind::NotCentered, "f has nonzero mean; center it first");
  const Vector b = op.mass.cwiseProduct(centered(op, f));
  const Vector dinv = op.stiffness.diagonal().cwiseInverse();
  Vector u = Vector::Zero(op.size());
  Vector r = b;
  Vector z = dinv.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  const double target = 1e-12 * b.norm();
  const int max_iter = static_cast<int>(std::max<Eigen::Index>(1000, 20 * op.size()));
  for (int it = 0; it < max_iter; ++it) {
    if (r.norm() <= target) {
      u.array() -= u.mean();
      return std::sqrt(std::max(b.dot(u), 0.0) / op.total_mass);
    }
    const Vector Ap = op.stiffness * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) fail(ErrorKind::SolverBreakdown, "conjugate gradients met a non-positive curvature");
    const double alpha = rz / pAp;
    u += alpha * p;
    r -= alpha * Ap;
    z = dinv.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  fail(ErrorKind::SolverBreakdown, "conjugate gradients did not reach the residual target");
}

double hminus_norm_ascent(const GridOperator& op, const Vector& f, int steps) {
  if (f.size() != op.size()) fail(ErrorKind::DimensionMismatch, "grid function has the wrong length");
  const Vector b = op.mass.cwiseProduct(centered(op, f)) / op.total_mass;
  const SparseMatrix A = op.stiffness / op.total_mass;
  const Vector dinv = A.diagonal().cwiseInverse();
  // Maximize bᵀu / √(uᵀAu) over span{u, previous step, preconditioned
  // gradient}; the subspace optimum is √(cᵀ G⁺ c).
  Vector u = dinv.cwiseProduct(b);
  Vector prev = Vector::Zero(op.size());
  double value = 0.0;
  for (int step = 0; step < steps; ++step) {
    const double uAu = u.dot(A * u);
    const double t = uAu > 0.0 ? b.dot(u) / uAu : 0.0;
    const Vector grad = dinv.cwiseProduct(b - t * (A * u));
    Matrix S(op.size(), 3);
    S << u, prev, grad;
    const Matrix AS = A * S;
    Matrix G = S.transpose() * AS;
    const Vector c = S.transpose() * b;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (G + G.transpose()));
    const double cutoff = 1e-13 * eig.eigenvalues().cwiseAbs().maxCoeff();
    Vector coef = Vector::Zero(3);
    for (int i = 0; i < 3; ++i) {
      const double ev = eig.eigenvalues()[i];
      if (ev > cutoff) coef += eig.eigenvectors().col(i) * (eig.eigenvectors().col(i).dot(c) / ev);
    }
    const Vector next = S * coef;
    value = std::max(value, std::sqrt(std::max(c.dot(coef), 0.0)));
    prev = next - u;
    u = next;
  }
  return value;
}

Vector partial_difference(const GridOperator& op, const Vector& f, int axis) {
  const auto ax = static_cast<std::size_t>(axis);
  Vector out(op.size());
  for (Eigen::Index a = 0; a < op.size(); ++a) {
    auto idx = op.multi_index(op.active_cells[static_cast<std::size_t>(a)]);
    const int j = idx[ax];
    auto neighbor = [&](int jj) -> std::int64_t {
      if (jj < 0 || jj >= op.shape[ax]) return -1;
      idx[ax] = jj;
      const std::int64_t r = op.full_to_active[static_cast<std::size_t>(op.full_index(idx))];
      idx[ax] = j;
      return r;
    };
    const std::int64_t lo = neighbor(j - 1), hi = neighbor(j + 1);
    const double h = op.step[ax];
    if (lo >= 0 && hi >= 0) out[a] = (f[hi] - f[lo]) / (2 * h);
    else if (hi >= 0) out[a] = (f[hi] - f[a]) / h;
    else if (lo >= 0) out[a] = (f[a] - f[lo]) / h;
    else out[a] = 0.0;
  }
  return out;
}

VarianceReport verify_variance_inequality(const GridOperator& op, const Vector& f, double tol) {
  if (f.size() != op.size()) fail(ErrorKind::DimensionMismatch, "grid function has the wrong length");
  VarianceReport rep;
  Vector g = f;
  std::vector<Vector> parts;
  for (int axis = 0; axis < op.dim(); ++axis) {
    const Vector d = partial_difference(op, f, axis);
    const double c = op.mean(d);
    rep.corrections.push_back(c);
    if (c != 0.0) g -= c * op.evaluate([axis](std::span<const double> x) { return x[static_cast<std::size_t>(axis)]; });
  }
  for (int axis = 0; axis < op.dim(); ++axis) parts.push_back(centered(op, partial_difference(op, g, axis)));
  const Vector gc = centered(op, g);
  rep.lhs = op.inner(gc, gc);
  for (const auto& d : parts) {
    const double h = hminus_norm(op, d);
    rep.partial_norms_squared.push_back(h * h);
    rep.rhs += h * h;
  }
  rep.holds = rep.lhs <= rep.rhs * (1.0 + tol) + 1e-12 * std::max(1.0, rep.lhs);
  return rep;
}

// --------------------------------------------------------- Brascamp–Lieb

BrascampLiebReport brascamp_lieb_check(const Density& density, const HessianFn& hessian, const ScalarField& f,
                                       int resolution, double tol) {
  const int dim = density.dim;
  if (dim > 3) fail(ErrorKind::DimensionTooLarge, "the check uses tensor quadrature (dimension <= 3)");
  const Box& box = density.support_box;
  std::mt19937_64 rng(7);
  for (int s = 0; s < 256; ++s) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
      x[static_cast<std::size_t>(i)] = std::uniform_real_distribution<double>(box.lo[static_cast<std::size_t>(i)],
                                                                              box.hi[static_cast<std::size_t>(i)])(rng);
    if (Eigen::LLT<Matrix>(hessian(x)).info() != Eigen::Success) {
      std::string where;
      for (double v : x) where += (where.empty() ? "" : ", ") + std::to_string(v);
      fail(ErrorKind::HessianNotPD, "Hessian is not positive definite at (" + where + ")");
    }
  }
  auto gradient = [f, dim](std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    Vector g(dim);
    for (int i = 0; i < dim; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const double h = 1e-5 * (1.0 + std::abs(x[si]));
      y[si] = x[si] + h;
      const double up = f(y);
      y[si] = x[si] - h;
      const double down = f(y);
      y[si] = x[si];
      g[i] = (up - down) / (2 * h);
    }
    return g;
  };
  const ScalarField energy = [gradient, hessian](std::span<const double> x) {
    const Vector g = gradient(x);
    Eigen::LLT<Matrix> llt(hessian(x));
    if (llt.info() != Eigen::Success) fail(ErrorKind::HessianNotPD, "Hessian is not positive definite on the grid");
    return g.dot(llt.solve(g));
  };
  const ScalarField square = [f](std::span<const double> x) {
    const double v = f(x);
    return v * v;
  };
  const auto e = expectations(density, {f, square, energy}, resolution);
  BrascampLiebReport rep;
  rep.variance = e[1].value - e[0].value * e[0].value;
  rep.weighted_energy = e[2].value;
  rep.holds = rep.variance <= rep.weighted_energy * (1.0 + tol) + 1e-12;
  return rep;
}

// ------------------------------------------------------------ interlacing

InterlaceReport verify_interlacing(const SpectrumReport& report, int n, double tol) {
  const auto odd = report.indices_with(Parity::Odd);
  const auto even = report.indices_with(Parity::Even);
  if (static_cast<int>(odd.size()) < n + 1 || even.empty())
    fail(ErrorKind::InsufficientSpectrum, "need " + std::to_string(n + 1) + " odd and one nontrivial even eigenvalue; got " +
                                              std::to_string(odd.size()) + " odd and " + std::to_string(even.size()) +
                                              " even");
  InterlaceReport rep;
  for (int i = 0; i <= n; ++i) rep.lambda_odd_sorted.push_back(report.eigenvalues[static_cast<std::size_t>(odd[static_cast<std::size_t>(i)])]);
  rep.lambda_even_first = report.eigenvalues[static_cast<std::size_t>(even.front())];
  const double bound = rep.lambda_odd_sorted.back();
  rep.margin = bound - rep.lambda_even_first;
  rep.holds = rep.lambda_even_first <= bound * (1.0 + tol);
  return rep;
}

// ------------------------------------------------------- eigenspace structure

std::vector<Eigen::MatrixXi> flip_group_generators(int n) {
  std::vector<Eigen::MatrixXi> gens;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXi R = Eigen::MatrixXi::Identity(n, n);
    R(i, i) = -1;
    gens.push_back(R);
  }
  return gens;
}

std::vector<Eigen::MatrixXi> cube_group_generators(int n) {
  auto gens = flip_group_generators(n);
  for (int i = 1; i < n; ++i) {
    Eigen::MatrixXi T = Eigen::MatrixXi::Identity(n, n);
    T(0, 0) = T(i, i) = 0;
    T(0, i) = T(i, 0) = 1;
    gens.push_back(T);
  }
  return gens;
}

namespace {

std::vector<Eigen::MatrixXi> closure(const std::vector<Eigen::MatrixXi>& gens, int n) {
  auto key = [](const Eigen::MatrixXi& m) { return std::vector<int>(m.data(), m.data() + m.size()); };
  std::vector<Eigen::MatrixXi> elems{Eigen::MatrixXi::Identity(n, n)};
  std::set<std::vector<int>> seen{key(elems[0])};
  for (std::size_t i = 0; i < elems.size(); ++i)
    for (const auto& g : gens) {
      Eigen::MatrixXi p = g * elems[i];
      if (seen.insert(key(p)).second) elems.push_back(p);
    }
  return elems;
}

double mu_norm(const GridOperator& op, const Vector& f) { return std::sqrt(op.inner(f, f)); }

}  // namespace

EigenspaceReport eigenspace_structure(const GridOperator& op, const SpectrumReport& report,
                                      const std::vector<Eigen::MatrixXi>& generators) {
  const int n = op.dim();
  EigenspaceReport rep;
  rep.dimension = n;
  for (const auto& g : generators)
    if (g.rows() != n || g.cols() != n)
      fail(ErrorKind::GroupDoesNotPreserveGrid, "group element has the wrong size");
  const auto group = closure(generators, n);
  rep.group_order = static_cast<int>(group.size());
  std::vector<std::vector<Eigen::Index>> maps;
  rep.group_preserves_measure = true;
  for (const auto& R : group) {
    auto map = signed_permutation_map(op, R);
    if (map.empty()) fail(ErrorKind::GroupDoesNotPreserveGrid, "group element does not map the grid onto itself");
    rep.group_preserves_measure = rep.group_preserves_measure && map_is_symmetry(op, map);
    maps.push_back(std::move(map));
  }
  // Irreducible iff averaging any symmetric matrix over the group gives a
  // multiple of the identity.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  Matrix X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) X(i, j) = X(j, i) = gauss(rng);
  Matrix avg = Matrix::Zero(n, n);
  for (const auto& R : group) {
    const Matrix Rd = R.cast<double>();
    avg += Rd * X * Rd.transpose();
  }
  avg /= static_cast<double>(group.size());
  const Matrix scalar = (avg.trace() / n) * Matrix::Identity(n, n);
  rep.irreducible = (avg - scalar).norm() <= 1e-10 * X.norm();
  rep.hypothesis_met = rep.irreducible && rep.group_preserves_measure;

  if (report.eigenvalues.size() < 2) fail(ErrorKind::InsufficientSpectrum, "spectrum has no nontrivial eigenvalue");
  const auto& cl = report.multiplicity_groups.at(static_cast<std::size_t>(report.group_of(1)));
  rep.multiplicity = static_cast<int>(cl.size());
  const Vector p = op.probabilities();
  const Vector sp = p.cwiseSqrt();
  Matrix Q(op.size(), rep.multiplicity);  // orthonormal basis of the cluster in ℓ²
  for (int c = 0; c < rep.multiplicity; ++c) Q.col(c) = report.eigenvectors.col(cl[static_cast<std::size_t>(c)]).cwiseProduct(sp);
  const Vector f1 = report.eigenvectors.col(1);
  Matrix F(op.size(), static_cast<Eigen::Index>(maps.size()));
  for (std::size_t g = 0; g < maps.size(); ++g) {
    const Vector y = apply_map(maps[g], f1).cwiseProduct(sp);
    F.col(static_cast<Eigen::Index>(g)) = y;
    const Vector out = y - Q * (Q.transpose() * y);
    rep.span_leakage = std::max(rep.span_leakage, out.norm() / std::max(y.norm(), 1e-300));
  }
  Eigen::JacobiSVD<Matrix> svd(F);
  const auto& s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > 1e-6 * s[0]) ++rep.span_dimension;

  if (!rep.hypothesis_met) {
    rep.status = "hypothesis not met";
    rep.claim_holds = true;
  } else {
    rep.claim_holds = rep.multiplicity == n && rep.span_dimension == rep.multiplicity && rep.span_leakage < 1e-4;
    rep.status = rep.claim_holds ? "dim E = n and E = span{f o R}" : "structure claim violated";
  }

  rep.cube_symmetric = rep.group_preserves_measure && rep.group_order == (1 << n) * (n == 1 ? 1 : (n == 2 ? 2 : 6));
  if (rep.cube_symmetric) {
    // f_i: the cluster vector odd in x_i and even in the other coordinates.
    auto find = [&](int i) -> int {
      for (int c : cl) {
        const auto& t = report.type_I[static_cast<std::size_t>(c)];
        if (report.type_decided[static_cast<std::size_t>(c)] && static_cast<int>(t.size()) == n - 1 &&
            std::find(t.begin(), t.end(), i) == t.end())
          return c;
      }
      return -1;
    };
    const int c1 = find(0);
    if (c1 < 0) {
      rep.basis_error = std::numeric_limits<double>::infinity();
      rep.max_inner = std::numeric_limits<double>::infinity();
    }
    for (int i = 1; i < n && c1 >= 0; ++i) {
      const int ci = find(i);
      if (ci < 0) {
        rep.basis_error = std::numeric_limits<double>::infinity();
        break;
      }
      Eigen::MatrixXi T = Eigen::MatrixXi::Identity(n, n);
      T(0, 0) = T(i, i) = 0;
      T(0, i) = T(i, 0) = 1;
      const Vector fa = report.eigenvectors.col(c1);
      const Vector fi = report.eigenvectors.col(ci);
      const Vector g = apply_map(signed_permutation_map(op, T), fa);
      const double err = std::min(mu_norm(op, fi - g), mu_norm(op, fi + g)) / mu_norm(op, fi);
      rep.basis_error = std::max(rep.basis_error, err);
      rep.max_inner = std::max(rep.max_inner, std::abs(op.inner(fa, fi)) / (mu_norm(op, fa) * mu_norm(op, fi)));
    }
  }
  return rep;
}

// ------------------------------------------------------------------ export

Json to_json(const SpectrumReport& r) {
  Json parity = Json::array(), types = Json::array();
  for (std::size_t i = 0; i < r.parity.size(); ++i) {
    parity.push_back(to_string(r.parity[i]));
    types.push_back(r.type_decided[i] ? Json(r.type_I[i]) : Json(nullptr));
  }
  return {{"eigenvalues", r.eigenvalues},
          {"parity", parity},
          {"parity_score", r.parity_score},
          {"type_I", types},
          {"multiplicity_groups", r.multiplicity_groups},
          {"residuals", r.residuals},
          {"lambda_max", r.lambda_max},
          {"parity_threshold", r.parity_threshold}};
}

Json to_json(const InterlaceReport& r) {
  return {{"lambda_odd_sorted", r.lambda_odd_sorted},
          {"lambda_even_first", r.lambda_even_first},
          {"holds", r.holds},
          {"margin", r.margin}};
}

Json to_json(const EigenspaceReport& r) {
  return {{"dimension", r.dimension},
          {"multiplicity", r.multiplicity},
          {"group_order", r.group_order},
          {"group_preserves_measure", r.group_preserves_measure},
          {"irreducible", r.irreducible},
          {"hypothesis_met", r.hypothesis_met},
          {"span_dimension", r.span_dimension},
          {"span_leakage", r.span_leakage},
          {"claim_holds", r.claim_holds},
          {"status", r.status},
          {"cube_symmetric", r.cube_symmetric},
          {"basis_error", r.basis_error},
          {"max_inner", r.max_inner}};
}

Json to_json(const VarianceReport& r) {
  return {{"lhs", r.lhs},
          {"rhs", r.rhs},
          {"holds", r.holds},
          {"corrections", r.corrections},
          {"partial_norms_squared", r.partial_norms_squared}};
}

void write_slice_csv(const GridOperator& op, const Vector& values, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  out.precision(10);
  out << (op.dim() == 1 ? "x,value\n" : "x,y,value\n");
  for (Eigen::Index a = 0; a < op.size(); ++a) {
    const auto idx = op.multi_index(op.active_cells[static_cast<std::size_t>(a)]);
    if (op.dim() == 3 && idx[2] != op.shape[2] / 2) continue;
    out << op.coordinate(0, idx[0]);
    if (op.dim() >= 2) out << ',' << op.coordinate(1, idx[1]);
    out << ',' << values[a] << '\n';
  }
}

}  // namespace loggap
