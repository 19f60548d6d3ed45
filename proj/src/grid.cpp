#include "loggap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loggap/errors.hpp"
#include "loggap/parallel.hpp"

namespace loggap {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<int> GridOperator::multi_index(std::int64_t full) const {
  std::vector<int> idx(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    idx[i] = static_cast<int>(full % shape[i]);
    full /= shape[i];
  }
  return idx;
}

std::int64_t GridOperator::full_index(std::span<const int> idx) const {
  std::int64_t full = 0;
  for (std::size_t i = shape.size(); i-- > 0;) full = full * shape[i] + idx[i];
  return full;
}

double GridOperator::coordinate(int axis, int j) const {
  const auto a = static_cast<std::size_t>(axis);
  const double c = 0.5 * (box.lo[a] + box.hi[a]);
  return c + (static_cast<double>(j) + 0.5 - 0.5 * shape[a]) * step[a];
}

std::vector<double> GridOperator::center(Eigen::Index active) const {
  const auto idx = multi_index(active_cells[static_cast<std::size_t>(active)]);
  std::vector<double> x(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) x[i] = coordinate(static_cast<int>(i), idx[i]);
  return x;
}

Vector GridOperator::evaluate(const ScalarField& f) const {
  Vector out(size());
  parallel_chunks(static_cast<std::size_t>(size()), 2048, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) out[static_cast<Eigen::Index>(c)] = f(center(static_cast<Eigen::Index>(c)));
  });
  return out;
}

double GridOperator::mean(const Vector& f) const { return mass.dot(f) / total_mass; }

double GridOperator::inner(const Vector& f, const Vector& g) const {
  return (mass.array() * f.array() * g.array()).sum() / total_mass;
}

double GridOperator::energy(const Vector& f) const { return f.dot(stiffness * f) / total_mass; }

GridOperator assemble_generator(const Density& density, const Box& box, std::vector<int> resolution,
                                const AssemblyOptions& options) {
  const int dim = density.dim;
  if (dim < 1 || dim > 3) fail(ErrorKind::DimensionTooLarge, "grid operators support dimensions 1 to 3");
  if (box.dim() != dim) fail(ErrorKind::InvalidSpec, "box dimension does not match the density");
  if (!box.is_centered()) fail(ErrorKind::InvalidSpec, "grid operators need a centered box");
  if (resolution.size() == 1 && dim > 1) resolution.assign(static_cast<std::size_t>(dim), resolution[0]);
  if (static_cast<int>(resolution.size()) != dim) fail(ErrorKind::InvalidSpec, "resolution has the wrong length");
  double cells = 1.0;
  for (int r : resolution) {
    if (r < 32 || r % 2 != 0) fail(ErrorKind::InvalidSpec, "resolution must be even and at least 32 per axis");
    cells *= r;
  }
  // Values, indices and column pointers of a (2·dim+1)-point stencil, plus
  // the factorization fill a shift-invert solve typically needs.
  const double stencil = 2.0 * dim + 1.0;
  const double estimate = cells * stencil * 16.0 * (dim == 3 ? 40.0 : 8.0);
  if (estimate > options.memory_budget)
    fail(ErrorKind::OutOfMemory, "estimated footprint " + std::to_string(estimate / 1e9) +
                                     " GB exceeds the budget; lower the resolution");

  GridOperator op;
  op.box = box;
  op.shape = resolution;
  for (int i = 0; i < dim; ++i) op.step.push_back(box.width(i) / resolution[static_cast<std::size_t>(i)]);
  const auto total = static_cast<std::int64_t>(cells);

  std::vector<double> logs(static_cast<std::size_t>(total));
  parallel_chunks(static_cast<std::size_t>(total), 4096, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (std::size_t c = b; c < e; ++c) {
      const auto idx = op.multi_index(static_cast<std::int64_t>(c));
      for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = op.coordinate(i, idx[static_cast<std::size_t>(i)]);
      logs[c] = density.log_density(x);
    }
  });
  op.full_to_active.assign(static_cast<std::size_t>(total), -1);
  double peak = -kInf;
  for (std::int64_t c = 0; c < total; ++c) {
    const double l = logs[static_cast<std::size_t>(c)];
    if (std::isnan(l) || l == kInf) fail(ErrorKind::SingularWeight, "log density is not finite at a grid cell");
    if (l == -kInf) continue;
    peak = std::max(peak, l);
  }
  for (std::int64_t c = 0; c < total; ++c) {
    // Cells below the double range relative to the peak carry no mass.
    const double l = logs[static_cast<std::size_t>(c)];
    if (!(l - peak > -700.0)) continue;
    op.full_to_active[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(op.active_cells.size());
    op.active_cells.push_back(c);
  }
  if (op.active_cells.empty()) fail(ErrorKind::SingularWeight, "density vanishes on every grid cell");
  const auto n = static_cast<Eigen::Index>(op.active_cells.size());
  op.mass.resize(n);
  op.log_mass.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    op.log_mass[a] = logs[static_cast<std::size_t>(op.active_cells[static_cast<std::size_t>(a)])] - peak;
    op.mass[a] = std::exp(op.log_mass[a]);
  }
  op.total_mass = op.mass.sum();

  // Face weights ρ(face)/h², in the same units as the mass ρ(center).
  std::vector<Eigen::Triplet<double, std::int64_t>> trips, sym_trips;
  trips.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(2 * dim + 1));
  sym_trips.reserve(trips.capacity());
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0), sym_diag(static_cast<std::size_t>(n), 0.0);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto idx = op.multi_index(op.active_cells[static_cast<std::size_t>(a)]);
    for (int axis = 0; axis < dim; ++axis) {
      const auto ax = static_cast<std::size_t>(axis);
      if (idx[ax] + 1 >= op.shape[ax]) continue;
      auto nb = idx;
      nb[ax] += 1;
      const std::int64_t nb_active = op.full_to_active[static_cast<std::size_t>(op.full_index(nb))];
      if (nb_active < 0) continue;
      for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = op.coordinate(i, idx[static_cast<std::size_t>(i)]);
      x[ax] += 0.5 * op.step[ax];
      const double lf = density.log_density(x);
      if (lf == -kInf) continue;
      const double h2 = op.step[ax] * op.step[ax];
      const double w = std::exp(lf - peak) / h2;
      trips.emplace_back(a, nb_active, -w);
      trips.emplace_back(nb_active, a, -w);
      diag[static_cast<std::size_t>(a)] += w;
      diag[static_cast<std::size_t>(nb_active)] += w;
      const double la = op.log_mass[a] + peak;
      const double lb = op.log_mass[static_cast<Eigen::Index>(nb_active)] + peak;
      const double s = std::exp(lf - 0.5 * (la + lb)) / h2;
      sym_trips.emplace_back(a, nb_active, -s);
      sym_trips.emplace_back(nb_active, a, -s);
      sym_diag[static_cast<std::size_t>(a)] += std::exp(lf - la) / h2;
      sym_diag[static_cast<std::size_t>(nb_active)] += std::exp(lf - lb) / h2;
    }
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    trips.emplace_back(a, a, diag[static_cast<std::size_t>(a)]);
    sym_trips.emplace_back(a, a, sym_diag[static_cast<std::size_t>(a)]);
  }
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(trips.begin(), trips.end());
  op.stiffness.makeCompressed();
  op.symmetric.resize(n, n);
  op.symmetric.setFromTriplets(sym_trips.begin(), sym_trips.end());
  op.symmetric.makeCompressed();
  return op;
}

GridOperator assemble_generator(const Density& density, int resolution) {
  Box box = density.support_box;
  // Symmetrize around the origin so reflections are exact index maps.
  for (int i = 0; i < box.dim(); ++i) {
    const double h = std::max(std::abs(box.lo[static_cast<std::size_t>(i)]), std::abs(box.hi[static_cast<std::size_t>(i)]));
    box.lo[static_cast<std::size_t>(i)] = -h;
    box.hi[static_cast<std::size_t>(i)] = h;
  }
  return assemble_generator(density, box, {resolution});
}

namespace {

std::vector<Eigen::Index> index_map(const GridOperator& op, const Eigen::MatrixXi& R) {
  const int dim = op.dim();
  // Destination axis of each source axis and its sign.
  std::vector<int> src(static_cast<std::size_t>(dim), -1), sign(static_cast<std::size_t>(dim), 1);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k)
      if (R(i, k) != 0) {
        src[static_cast<std::size_t>(i)] = k;
        sign[static_cast<std::size_t>(i)] = R(i, k);
      }
  for (int i = 0; i < dim; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const auto sk = static_cast<std::size_t>(src[si]);
    if (op.shape[si] != op.shape[sk] || std::abs(op.step[si] - op.step[sk]) > 1e-12 * op.step[si]) return {};
  }
  const auto n = op.size();
  std::vector<Eigen::Index> map(static_cast<std::size_t>(n));
  std::vector<int> target(static_cast<std::size_t>(dim));
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto idx = op.multi_index(op.active_cells[static_cast<std::size_t>(a)]);
    // (f∘R)(x) = f(Rx): the cell at x reads from the cell at Rx.
    for (int i = 0; i < dim; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const int j = idx[static_cast<std::size_t>(src[si])];
      target[si] = sign[si] > 0 ? j : op.shape[si] - 1 - j;
    }
    const std::int64_t t = op.full_to_active[static_cast<std::size_t>(op.full_index(target))];
    if (t < 0) return {};
    map[static_cast<std::size_t>(a)] = t;
  }
  return map;
}

bool is_signed_permutation(const Eigen::MatrixXi& R) {
  if (R.rows() != R.cols()) return false;
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    int row = 0, col = 0;
    for (Eigen::Index k = 0; k < R.cols(); ++k) {
      if (std::abs(R(i, k)) > 1) return false;
      row += std::abs(R(i, k));
      col += std::abs(R(k, i));
    }
    if (row != 1 || col != 1) return false;
  }
  return true;
}

}  // namespace

std::vector<Eigen::Index> reflection_map(const GridOperator& op, int axis) {
  Eigen::MatrixXi R = Eigen::MatrixXi::Identity(op.dim(), op.dim());
  if (axis < 0) R = -R;
  else R(axis, axis) = -1;
  return index_map(op, R);
}

std::vector<Eigen::Index> signed_permutation_map(const GridOperator& op, const Eigen::MatrixXi& R) {
  if (R.rows() != op.dim() || !is_signed_permutation(R))
    fail(ErrorKind::GroupDoesNotPreserveGrid, "group element is not a signed permutation of the grid axes");
  return index_map(op, R);
}

Vector apply_map(const std::vector<Eigen::Index>& map, const Vector& f) {
  Vector out(f.size());
  for (Eigen::Index a = 0; a < f.size(); ++a) out[a] = f[map[static_cast<std::size_t>(a)]];
  return out;
}

bool map_is_symmetry(const GridOperator& op, const std::vector<Eigen::Index>& map, double tol) {
  if (map.size() != static_cast<std::size_t>(op.size())) return false;
  const Vector diag = op.stiffness.diagonal();
  for (Eigen::Index a = 0; a < op.size(); ++a) {
    const auto b = map[static_cast<std::size_t>(a)];
    if (std::abs(op.mass[a] - op.mass[b]) > tol * std::max(op.mass[a], op.mass[b])) return false;
    if (std::abs(diag[a] - diag[b]) > tol * std::max(std::abs(diag[a]), std::abs(diag[b])) + 1e-300) return false;
  }
  return true;
}

}  // namespace loggap
