#pragma once

// Nystrom discretization of the interior error operators: a mesh of the
// compact part of the fundamental domain, the blocks
//   a_g[i][j] = L(s, T; d(g z_i, z_j)) (1 - chi_minus(z_j)) w_j,
// their s-Lipschitz constant, and norms of sum a_g (x) rho(g^{-1}).

#include "hypgap/covers.hpp"
#include "hypgap/cusp.hpp"
#include "hypgap/geometry.hpp"
#include "hypgap/kernels.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypgap {

struct Mesh {
  std::vector<PlanePoint> points;
  /// Hyperbolic area h^2 / y^2 of each cell.
  std::vector<double> weights;
  double height_cutoff = 0.0;
  double h = 0.0;

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double t = 0.0;
    for (double w : weights) t += w;
    return t;
  }
};

/// Cell-centred lattice (x, y) = (-1 + (i + 1/2) h, (j + 1/2) h) kept when
/// inside the domain and at cusp height <= Y in every cusp.
inline Mesh build_mesh(const DomainSpec& spec, double Y, double h) {
  if (!(Y > 1.0)) throw std::invalid_argument("build_mesh: height cutoff must exceed 1");
  if (!(h > 0.0)) throw std::invalid_argument("build_mesh: spacing must be positive");
  Mesh mesh;
  mesh.height_cutoff = Y;
  mesh.h = h;
  const int nx = static_cast<int>(std::ceil(2.0 / h));
  const int ny = static_cast<int>(std::ceil(Y / h));
  for (int j = 0; j < ny; ++j) {
    const double y = (j + 0.5) * h;
    for (int i = 0; i < nx; ++i) {
      const PlanePoint z{-1.0 + (i + 0.5) * h, y};
      if (!in_domain(z, spec) || spec.max_cusp_height(z) > Y) continue;
      mesh.points.push_back(z);
      mesh.weights.push_back(h * h / (y * y));
    }
  }
  if (mesh.points.empty()) throw std::invalid_argument("build_mesh: mesh is empty");
  return mesh;
}

/// FNV-1a over the mesh coordinates and weights.
inline std::uint64_t mesh_hash(const Mesh& mesh) {
  std::uint64_t hsh = 1469598103934665603ull;
  auto feed = [&hsh](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) hsh = (hsh ^ b) * 1099511628211ull;
  };
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    feed(mesh.points[i].x);
    feed(mesh.points[i].y);
    feed(mesh.weights[i]);
  }
  return hsh;
}

/// chi_minus at z: the cusp coordinate is tau = log(height / width), and
/// chi_minus vanishes outside every cusp region.
inline double chi_minus_at(PlanePoint z, const DomainSpec& spec, const CuspCutoffPair& pair) {
  double v = 0.0;
  for (std::size_t k = 0; k < spec.cusps.size(); ++k) {
    const double r = spec.cusp_height(k, z) / spec.cusps[k].width;
    if (r > 1.0) v = std::max(v, pair.minus(std::log(r)));
  }
  return v;
}

/// Remainder kernel on (T, T + 1) replaced by piecewise Chebyshev tables.
class RemainderTable {
 public:
  RemainderTable(double s, double T, int nodes = 64, int pieces = 4, int degree = 32) : s_(s), T_(T) {
    const ResolventEvaluator res(s, nodes);
    for (int k = 0; k < pieces; ++k) {
      const double a = T + static_cast<double>(k) / pieces;
      const double b = T + static_cast<double>(k + 1) / pieces;
      pieces_.emplace_back(a, b, degree, [&](double r) { return remainder_kernel(res, T, r); });
    }
  }

  double operator()(double r) const {
    if (r <= T_ || r >= T_ + 1.0) return 0.0;
    const std::size_t k = std::min(pieces_.size() - 1, static_cast<std::size_t>((r - T_) * pieces_.size()));
    return pieces_[k](r);
  }
  double s() const { return s_; }
  double T() const { return T_; }

 private:
  double s_, T_;
  std::vector<ChebyshevInterpolant> pieces_;
};

/// One nonzero position of a block: row i, column j, distance r and the
/// factor (1 - chi_minus(z_j)) sqrt(w_i w_j).
///
/// Blocks are stored in the symmetrized form W^{1/2} a_g W^{-1/2}, where
/// a_g[i][j] = L (1 - chi_minus(z_j)) w_j is the Nystrom matrix. Its
/// Euclidean norms are the norms in L^2 of the mesh quadrature, which is
/// what the operator and Hilbert-Schmidt norms below measure.
struct ShellEntry {
  std::int32_t i = 0;
  std::int32_t j = 0;
  double r = 0.0;
  double factor = 0.0;
};

inline constexpr std::uint64_t kDefaultMaxShellEntries = 50'000'000;

/// For each support element, the (i, j) pairs with T < d(g z_i, z_j) < T + 1.
/// Independent of s, so blocks at any s are one table lookup per entry.
struct ShellGeometry {
  double T = 0.0;
  std::vector<GroupElement> support;
  std::vector<std::vector<ShellEntry>> entries;
  std::size_t mesh_size = 0;

  std::uint64_t nonzeros() const {
    std::uint64_t n = 0;
    for (const auto& e : entries) n += e.size();
    return n;
  }
};

/// Calls visit(k, row) with the shell entries of support element k, one
/// element at a time, without keeping earlier rows.
template <class Visit>
void for_each_shell_row(double T, const std::vector<GroupElement>& support, const Mesh& mesh, const DomainSpec& spec,
                        const CuspCutoffPair& cutoff, Visit&& visit) {
  const double q_lo = half_sinh_sq_of(T);
  const double q_hi = half_sinh_sq_of(T + 1.0);
  std::vector<double> factor(mesh.size()), root_w(mesh.size());
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    root_w[j] = std::sqrt(mesh.weights[j]);
    factor[j] = (1.0 - chi_minus_at(mesh.points[j], spec, cutoff)) * root_w[j];
  }
  std::vector<PlanePoint> image(mesh.size());
  std::vector<ShellEntry> row;
  for (std::size_t k = 0; k < support.size(); ++k) {
    row.clear();
    for (std::size_t i = 0; i < mesh.size(); ++i) image[i] = mobius_apply(support[k].matrix, mesh.points[i]);
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      for (std::size_t j = 0; j < mesh.size(); ++j) {
        if (factor[j] == 0.0) continue;
        const double q = half_sinh_sq(image[i], mesh.points[j]);
        if (q <= q_lo || q >= q_hi) continue;
        row.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j),
                       2.0 * std::asinh(std::sqrt(q)), factor[j] * root_w[i]});
      }
    }
    visit(k, static_cast<const std::vector<ShellEntry>&>(row));
  }
}

inline ShellGeometry build_shell(double T, const std::vector<GroupElement>& support, const Mesh& mesh,
                                 const DomainSpec& spec, const CuspCutoffPair& cutoff,
                                 std::uint64_t max_entries = kDefaultMaxShellEntries) {
  ShellGeometry shell;
  shell.T = T;
  shell.support = support;
  shell.mesh_size = mesh.size();
  std::uint64_t total = 0;
  for_each_shell_row(T, support, mesh, spec, cutoff, [&](std::size_t, const std::vector<ShellEntry>& row) {
    total += row.size();
    if (total > max_entries)
      throw std::length_error("interior coefficients exceed " + std::to_string(max_entries) +
                              " nonzero entries (|S| = " + std::to_string(support.size()) + ", mesh " +
                              std::to_string(mesh.size()) + " points)");
    shell.entries.push_back(row);
  });
  return shell;
}

using SparseBlock = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct InteriorCoefficients {
  double s = 0.0;
  double T = 0.0;
  CoefficientAssignment<SparseBlock> coeffs;
  std::vector<double> hs_norms;

  const std::vector<GroupElement>& support() const { return coeffs.support; }
};

inline InteriorCoefficients assemble_interior(double s, const ShellGeometry& shell, const RemainderTable& table) {
  if (std::abs(table.T() - shell.T) > 1e-12 || std::abs(table.s() - s) > 1e-15)
    throw std::invalid_argument("assemble_interior: table built for a different (s, T)");
  InteriorCoefficients out;
  out.s = s;
  out.T = shell.T;
  const auto M = static_cast<Eigen::Index>(shell.mesh_size);
  for (std::size_t k = 0; k < shell.support.size(); ++k) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(shell.entries[k].size());
    double hs = 0.0;
    for (const auto& e : shell.entries[k]) {
      const double v = table(e.r) * e.factor;
      trip.emplace_back(e.i, e.j, v);
      hs += v * v;
    }
    SparseBlock block(M, M);
    block.setFromTriplets(trip.begin(), trip.end());
    out.coeffs.support.push_back(shell.support[k]);
    out.coeffs.blocks.push_back(std::move(block));
    out.hs_norms.push_back(std::sqrt(hs));
  }
  return out;
}

inline InteriorCoefficients assemble_interior(double s, const ShellGeometry& shell, int nodes = 64) {
  return assemble_interior(s, shell, RemainderTable(s, shell.T, nodes));
}

/// Dense Nystrom block a_g at (s, T) by direct kernel evaluation, with the
/// column weights w_j (not symmetrized).
inline Eigen::MatrixXd assemble_a_gamma(double s, double T, const GroupElement& g, const Mesh& mesh,
                                        const DomainSpec& spec, const CuspCutoffPair& cutoff, int nodes = 64) {
  const ResolventEvaluator res(s, nodes);
  const auto M = static_cast<Eigen::Index>(mesh.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    const PlanePoint gz = mobius_apply(g.matrix, mesh.points[i]);
    for (Eigen::Index j = 0; j < M; ++j) {
      const double r = hyp_dist(gz, mesh.points[j]);
      if (r <= T || r >= T + 1.0) continue;
      A(i, j) = remainder_kernel(res, T, r) * (1.0 - chi_minus_at(mesh.points[j], spec, cutoff)) * mesh.weights[j];
    }
  }
  return A;
}

/// HS norms ||a_g(s1) - a_g(s2)|| for every support element.
inline std::vector<double> hs_differences(const ShellGeometry& shell, const RemainderTable& t1,
                                          const RemainderTable& t2) {
  std::vector<double> out;
  out.reserve(shell.entries.size());
  for (const auto& row : shell.entries) {
    double acc = 0.0;
    for (const auto& e : row) {
      const double d = (t1(e.r) - t2(e.r)) * e.factor;
      acc += d * d;
    }
    out.push_back(std::sqrt(acc));
  }
  return out;
}

struct DeviationResult {
  /// Safety-inflated constant.
  double c1 = 0.0;
  /// Largest raw difference quotient.
  double max_quotient = 0.0;
  double safety = 2.0;
  std::vector<double> s_grid;
};

/// c1 = safety * max over support elements and adjacent grid pairs of
/// ||a_g(s1) - a_g(s2)||_HS / |s1 - s2|. Coincident grid values are skipped.
inline DeviationResult deviation_constant(const ShellGeometry& shell, std::vector<double> s_grid,
                                          double safety = 2.0, int nodes = 64) {
  if (s_grid.size() < 3) throw std::invalid_argument("deviation_constant: need at least three s values");
  std::sort(s_grid.begin(), s_grid.end());
  std::vector<RemainderTable> tables;
  for (double s : s_grid) tables.emplace_back(s, shell.T, nodes);
  DeviationResult res;
  res.safety = safety;
  res.s_grid = s_grid;
  for (std::size_t k = 0; k + 1 < s_grid.size(); ++k) {
    const double ds = s_grid[k + 1] - s_grid[k];
    if (ds <= 0.0) continue;
    for (double d : hs_differences(shell, tables[k], tables[k + 1])) res.max_quotient = std::max(res.max_quotient, d / ds);
  }
  res.c1 = safety * res.max_quotient;
  return res;
}

/// Same constant as deviation_constant, computed row by row from the mesh so
/// that the shell is never stored. Also returns the total nonzero count.
inline DeviationResult deviation_constant_streaming(double T, const std::vector<GroupElement>& support,
                                                    const Mesh& mesh, const DomainSpec& spec,
                                                    const CuspCutoffPair& cutoff, std::vector<double> s_grid,
                                                    double safety = 2.0, int nodes = 64,
                                                    std::uint64_t* nonzeros = nullptr) {
  if (s_grid.size() < 3) throw std::invalid_argument("deviation_constant: need at least three s values");
  std::sort(s_grid.begin(), s_grid.end());
  std::vector<RemainderTable> tables;
  for (double s : s_grid) tables.emplace_back(s, T, nodes);
  DeviationResult res;
  res.safety = safety;
  res.s_grid = s_grid;
  std::uint64_t count = 0;
  std::vector<double> vals(s_grid.size()), acc(s_grid.size());
  for_each_shell_row(T, support, mesh, spec, cutoff, [&](std::size_t, const std::vector<ShellEntry>& row) {
    count += row.size();
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& e : row) {
      for (std::size_t k = 0; k < tables.size(); ++k) vals[k] = tables[k](e.r);
      for (std::size_t k = 0; k + 1 < tables.size(); ++k) {
        const double d = (vals[k + 1] - vals[k]) * e.factor;
        acc[k] += d * d;
      }
    }
    for (std::size_t k = 0; k + 1 < s_grid.size(); ++k) {
      const double ds = s_grid[k + 1] - s_grid[k];
      if (ds > 0.0) res.max_quotient = std::max(res.max_quotient, std::sqrt(acc[k]) / ds);
    }
  });
  res.c1 = safety * res.max_quotient;
  if (nonzeros) *nonzeros = count;
  return res;
}

struct HoldoutResult {
  int pairs = 0;
  int satisfied = 0;
  double worst_ratio = 0.0;

  double fraction() const { return pairs == 0 ? 1.0 : static_cast<double>(satisfied) / pairs; }
};

/// Checks max_g ||a_g(s1) - a_g(s2)||_HS <= c1 |s1 - s2| on random pairs
/// drawn uniformly from [s_lo, s_hi].
inline HoldoutResult lipschitz_holdout(const ShellGeometry& shell, double c1, double s_lo, double s_hi, int pairs,
                                       std::uint64_t seed, int nodes = 64) {
  Rng rng(seed);
  HoldoutResult out;
  for (int p = 0; p < pairs; ++p) {
    const double s1 = s_lo + (s_hi - s_lo) * rng.uniform();
    const double s2 = s_lo + (s_hi - s_lo) * rng.uniform();
    if (s1 == s2) continue;
    const RemainderTable t1(s1, shell.T, nodes), t2(s2, shell.T, nodes);
    double worst = 0.0;
    for (double d : hs_differences(shell, t1, t2)) worst = std::max(worst, d);
    const double ratio = worst / (c1 * std::abs(s1 - s2));
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    ++out.pairs;
    out.satisfied += ratio <= 1.0;
  }
  return out;
}

/// Norm of sum a_g (x) rho_phi(g^{-1}) on M x (n - 1) dimensions.
inline NormEstimate interior_norm_cover(const InteriorCoefficients& ic, const CoverSample& cover,
                                        PowerOptions opts = {}) {
  if (cover.n <= 1 || ic.coeffs.support.empty()) {
    NormEstimate est;
    est.method = NormMethod::PowerIteration;
    return est;
  }
  const CoverOperator<SparseBlock> op(ic.coeffs, cover, CoverConvention::InverseElement);
  return cover_operator_norm(op, opts);
}

/// Selberg-transform norm of the remainder kernel; bounds the free-group
/// operator since multiplication by 1 - chi_minus has norm <= 1.
inline NormEstimate interior_norm_free(double s, double T, double xi_max = 50.0, int grid_size = 0,
                                       int nodes = 64) {
  return remainder_norm(s, T, xi_max, grid_size, nodes);
}

/// Binary cache of assembled coefficients keyed by (s, T, mesh hash).
inline void save_coefficients(const std::string& path, const InteriorCoefficients& ic, std::uint64_t mesh_key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write coefficient cache " + path);
  auto put = [&out](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  const std::uint64_t magic = 0x48475043'4f454631ull;
  put(magic);
  put(ic.s);
  put(ic.T);
  put(mesh_key);
  put(static_cast<std::uint64_t>(ic.coeffs.support.size()));
  put(static_cast<std::int64_t>(ic.coeffs.dim()));
  for (std::size_t k = 0; k < ic.coeffs.support.size(); ++k) {
    const auto& g = ic.coeffs.support[k];
    put(static_cast<std::uint32_t>(g.word.size()));
    for (int l : g.word) put(static_cast<std::int32_t>(l));
    put(g.matrix.a);
    put(g.matrix.b);
    put(g.matrix.c);
    put(g.matrix.d);
    const auto& b = ic.coeffs.blocks[k];
    put(static_cast<std::uint64_t>(b.nonZeros()));
    for (Eigen::Index r = 0; r < b.outerSize(); ++r)
      for (SparseBlock::InnerIterator it(b, r); it; ++it) {
        put(static_cast<std::int32_t>(it.row()));
        put(static_cast<std::int32_t>(it.col()));
        put(it.value());
      }
    put(ic.hs_norms[k]);
  }
}

/// Loads a cache written by save_coefficients; fails when the key differs.
inline InteriorCoefficients load_coefficients(const std::string& path, double s, double T, std::uint64_t mesh_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read coefficient cache " + path);
  auto get = [&in](auto& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("truncated coefficient cache");
  };
  std::uint64_t magic = 0, key = 0, count = 0;
  std::int64_t dim = 0;
  InteriorCoefficients ic;
  get(magic);
  if (magic != 0x48475043'4f454631ull) throw std::runtime_error("not a coefficient cache: " + path);
  get(ic.s);
  get(ic.T);
  get(key);
  if (ic.s != s || ic.T != T || key != mesh_key) throw std::runtime_error("coefficient cache key mismatch: " + path);
  get(count);
  get(dim);
  for (std::uint64_t k = 0; k < count; ++k) {
    GroupElement g;
    std::uint32_t len = 0;
    get(len);
    for (std::uint32_t i = 0; i < len; ++i) {
      std::int32_t l = 0;
      get(l);
      g.word.push_back(l);
    }
    get(g.matrix.a);
    get(g.matrix.b);
    get(g.matrix.c);
    get(g.matrix.d);
    std::uint64_t nnz = 0;
    get(nnz);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::uint64_t e = 0; e < nnz; ++e) {
      std::int32_t r = 0, c = 0;
      double v = 0.0;
      get(r);
      get(c);
      get(v);
      trip.emplace_back(r, c, v);
    }
    SparseBlock b(dim, dim);
    b.setFromTriplets(trip.begin(), trip.end());
    double hs = 0.0;
    get(hs);
    ic.coeffs.support.push_back(std::move(g));
    ic.coeffs.blocks.push_back(std::move(b));
    ic.hs_norms.push_back(hs);
  }
  return ic;
}

}  // namespace hypgap
