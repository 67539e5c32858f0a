#pragma once

// Radial kernels on the hyperbolic plane: the resolvent of the Laplacian,
// its smooth truncation, the remainder kernel left over by truncation, the
// Selberg transform of a compactly supported radial kernel, and operator
// norms read off as sup |h(xi)|.

#include "hypgap/norm_estimate.hpp"
#include "hypgap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypgap {

inline constexpr double kInvFourPi = 1.0 / (4.0 * std::numbers::pi);

/// Spectral parameter s in [1/2, 1]; lambda = s(1 - s).
struct SpectralParam {
  double s = 1.0;

  explicit SpectralParam(double value) : s(value) {
    if (!(value >= 0.5 && value <= 1.0))
      throw std::invalid_argument("spectral parameter must lie in [1/2, 1], got " +
                                  std::to_string(value));
  }
  double lambda() const { return s * (1.0 - s); }
};

// Quintic smoothstep S(u) = 6u^5 - 15u^4 + 10u^3 clamped to [0, 1].
inline double smoothstep5(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}
inline double smoothstep5_d1(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double v = u * (1.0 - u);
  return 30.0 * v * v;
}
inline double smoothstep5_d2(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
}
inline constexpr double kSmoothstepMaxD1 = 15.0 / 8.0;
inline const double kSmoothstepMaxD2 = 10.0 / std::sqrt(3.0);

/// chi_T(r) = 1 - S(r - T): equal to 1 up to T and 0 from T + 1 on.
struct CutoffProfile {
  double T = 0.0;

  double value(double r) const { return 1.0 - smoothstep5(r - T); }
  double d1(double r) const { return -smoothstep5_d1(r - T); }
  double d2(double r) const { return -smoothstep5_d2(r - T); }
  static double max_abs_d1() { return kSmoothstepMaxD1; }
  static double max_abs_d2() { return kSmoothstepMaxD2; }
};

/// Evaluates R(s; r) = (1/4pi) int_0^1 t^{s-1} (1-t)^{s-1} / (sigma - t)^s dt,
/// sigma = cosh^2(r/2), and its r-derivative.
///
/// The t-range is split at 1/2. On [0, 1/2] a Gauss-Jacobi rule absorbs
/// t^{s-1}. On the other half x = 1 - t; the factor (eps + x)^{-s} with
/// eps = sinh^2(r/2) is nearly singular for small r, so [0, eps] gets a
/// Gauss-Jacobi rule absorbing x^{s-1} and the rest is covered by panels
/// growing geometrically by 4 with Gauss-Legendre nodes.
class ResolventEvaluator {
 public:
  explicit ResolventEvaluator(double s, int nodes = 64)
      : s_(SpectralParam(s).s),
        nodes_(nodes),
        jacobi_(gauss_jacobi(nodes, 0.0, s - 1.0)),
        legendre_(gauss_legendre(nodes)) {}

  double s() const { return s_; }
  int nodes() const { return nodes_; }

  double value(double r) const {
    check_radius(r);
    return kInvFourPi * integral(eps_of(r), s_);
  }

  double derivative(double r) const {
    check_radius(r);
    const double sc = std::sinh(0.5 * r) * std::cosh(0.5 * r);
    return -s_ * sc * kInvFourPi * integral(eps_of(r), s_ + 1.0);
  }

 private:
  static void check_radius(double r) {
    if (!(r > 0.0)) throw std::domain_error("resolvent kernel is singular at r <= 0");
  }
  static double eps_of(double r) {
    const double h = std::sinh(0.5 * r);
    return h * h;
  }

  // int_0^1 t^{s-1} (1-t)^{s-1} (1 + eps - t)^{-p} dt
  double integral(double eps, double p) const {
    const double sm1 = s_ - 1.0;
    const double jac_scale_half = std::pow(0.25, s_);  // (A/2)^{s} with A = 1/2
    double left = 0.0;
    for (std::size_t i = 0; i < jacobi_.size(); ++i) {
      const double t = 0.25 * (1.0 + jacobi_.nodes[i]);
      left += jacobi_.weights[i] * std::pow(1.0 - t, sm1) * std::pow(eps + (1.0 - t), -p);
    }
    left *= jac_scale_half;

    auto smooth_part = [&](double x) { return std::pow(1.0 - x, sm1) * std::pow(eps + x, -p); };
    const double head = std::min(eps, 0.5);
    double right = 0.0;
    for (std::size_t i = 0; i < jacobi_.size(); ++i) {
      const double x = 0.5 * head * (1.0 + jacobi_.nodes[i]);
      right += jacobi_.weights[i] * smooth_part(x);
    }
    right *= std::pow(0.5 * head, s_);
    for (double a = head; a < 0.5;) {
      const double b = std::min(4.0 * a, 0.5);
      right += integrate(legendre_, a, b, [&](double x) { return std::pow(x, sm1) * smooth_part(x); });
      a = b;
    }
    return left + right;
  }

  double s_;
  int nodes_;
  QuadratureRule jacobi_;
  QuadratureRule legendre_;
};

/// A quadrature value with its self-reported error (N against 2N nodes).
struct KernelValue {
  double value = 0.0;
  double error = 0.0;
};

inline KernelValue resolvent_kernel(double s, double r, int nodes = 64) {
  const double a = ResolventEvaluator(s, nodes).value(r);
  const double b = ResolventEvaluator(s, 2 * nodes).value(r);
  return {a, std::abs(a - b)};
}

inline KernelValue resolvent_kernel_dr(double s, double r, int nodes = 64) {
  const double a = ResolventEvaluator(s, nodes).derivative(r);
  const double b = ResolventEvaluator(s, 2 * nodes).derivative(r);
  return {a, std::abs(a - b)};
}

/// (-chi_T'' - chi_T' / tanh r) R - 2 chi_T' dR/dr; zero outside (T, T + 1).
inline double remainder_kernel(const ResolventEvaluator& res, double T, double r) {
  if (r <= T || r >= T + 1.0) return 0.0;
  const CutoffProfile chi{T};
  const double c1 = chi.d1(r);
  const double c2 = chi.d2(r);
  return (-c2 - c1 / std::tanh(r)) * res.value(r) - 2.0 * c1 * res.derivative(r);
}

inline double remainder_kernel(double s, double T, double r, int nodes = 64) {
  if (!(T > 1.0)) throw std::invalid_argument("remainder_kernel: T must exceed 1");
  if (r <= T || r >= T + 1.0) return 0.0;
  return remainder_kernel(ResolventEvaluator(s, nodes), T, r);
}

/// Radial function r -> k(r) with compact support [support_lo, support_hi].
/// Breakpoints mark interior radii where k may fail to be smooth; between
/// consecutive breakpoints it must be smooth.
struct RadialKernel {
  std::function<double(double)> eval;
  double support_lo = 0.0;
  double support_hi = 0.0;
  bool smooth = true;
  std::vector<double> breakpoints;

  double operator()(double r) const {
    if (r < support_lo || r > support_hi || !eval) return 0.0;
    return eval(r);
  }
  bool compact() const { return std::isfinite(support_hi) && support_hi >= support_lo; }
};

inline RadialKernel zero_kernel() {
  return {[](double) { return 0.0; }, 0.0, 1.0, true, {}};
}

/// Remainder kernel at (s, T) as a RadialKernel; shares the evaluator.
inline RadialKernel remainder_radial_kernel(const ResolventEvaluator& res, double T) {
  if (!(T > 1.0)) throw std::invalid_argument("remainder_radial_kernel: T must exceed 1");
  return {[res, T](double r) { return remainder_kernel(res, T, r); }, T, T + 1.0, true, {}};
}

/// chi_T R restricted to [delta, T + 1]. Breakpoints double from delta to 1
/// so the logarithmic growth near the diagonal is resolved panel by panel.
inline RadialKernel truncated_resolvent_kernel(const ResolventEvaluator& res, double T,
                                               double delta = 1e-4) {
  if (!(delta > 0.0 && delta < 1.0 && T > 1.0))
    throw std::invalid_argument("truncated_resolvent_kernel: need 0 < delta < 1 < T");
  RadialKernel k;
  k.eval = [res, T](double r) { return CutoffProfile{T}.value(r) * res.value(r); };
  k.support_lo = delta;
  k.support_hi = T + 1.0;
  for (double b = 2.0 * delta; b < 1.0; b *= 2.0) k.breakpoints.push_back(b);
  k.breakpoints.push_back(1.0);
  k.breakpoints.push_back(T);
  return k;
}

struct SelbergOptions {
  /// Gauss-Legendre nodes per u-subpanel.
  int u_nodes = 20;
  /// Gauss-Legendre nodes per v-panel of the inner integral.
  int v_nodes = 32;
  /// Degree of the Chebyshev tables replacing the kernel.
  int table_degree = 48;
  /// Largest rho-length of one table piece.
  double piece_length = 0.5;
};

/// h(xi) = 2 sqrt(2) int_0^inf cos(xi u) Q(u) du with
/// Q(u) = int_u^inf k(rho) sinh(rho) / sqrt(cosh rho - cosh u) drho.
///
/// The inner integral uses cosh rho = cosh u + v^2, so Q(u) = 2 int k dv.
/// Q has square-root behaviour only as u approaches a breakpoint from
/// below; each u-panel [a, c] is parametrized by u = c - w^2 and split into
/// enough subpanels to follow cos(xi u) up to xi_max. Q is tabulated once at
/// the u-nodes, so each h(xi) costs one cosine sum.
class SelbergTransformer {
 public:
  SelbergTransformer(const RadialKernel& k, double xi_max, SelbergOptions opts = {})
      : xi_max_(xi_max) {
    if (!k.compact()) throw std::invalid_argument("selberg transform needs a compactly supported kernel");
    if (!(xi_max >= 0.0)) throw std::invalid_argument("selberg transform: xi_max must be >= 0");

    std::vector<double> edges{std::max(0.0, k.support_lo)};
    for (double b : k.breakpoints)
      if (b > edges.front() && b < k.support_hi) edges.push_back(b);
    edges.push_back(k.support_hi);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double a = edges[i], b = edges[i + 1];
      const int count = std::max(1, static_cast<int>(std::ceil((b - a) / opts.piece_length)));
      for (int j = 0; j < count; ++j) {
        const double p = a + (b - a) * j / count;
        const double q = a + (b - a) * (j + 1) / count;
        pieces_.push_back(ChebyshevInterpolant(p, q, opts.table_degree, [&k](double r) { return k(r); }));
      }
    }

    const QuadratureRule vrule = gauss_legendre(opts.v_nodes);
    const QuadratureRule urule = gauss_legendre(opts.u_nodes);

    std::vector<double> u_edges = edges;
    if (u_edges.front() > 0.0) u_edges.insert(u_edges.begin(), 0.0);
    for (std::size_t i = 0; i + 1 < u_edges.size(); ++i) {
      const double a = u_edges[i], c = u_edges[i + 1];
      const double wmax = std::sqrt(c - a);
      const int m = static_cast<int>(std::ceil(xi_max * (c - a) / 3.0)) + 2;
      for (int j = 0; j < m; ++j) {
        const double w0 = wmax * j / m, w1 = wmax * (j + 1) / m;
        for (std::size_t n = 0; n < urule.size(); ++n) {
          const double w = 0.5 * (w0 + w1) + 0.5 * (w1 - w0) * urule.nodes[n];
          const double weight = 0.5 * (w1 - w0) * urule.weights[n] * 2.0 * w;
          const double u = c - w * w;
          u_.push_back(u);
          wq_.push_back(2.0 * std::numbers::sqrt2 * weight * q_of(u, vrule));
        }
      }
    }
  }

  double operator()(double xi) const {
    if (std::abs(xi) > xi_max_ * (1.0 + 1e-12) + 1e-12)
      throw std::out_of_range("selberg transform evaluated beyond the resolved xi range");
    double sum = 0.0;
    for (std::size_t i = 0; i < u_.size(); ++i) sum += wq_[i] * std::cos(xi * u_[i]);
    return sum;
  }

  double xi_max() const { return xi_max_; }
  std::size_t node_count() const { return u_.size(); }

 private:
  // 2 int k(rho(v)) dv over every piece above u.
  double q_of(double u, const QuadratureRule& vrule) const {
    const double cu = std::cosh(u);
    double total = 0.0;
    for (const auto& piece : pieces_) {
      const double p = piece.lower(), q = piece.upper();
      if (q <= u) continue;
      // cosh a - cosh u written as a product to keep relative accuracy
      auto gap = [u](double a) { return 2.0 * std::sinh(0.5 * (a + u)) * std::sinh(0.5 * (a - u)); };
      const double vlo = p > u ? std::sqrt(gap(p)) : 0.0;
      const double vhi = std::sqrt(gap(q));
      total += integrate(vrule, vlo, vhi, [&](double v) {
        // rho = arccosh(cosh u + v^2); arccosh(1 + x) = log1p(x + sqrt(x (x + 2)))
        const double x = (cu - 1.0) + v * v;
        const double rho = std::log1p(x + std::sqrt(x * (x + 2.0)));
        return piece(std::clamp(rho, p, q));
      });
    }
    return 2.0 * total;
  }

  double xi_max_;
  std::vector<ChebyshevInterpolant> pieces_;
  std::vector<double> u_;
  std::vector<double> wq_;
};

inline double selberg_transform(const RadialKernel& k, double xi, SelbergOptions opts = {}) {
  const double ax = std::abs(xi);
  return SelbergTransformer(k, std::max(ax, 1.0), opts)(ax);
}

/// Transform values on the grid xi_j = j xi_max / G, j = 0..G.
struct SelbergEvaluation {
  std::vector<double> xi;
  std::vector<double> h;
  double sup = 0.0;
};

inline SelbergEvaluation evaluate_selberg_grid(const SelbergTransformer& tr, int grid_size) {
  if (grid_size < 1) throw std::invalid_argument("selberg grid needs at least one interval");
  SelbergEvaluation ev;
  for (int j = 0; j <= grid_size; ++j) {
    const double xi = tr.xi_max() * j / grid_size;
    ev.xi.push_back(xi);
    ev.h.push_back(tr(xi));
    ev.sup = std::max(ev.sup, std::abs(ev.h.back()));
  }
  return ev;
}

/// sup over [0, xi_max] of |h|: uniform grid, then golden-section search on
/// the two grid cells around the grid argmax. The grid value is a lower
/// bound of the true supremum; refine_gap records what refinement added.
inline NormEstimate radial_operator_norm(const SelbergTransformer& tr, int grid_size) {
  const SelbergEvaluation ev = evaluate_selberg_grid(tr, grid_size);
  std::size_t arg = 0;
  for (std::size_t j = 0; j < ev.h.size(); ++j)
    if (std::abs(ev.h[j]) > std::abs(ev.h[arg])) arg = j;

  double lo = ev.xi[arg == 0 ? 0 : arg - 1];
  double hi = ev.xi[std::min(arg + 1, ev.xi.size() - 1)];
  auto f = [&tr](double x) { return std::abs(tr(x)); };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  int iterations = 0;
  while (hi - lo > 1e-10 * std::max(1.0, hi) && iterations < 200) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    }
    ++iterations;
  }
  const double refined = std::max(f1, f2);

  NormEstimate est;
  est.value = std::max(ev.sup, refined);
  est.method = NormMethod::SelbergGrid;
  est.semantics = NormSemantics::GridEstimate;
  est.iterations = iterations;
  est.refine_gap = est.value - ev.sup;
  est.grid_size = grid_size;
  return est;
}

/// Grid size resolving the oscillation of h: for support in [0, b], h varies
/// on the scale 1/b, so the spacing is kept below 1/(4b).
inline int default_xi_grid(double xi_max, double support_hi) {
  return std::max(1000, static_cast<int>(std::ceil(4.0 * xi_max * support_hi)));
}

/// grid_size <= 0 selects default_xi_grid.
inline NormEstimate radial_operator_norm(const RadialKernel& k, double xi_max = 50.0,
                                         int grid_size = 0, SelbergOptions opts = {}) {
  if (grid_size <= 0) grid_size = default_xi_grid(xi_max, k.support_hi);
  return radial_operator_norm(SelbergTransformer(k, xi_max, opts), grid_size);
}

/// Norm of the remainder operator at (s, T).
inline NormEstimate remainder_norm(double s, double T, double xi_max = 50.0, int grid_size = 0,
                                   int nodes = 64) {
  const ResolventEvaluator res(s, nodes);
  return radial_operator_norm(remainder_radial_kernel(res, T), xi_max, grid_size);
}

struct DecayRow {
  double s = 0.0;
  double T = 0.0;
  double norm = 0.0;
};

struct DecayFit {
  double s = 0.0;
  /// Least-squares slope of log(norm / T) against T.
  double slope = 0.0;
  /// Smallest C with norm <= C T exp((1/2 - s) T) on every sampled T.
  double constant = 0.0;
};

struct DecayTable {
  std::vector<DecayRow> rows;
  std::vector<DecayFit> fits;
};

inline DecayTable verify_remainder_decay(const std::vector<double>& s_list,
                                         const std::vector<double>& T_list, double xi_max = 50.0,
                                         int grid_size = 0, int nodes = 64) {
  if (T_list.size() < 2) throw std::invalid_argument("verify_remainder_decay: need two T values");
  DecayTable table;
  for (double s : s_list) {
    const ResolventEvaluator res(s, nodes);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, c = 0;
    for (double T : T_list) {
      if (!(T >= 2.0)) throw std::invalid_argument("verify_remainder_decay: T must be >= 2");
      const double norm = radial_operator_norm(remainder_radial_kernel(res, T), xi_max, grid_size).value;
      table.rows.push_back({s, T, norm});
      const double y = std::log(norm / T);
      sx += T;
      sy += y;
      sxx += T * T;
      sxy += T * y;
      c = std::max(c, norm / (T * std::exp((0.5 - s) * T)));
    }
    const double n = static_cast<double>(T_list.size());
    table.fits.push_back({s, (n * sxy - sx * sy) / (n * sxx - sx * sx), c});
  }
  return table;
}

}  // namespace hypgap
