#pragma once

// Cusp-side error budget. Cusp coordinates are tau = log r on the model end
// (1, inf) x S^1 with metric dtau^2 + e^{-2 tau} dx^2; a function g(tau) has
// |grad g| = |g'| and Laplacian -(g'' - g').

#include "hypgap/kernels.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hypgap {

/// chi_plus rises from 0 to 1 on [1, tau0] with tau0 = 1 + width; chi_minus
/// rises on [tau0, tau0 + width], so chi_plus = 1 wherever chi_minus > 0.
struct CuspCutoffPair {
  double epsilon = 0.0;
  double width = 0.0;
  double tau0 = 0.0;
  double minus_start = 0.0;
  double minus_width = 0.0;
  /// Closed-form bounds for the scaled quintic profile.
  double sup_grad_plus = 0.0;
  double sup_lap_plus = 0.0;

  double plus(double tau) const { return smoothstep5((tau - 1.0) / width); }
  double plus_d1(double tau) const { return smoothstep5_d1((tau - 1.0) / width) / width; }
  double plus_d2(double tau) const { return smoothstep5_d2((tau - 1.0) / width) / (width * width); }
  double minus(double tau) const { return smoothstep5((tau - minus_start) / minus_width); }
  /// |Laplacian chi_plus| at tau.
  double plus_laplacian(double tau) const { return std::abs(plus_d2(tau) - plus_d1(tau)); }
};

/// Width chosen so that sup |chi'| <= eps/2 and sup |chi'' - chi'| <= eps.
inline CuspCutoffPair make_cutoff_pair(double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("make_cutoff_pair: epsilon must be positive");
  CuspCutoffPair p;
  p.epsilon = epsilon;
  p.width = std::max(2.0 * kSmoothstepMaxD1 / epsilon,
                     std::sqrt(2.0 * (kSmoothstepMaxD2 + kSmoothstepMaxD1) / epsilon));
  p.tau0 = 1.0 + p.width;
  p.minus_start = p.tau0;
  p.minus_width = p.width;
  p.sup_grad_plus = kSmoothstepMaxD1 / p.width;
  p.sup_lap_plus = kSmoothstepMaxD2 / (p.width * p.width) + kSmoothstepMaxD1 / p.width;
  return p;
}

/// sup over s in [s0, 1] of sqrt(a^2 + b^2), a = 1/(1/4 - s(1-s)),
/// b = 1/(1 - 4 s(1-s)); equal to sqrt(17) / (4 (s0 - 1/2)^2).
inline double cusp_resolvent_constant(double s0) {
  if (!(s0 > 0.5 && s0 <= 1.0))
    throw std::invalid_argument("cusp_resolvent_constant: s0 must lie in (1/2, 1]");
  const double q = (s0 - 0.5) * (s0 - 0.5);
  return std::sqrt(17.0) / (4.0 * q);
}

struct CuspBudget {
  double s0 = 0.0;
  double C = 0.0;
  double epsilon = 0.0;
  CuspCutoffPair cutoff;
  /// sup |Laplacian chi_plus| + 2 sup |grad chi_plus|
  double B = 0.0;
  double certificate = 0.0;
};

inline CuspBudget cusp_error_certificate(double s0) {
  CuspBudget b;
  b.s0 = s0;
  b.C = cusp_resolvent_constant(s0);
  b.epsilon = 1.0 / (15.0 * b.C);
  b.cutoff = make_cutoff_pair(b.epsilon);
  b.B = b.cutoff.sup_lap_plus + 2.0 * b.cutoff.sup_grad_plus;
  b.certificate = b.B * b.C;
  return b;
}

struct CylinderFloor {
  double min_rayleigh = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

/// Smallest Rayleigh quotient of the finite-difference form
///   sum (d_tau f)^2 e^{-tau} + e^{2 tau} (d_x f)^2 e^{-tau}  over  sum f^2 e^{-tau}
/// on (-L, L) x (R / m Z), f = 0 at tau = +-L. Interior tau nodes are
/// tau_i = -L + i h_tau, i = 1..n_tau - 1; x nodes j m / n_x. The smallest
/// generalized eigenvalue is found by inverse iteration with a sparse
/// Cholesky factorization.
inline CylinderFloor cylinder_spectral_floor(double m, int n_tau, int n_x, double L = 8.0,
                                             std::uint64_t seed = 1) {
  if (!(m >= 1.0)) throw std::invalid_argument("cylinder_spectral_floor: circumference must be >= 1");
  if (n_tau < 3 || n_x < 1 || !(L > 0.0))
    throw std::invalid_argument("cylinder_spectral_floor: degenerate grid");
  const int nt = n_tau - 1;
  const double ht = 2.0 * L / n_tau;
  const double hx = m / n_x;
  const int dim = nt * n_x;
  auto idx = [n_x](int i, int j) { return i * n_x + ((j % n_x) + n_x) % n_x; };
  auto tau = [&](double i) { return -L + i * ht; };

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd mass(dim);
  // tau-edges between node levels k and k+1, k = 0..nt, with boundary levels
  // 0 and nt+1 held at zero.
  for (int k = 0; k <= nt; ++k) {
    const double c = std::exp(-tau(k + 0.5)) * hx / ht;
    for (int j = 0; j < n_x; ++j) {
      const int a = k - 1, b = k;  // unknown indices of the two levels
      if (a >= 0) trip.emplace_back(idx(a, j), idx(a, j), c);
      if (b < nt) trip.emplace_back(idx(b, j), idx(b, j), c);
      if (a >= 0 && b < nt) {
        trip.emplace_back(idx(a, j), idx(b, j), -c);
        trip.emplace_back(idx(b, j), idx(a, j), -c);
      }
    }
  }
  for (int i = 0; i < nt; ++i) {
    const double t = tau(i + 1);
    const double c = std::exp(t) * ht / hx;
    for (int j = 0; j < n_x; ++j) {
      mass(idx(i, j)) = std::exp(-t) * ht * hx;
      if (n_x == 1) continue;
      trip.emplace_back(idx(i, j), idx(i, j), c);
      trip.emplace_back(idx(i, j + 1), idx(i, j + 1), c);
      trip.emplace_back(idx(i, j), idx(i, j + 1), -c);
      trip.emplace_back(idx(i, j + 1), idx(i, j), -c);
    }
  }
  // Symmetric scaling by mass^{-1/2} turns the pencil into one matrix.
  Eigen::SparseMatrix<double> A(dim, dim);
  A.setFromTriplets(trip.begin(), trip.end());
  const Eigen::VectorXd inv_sqrt = mass.cwiseSqrt().cwiseInverse();
  A = inv_sqrt.asDiagonal() * A * inv_sqrt.asDiagonal();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) throw std::runtime_error("cylinder_spectral_floor: factorization failed");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  v.normalize();
  CylinderFloor out;
  double theta = 0.0;
  // The residual floor is set by cond(A) * machine epsilon, so convergence is
  // judged on the Rayleigh quotient itself.
  for (int it = 1; it <= 1000; ++it) {
    Eigen::VectorXd w = solver.solve(v);
    w.normalize();
    const Eigen::VectorXd Aw = A * w;
    const double next = w.dot(Aw);
    out.residual = (Aw - next * w).norm() / next;
    out.iterations = it;
    v = w;
    const bool settled = it > 1 && std::abs(next - theta) <= 1e-15 * next;
    theta = next;
    if (settled || out.residual < 1e-12) break;
  }
  out.min_rayleigh = theta;
  return out;
}

}  // namespace hypgap
