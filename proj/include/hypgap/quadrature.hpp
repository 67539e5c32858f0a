#pragma once

// Gauss rules and Chebyshev interpolation used by every quadrature in the
// library. Nodes are computed once per rule and held by value.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hypgap {

/// Nodes and weights on a reference interval.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 2.0);
  if (n == 1) return rule;

  // Returns (P_n(x), P_n'(x)).
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };

  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^alpha (1+x)^beta,
/// built with the Golub-Welsch eigenvalue method.
inline QuadratureRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be >= 1");
  if (alpha <= -1.0 || beta <= -1.0)
    throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");
  const double ab = alpha + beta;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 1));
  diag(0) = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double t = 2.0 * k + ab;
    diag(k) = (beta * beta - alpha * alpha) / (t * (t + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double t = 2.0 * k + ab;
    const double num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
    const double den = t * t * (t + 1.0) * (t - 1.0);
    sub(k - 1) = std::sqrt(num / den);
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

/// Integrates f over [a, b] with a rule on [-1, 1].
template <class F>
double integrate(const QuadratureRule& rule, double a, double b, F&& f) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

/// Polynomial interpolant through Chebyshev points of the first kind on
/// [a, b], evaluated with the Clenshaw recurrence.
class ChebyshevInterpolant {
 public:
  ChebyshevInterpolant() = default;

  template <class F>
  ChebyshevInterpolant(double a, double b, int degree, F&& f) : a_(a), b_(b) {
    const int n = degree + 1;
    std::vector<double> values(n);
    for (int k = 0; k < n; ++k) {
      const double theta = std::numbers::pi * (k + 0.5) / n;
      values[k] = f(map_from_unit(std::cos(theta)));
    }
    coeffs_.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int k = 0; k < n; ++k) c += values[k] * std::cos(std::numbers::pi * j * (k + 0.5) / n);
      coeffs_[j] = 2.0 * c / n;
    }
    coeffs_[0] *= 0.5;
  }

  double operator()(double x) const {
    const double t = (2.0 * x - a_ - b_) / (b_ - a_);
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t j = coeffs_.size(); j-- > 1;) {
      const double b0 = 2.0 * t * b1 - b2 + coeffs_[j];
      b2 = b1;
      b1 = b0;
    }
    return t * b1 - b2 + coeffs_[0];
  }

  double lower() const { return a_; }
  double upper() const { return b_; }
  /// Magnitude of the trailing coefficients, a cheap accuracy indicator.
  double tail() const {
    const std::size_t n = coeffs_.size();
    if (n < 2) return 0.0;
    return std::abs(coeffs_[n - 1]) + std::abs(coeffs_[n - 2]);
  }

 private:
  double map_from_unit(double t) const { return 0.5 * (a_ + b_) + 0.5 * (b_ - a_) * t; }

  double a_ = 0.0;
  double b_ = 1.0;
  std::vector<double> coeffs_;
};

}  // namespace hypgap
