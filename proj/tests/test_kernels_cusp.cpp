#include "hypgap/cusp.hpp"
#include "hypgap/kernels.hpp"
#include "hypgap/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace hypgap;

namespace {

double closed_form_s1(double r) {
  const double sigma = std::cosh(0.5 * r) * std::cosh(0.5 * r);
  return kInvFourPi * std::log(sigma / (sigma - 1.0));
}

// h(xi) = int_0^inf k(r) sinh r int_0^{2 pi} Re (cosh r - sinh r cos t)^{-1/2 - i xi} dt dr,
// by the periodic trapezoid rule in t and Gauss-Legendre panels in r. The t
// integrand peaks in a window of width about 2 e^{-r}, hence the many nodes.
double selberg_polar_oracle(const RadialKernel& k, double xi) {
  const auto rule = gauss_legendre(40);
  const int nt = 4000;
  double total = 0.0;
  const double a = k.support_lo, b = k.support_hi;
  const int panels = static_cast<int>(std::ceil((b - a) / 0.1));
  for (int p = 0; p < panels; ++p) {
    const double lo = a + (b - a) * p / panels, hi = a + (b - a) * (p + 1) / panels;
    total += integrate(rule, lo, hi, [&](double r) {
      double ang = 0.0;
      for (int j = 0; j < nt; ++j) {
        const double x = std::cosh(r) - std::sinh(r) * std::cos(2.0 * std::numbers::pi * j / nt);
        ang += std::cos(xi * std::log(x)) / std::sqrt(x);
      }
      ang *= 2.0 * std::numbers::pi / nt;
      return k(r) * std::sinh(r) * ang;
    });
  }
  return total;
}

}  // namespace

TEST(Kernels, SpectralParamRange) {
  EXPECT_THROW(SpectralParam(0.4), std::invalid_argument);
  EXPECT_THROW(SpectralParam(1.2), std::invalid_argument);
  EXPECT_NEAR(SpectralParam(0.75).lambda(), 0.1875, 1e-15);
}

TEST(Kernels, ResolventAtSOneMatchesClosedForm) {
  for (double r : {0.01, 0.5, 2.0, 7.0, 15.0}) {
    const auto v = resolvent_kernel(1.0, r);
    EXPECT_NEAR(v.value / closed_form_s1(r), 1.0, 1e-10) << r;
    EXPECT_LT(v.error, 1e-10 * std::abs(v.value));
  }
}

TEST(Kernels, ResolventSolvesRadialEquation) {
  // R'' + coth(r) R' + s(1 - s) R = 0 away from the diagonal.
  for (double s : {0.6, 0.75, 0.9}) {
    const ResolventEvaluator res(s);
    for (double r : {0.7, 2.0, 5.0}) {
      const double h = 1e-3;
      const double d2 = (res.derivative(r + h) - res.derivative(r - h)) / (2.0 * h);
      const double lhs = d2 + res.derivative(r) / std::tanh(r) + s * (1.0 - s) * res.value(r);
      EXPECT_NEAR(lhs / std::abs(res.value(r)), 0.0, 1e-5) << s << " " << r;
    }
  }
}

TEST(Kernels, DerivativeMatchesFiniteDifference) {
  const ResolventEvaluator res(0.7);
  for (double r : {0.05, 1.0, 6.0}) {
    const double h = 1e-5 * r;
    const double fd = (res.value(r + h) - res.value(r - h)) / (2.0 * h);
    EXPECT_NEAR(res.derivative(r) / fd, 1.0, 1e-7) << r;
  }
}

TEST(Kernels, ResolventIsPositiveAndDecreasing) {
  const ResolventEvaluator res(0.8);
  double prev = res.value(0.01);
  for (double r = 0.05; r < 20.0; r += 0.37) {
    const double v = res.value(r);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Kernels, DiagonalLogarithmUsesTwoPi) {
  // Green's function of the plane Laplacian: -(1/2 pi) log r near r = 0.
  const double a = resolvent_kernel(0.75, 1e-3).value + std::log(0.5e-3) / (2.0 * std::numbers::pi);
  const double b = resolvent_kernel(0.75, 1e-6).value + std::log(0.5e-6) / (2.0 * std::numbers::pi);
  EXPECT_NEAR(a, b, 1e-5);
}

TEST(Kernels, RejectsNonPositiveRadius) {
  EXPECT_THROW(resolvent_kernel(0.8, 0.0), std::domain_error);
}

TEST(Kernels, SmoothstepBounds) {
  EXPECT_EQ(smoothstep5(-1.0), 0.0);
  EXPECT_EQ(smoothstep5(2.0), 1.0);
  EXPECT_NEAR(smoothstep5(0.5), 0.5, 1e-15);
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double u = i / 100000.0;
    m1 = std::max(m1, std::abs(smoothstep5_d1(u)));
    m2 = std::max(m2, std::abs(smoothstep5_d2(u)));
  }
  EXPECT_NEAR(m1, kSmoothstepMaxD1, 1e-9);
  EXPECT_NEAR(m2, kSmoothstepMaxD2, 1e-6);
  EXPECT_LE(m2, kSmoothstepMaxD2);
}

TEST(Kernels, RemainderKernelSupport) {
  const ResolventEvaluator res(0.75);
  EXPECT_EQ(remainder_kernel(res, 4.0, 3.9), 0.0);
  EXPECT_EQ(remainder_kernel(res, 4.0, 5.1), 0.0);
  EXPECT_NE(remainder_kernel(res, 4.0, 4.5), 0.0);
}

TEST(Kernels, RemainderIsLaplacianOfTruncation) {
  // L = (Delta - s(1 - s)) (chi R) off the diagonal, Delta = -(d^2 + coth d).
  const double s = 0.75, T = 3.0;
  const ResolventEvaluator res(s);
  const CutoffProfile chi{T};
  auto f = [&](double r) { return chi.value(r) * res.value(r); };
  for (double r : {3.2, 3.5, 3.8}) {
    const double h = 1e-4;
    const double d1 = (f(r + h) - f(r - h)) / (2.0 * h);
    const double d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
    const double lap = -(d2 + d1 / std::tanh(r)) - s * (1.0 - s) * f(r);
    EXPECT_NEAR(remainder_kernel(res, T, r), lap, 1e-6 * std::abs(lap) + 1e-9) << r;
  }
}

TEST(Kernels, SelbergTransformOfZeroKernelVanishes) {
  EXPECT_EQ(selberg_transform(zero_kernel(), 3.0), 0.0);
}

TEST(Kernels, SelbergTransformMatchesPolarOracle) {
  const ResolventEvaluator res(0.75);
  const RadialKernel k = remainder_radial_kernel(res, 3.0);
  const SelbergTransformer tr(k, 10.0);
  for (double xi : {0.0, 0.7, 2.5, 6.0}) {
    const double oracle = selberg_polar_oracle(k, xi);
    EXPECT_NEAR(tr(xi), oracle, 1e-7 * (1.0 + std::abs(oracle))) << xi;
  }
}

TEST(Kernels, SelbergTransformOfBumpMatchesPolarOracle) {
  RadialKernel bump{[](double r) { return std::exp(-1.0 / (r * (2.0 - r))); }, 0.0, 2.0, true, {}};
  const SelbergTransformer tr(bump, 5.0);
  for (double xi : {0.0, 1.0, 4.0}) EXPECT_NEAR(tr(xi), selberg_polar_oracle(bump, xi), 1e-8) << xi;
  EXPECT_THROW(tr(6.0), std::out_of_range);
}

TEST(Kernels, NormIsSupOfTransform) {
  const auto est = remainder_norm(0.75, 4.0, 20.0);
  const ResolventEvaluator res(0.75);
  const SelbergTransformer tr(remainder_radial_kernel(res, 4.0), 20.0);
  double sup = 0.0;
  for (int j = 0; j <= 4000; ++j) sup = std::max(sup, std::abs(tr(20.0 * j / 4000)));
  EXPECT_GE(est.value, sup - 1e-12);
  EXPECT_LE(est.value, sup * (1.0 + 1e-3));
  EXPECT_GE(est.refine_gap, 0.0);
  EXPECT_EQ(est.semantics, NormSemantics::GridEstimate);
}

TEST(Kernels, RemainderNormDecreasesInT) {
  double prev = std::numeric_limits<double>::infinity();
  for (double T : {3.0, 5.0, 7.0}) {
    const double v = remainder_norm(0.9, T).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Cusp, BudgetIdentity) {
  for (int k = 0; k <= 9; ++k) {
    const double s0 = 0.55 + 0.05 * k;
    const auto b = cusp_error_certificate(s0);
    EXPECT_NEAR(3.0 * b.epsilon * b.C, 0.2, 1e-12);
    EXPECT_LE(b.certificate, 0.2);
    // |Laplacian| <= eps and 2 |grad| <= eps.
    EXPECT_LE(b.B, 2.0 * b.epsilon + 1e-15);
  }
}

TEST(Cusp, ResolventConstantIsSupOverInterval) {
  for (double s0 : {0.55, 0.7, 0.9}) {
    double sup = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double s = s0 + (1.0 - s0) * i / 20000.0;
      const double q = 0.25 - s * (1.0 - s);
      sup = std::max(sup, std::hypot(1.0 / q, 1.0 / (4.0 * q)));
    }
    EXPECT_NEAR(cusp_resolvent_constant(s0), sup, 1e-9 * sup);
  }
  EXPECT_THROW(cusp_resolvent_constant(0.5), std::invalid_argument);
}

TEST(Cusp, CutoffPairProperties) {
  const auto pair = make_cutoff_pair(0.01);
  double grad = 0.0, lap = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double tau = 1.0 + 2.0 * pair.width * i / 200000.0;
    grad = std::max(grad, std::abs(pair.plus_d1(tau)));
    lap = std::max(lap, pair.plus_laplacian(tau));
    if (pair.minus(tau) > 0.0) EXPECT_EQ(pair.plus(tau), 1.0);
  }
  EXPECT_LE(grad, 0.005 + 1e-12);
  EXPECT_LE(lap, 0.01 + 1e-12);
  EXPECT_LE(grad, pair.sup_grad_plus + 1e-15);
  EXPECT_LE(lap, pair.sup_lap_plus + 1e-15);
  EXPECT_EQ(pair.plus(1.0), 0.0);
  EXPECT_EQ(pair.plus(pair.tau0), 1.0);
  EXPECT_EQ(pair.minus(pair.tau0), 0.0);
  EXPECT_THROW(make_cutoff_pair(0.0), std::invalid_argument);
}

TEST(Cusp, CylinderFloorCoarseGrid) {
  const auto f = cylinder_spectral_floor(2.0, 50, 8);
  EXPECT_GE(f.min_rayleigh, 0.249);
  EXPECT_LT(f.min_rayleigh, 0.3);
  EXPECT_THROW(cylinder_spectral_floor(0.5, 50, 8), std::invalid_argument);
}

TEST(Cusp, CylinderFloorMatchesOneDimensionalLimit) {
  // The x-constant mode gives -(e^{tau} (e^{-tau} f')') = lambda f on (-L, L)
  // with Dirichlet ends: lambda = 1/4 + (pi / 2L)^2.
  const double L = 8.0;
  const double expect = 0.25 + std::pow(std::numbers::pi / (2.0 * L), 2);
  const auto f = cylinder_spectral_floor(2.0, 800, 1, L);
  EXPECT_NEAR(f.min_rayleigh, expect, 2e-5);
}
