#include "hypgap/geometry.hpp"
#include "hypgap/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace hypgap;

TEST(Quadrature, LegendreIntegratesPolynomialsExactly) {
  const auto rule = gauss_legendre(10);
  for (int p = 0; p <= 19; ++p) {
    const double got = integrate(rule, 0.0, 2.0, [p](double x) { return std::pow(x, p); });
    EXPECT_NEAR(got, std::pow(2.0, p + 1) / (p + 1), 1e-12 * std::pow(2.0, p + 1)) << "degree " << p;
  }
}

TEST(Quadrature, JacobiWeightMatchesBetaFunction) {
  // int_{-1}^{1} (1 - x)^a (1 + x)^b dx = 2^{a+b+1} B(a+1, b+1)
  for (double b : {-0.5, -0.25, 0.0, 0.4}) {
    const auto rule = gauss_jacobi(12, 0.0, b);
    double sum = 0.0;
    for (double w : rule.weights) sum += w;
    const double beta = std::exp(std::lgamma(1.0) + std::lgamma(b + 1.0) - std::lgamma(b + 2.0));
    EXPECT_NEAR(sum, std::pow(2.0, b + 1.0) * beta, 1e-12);
  }
}

TEST(Quadrature, ChebyshevInterpolantOfSmoothFunction) {
  const ChebyshevInterpolant f(0.3, 1.7, 24, [](double x) { return std::exp(-x) * std::sin(3.0 * x); });
  for (double x = 0.3; x <= 1.7; x += 0.0137) EXPECT_NEAR(f(x), std::exp(-x) * std::sin(3.0 * x), 1e-12);
  EXPECT_LT(f.tail(), 1e-12);
}

TEST(Geometry, DistanceIsInvariantUnderGenerators) {
  const auto spec = gamma2_domain();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(0.2, 3.0);
  for (const auto& g : enumerate_ball(3, spec)) {
    const PlanePoint z{ux(rng), uy(rng)}, w{ux(rng), uy(rng)};
    const double d = hyp_dist(z, w);
    EXPECT_NEAR(hyp_dist(mobius_apply(g.matrix, z), mobius_apply(g.matrix, w)), d, 1e-9 * (1.0 + d));
  }
}

TEST(Geometry, DistanceClosedFormOnImaginaryAxis) {
  EXPECT_NEAR(hyp_dist({0.0, 1.0}, {0.0, std::exp(2.5)}), 2.5, 1e-13);
  EXPECT_NEAR(half_sinh_sq_of(2.5), std::pow(std::sinh(1.25), 2), 1e-12);
}

TEST(Geometry, WordReductionAndInverse) {
  EXPECT_EQ(reduce_word({1, 2, -2, -1, 2}), (Word{2}));
  EXPECT_EQ(inverse_word({1, -2, 1}), (Word{-1, 2, -1}));
  const auto spec = gamma2_domain();
  const auto g = word_to_element({1, -2, 1}, spec);
  const auto gi = word_to_element(inverse_word(g.word), spec);
  const auto e = g.matrix * gi.matrix;
  EXPECT_NEAR(std::abs(e.a), 1.0, 1e-12);
  EXPECT_NEAR(e.b, 0.0, 1e-12);
  EXPECT_NEAR(e.c, 0.0, 1e-12);
}

TEST(Geometry, BallEnumerationCountsAndUniqueness) {
  const auto spec = gamma2_domain();
  for (int R = 0; R <= 5; ++R) {
    const auto ball = enumerate_ball(R, spec);
    ASSERT_EQ(ball.size(), ball_size(2, R));
    std::set<Word> words;
    for (const auto& g : ball) {
      EXPECT_EQ(reduce_word(g.word), g.word);
      words.insert(g.word);
    }
    EXPECT_EQ(words.size(), ball.size());
  }
  EXPECT_EQ(ball_size(2, 1), 5u);
  EXPECT_EQ(ball_size(2, 2), 17u);
}

TEST(Geometry, DomainBoundaryConvention) {
  const auto spec = gamma2_domain();
  EXPECT_TRUE(in_domain({-1.0, 2.0}, spec));
  EXPECT_FALSE(in_domain({1.0, 2.0}, spec));
  // |2z + 1| = 1 belongs, |2z - 1| = 1 does not; both points are exact.
  EXPECT_TRUE(in_domain({-0.5, 0.5}, spec));
  EXPECT_FALSE(in_domain({0.5, 0.5}, spec));
  EXPECT_TRUE(in_domain({0.0, 0.9}, spec));
  EXPECT_FALSE(in_domain({0.5, 0.3}, spec));
  EXPECT_FALSE(in_domain({-0.5, 0.3}, spec));
}

TEST(Geometry, GeneratorsPairTheSides) {
  const auto spec = gamma2_domain();
  // g1 maps x = -1 to x = 1; g2 maps |2z + 1| = 1 to |2z - 1| = 1.
  const PlanePoint left{-1.0, 1.3};
  const PlanePoint img = mobius_apply(spec.generators[0], left);
  EXPECT_NEAR(img.x, 1.0, 1e-14);
  for (double t : {0.3, 1.1, 2.5}) {
    const PlanePoint z{-0.5 + 0.5 * std::cos(t), 0.5 * std::sin(t)};
    const PlanePoint w = mobius_apply(spec.generators[1], z);
    EXPECT_NEAR(std::hypot(2.0 * w.x - 1.0, 2.0 * w.y), 1.0, 1e-12);
  }
}

TEST(Geometry, EnumerateSAgreesWithBruteForceBall) {
  const auto spec = gamma2_domain();
  // Coarse sample set kept low so that the relevant words are short.
  std::vector<PlanePoint> K{{0.0, 1.0}, {0.3, 1.2}, {-0.4, 0.9}, {0.0, 1.8}};
  const double T = 2.0;
  const auto S = enumerate_S(T, K, spec);
  std::set<Word> found;
  std::size_t longest = 0;
  for (const auto& g : S) {
    found.insert(g.word);
    longest = std::max(longest, g.word.size());
  }
  ASSERT_LT(static_cast<int>(longest), 10);
  std::set<Word> brute;
  for (const auto& g : enumerate_ball(10, spec))
    if (min_displacement(g.matrix, K) <= T + 1.0) brute.insert(g.word);
  EXPECT_EQ(found, brute);
  for (const auto& g : S) EXPECT_TRUE(found.count(inverse_word(g.word))) << word_to_string(g.word);
}

TEST(Geometry, EnumerateSRejectsBadInput) {
  const auto spec = gamma2_domain();
  EXPECT_THROW(enumerate_S(2.0, {}, spec), std::invalid_argument);
  EXPECT_THROW(enumerate_S(-1.0, {{0.0, 1.0}}, spec), std::invalid_argument);
  EnumerateOptions o;
  o.max_word_length = 2;
  EXPECT_THROW(enumerate_S(3.0, {{0.0, 1.0}, {0.5, 0.9}}, spec, o), std::runtime_error);
}

TEST(Geometry, DomainSerializationRoundTrip) {
  const auto spec = gamma2_domain(3.5);
  const auto back = parse_domain("# comment\n" + serialize_domain(spec));
  ASSERT_EQ(back.rank(), 2);
  EXPECT_EQ(back.generators[0].b, 2.0);
  EXPECT_EQ(back.generators[1].c, 2.0);
  EXPECT_EQ(back.height_cutoff, 3.5);
  EXPECT_THROW(parse_domain("g1 = 1 1 1 1\n"), std::invalid_argument);
  EXPECT_THROW(parse_domain("colour = red\n"), std::invalid_argument);
}

TEST(Geometry, CuspHeightsAtVertices) {
  const auto spec = gamma2_domain();
  // Near 0 the conjugator -1/z makes height large.
  EXPECT_GT(spec.cusp_height(1, {0.0, 0.01}), 50.0);
  EXPECT_GT(spec.cusp_height(2, {0.999, 0.01}), 50.0);
  EXPECT_GT(spec.cusp_height(2, {-0.999, 0.01}), 50.0);
  EXPECT_NEAR(spec.total_area(), 2.0 * std::numbers::pi, 1e-15);
}
