#include "twodesign/analytics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace twodesign;

namespace {
const LocalDim kQubit{2};
}

TEST(Alpha, Values) {
  // Direct evaluation gives 3.87880; the rounded reference 3.8782 is 1.5e-4 off.
  EXPECT_NEAR(brickwork_alpha(12, kQubit), 3.8782, 1e-3);
  EXPECT_NEAR(brickwork_alpha(12, kQubit), 1 / std::log(5 / (4 * std::cos(M_PI / 12))), 1e-14);
  EXPECT_NEAR(brickwork_alpha(100000, kQubit), 1 / std::log(1.25), 1e-6);
  for (int n = 3; n < 200; ++n) EXPECT_LT(brickwork_alpha(n, kQubit), brickwork_alpha(n + 1, kQubit));
  EXPECT_THROW(brickwork_alpha(2, kQubit), ConfigError);
}

TEST(Beta, FiniteOnDomain) {
  for (int n = 4; n <= 200; ++n)
    for (BetaVariant v : {BetaVariant::entangled_boundaries, BetaVariant::collision})
      EXPECT_TRUE(std::isfinite(brickwork_beta(n, kQubit, v))) << n;
}

TEST(Beta, VariantsDifferOnlyInNumerator) {
  for (int qv : {2, 3})
    for (int n : {5, 10, 40}) {
      const LocalDim q{qv};
      const double alpha = brickwork_alpha(n, q);
      const double lhs = std::exp((brickwork_beta(n, q, BetaVariant::entangled_boundaries) -
                                   brickwork_beta(n, q, BetaVariant::collision)) /
                                  alpha);
      const double q2 = qv * qv;
      const double f = (q2 + 1) * (q2 + 1) - 4 * q2 * std::cos(2 * M_PI / n);
      const double rhs = f * f / std::pow(q2 - 1, 4);
      EXPECT_NEAR(lhs, rhs, 1e-10 * rhs);
    }
}

TEST(Beta, DepthGapApproachesAsymptote) {
  const int n = 1000;
  const double gap = design_depth_formula(n, kQubit, 1e-6, BetaVariant::entangled_boundaries) -
                     design_depth_formula(n, kQubit, 1e-6, BetaVariant::collision);
  EXPECT_NEAR(gap, delta_gap_asymptote(n), 0.01 * delta_gap_asymptote(n));
  EXPECT_NEAR(delta_gap_asymptote(1) , 314.52, 0.01);
}

TEST(DepthFormula, Values) {
  EXPECT_NEAR(leading_order_depth(12, kQubit, 0.01), 26.44, 0.01);
  const double f = design_depth_formula(12, kQubit, 0.01, BetaVariant::entangled_boundaries);
  EXPECT_NEAR(f, brickwork_alpha(12, kQubit) * (std::log(12.0) - std::log(0.01)) +
                     brickwork_beta(12, kQubit, BetaVariant::entangled_boundaries),
              1e-12);
  const double a = brickwork_alpha(12, kQubit);
  EXPECT_NEAR(design_depth_formula(12, kQubit, 0.01 / M_E, BetaVariant::entangled_boundaries) - f, a, 1e-10);
  EXPECT_THROW(design_depth_formula(12, kQubit, 1.5, BetaVariant::collision), ConfigError);
}

TEST(Dalzell, Brickwork) {
  // Constant: log A - log log 2 = -13.81.
  const double denom = std::log(1.25);
  EXPECT_NEAR(dalzell_brickwork_bound(1, kQubit, 1e-12) * denom, -13.81, 0.005);
  EXPECT_LT(dalzell_brickwork_bound(100000, kQubit, 0.01), 0.0);
  EXPECT_GT(dalzell_brickwork_bound(10000000, kQubit, 0.01), 0.0);
}

TEST(Dalzell, General) {
  EXPECT_NEAR(dalzell_general_quoted(50, 0.01), 4.491, 5e-4);
  // The relaxed expression at q = 2 carries the constant log_5(6 / log 3) = 1.055.
  EXPECT_NEAR(std::log(50 / 0.01) / std::log(5.0) - dalzell_general_relaxed(50, kQubit, 0.01), 1.0548, 5e-4);
  for (double eps : {0.1, 0.01, 0.001})
    EXPECT_LE(dalzell_general_relaxed(50, kQubit, eps), dalzell_general_bound(50, kQubit, eps) + 1e-12);
}

TEST(Disconnection, Bounds) {
  EXPECT_NEAR(bridge_gate_bound(12, 0.01), 30 * std::log(100.0), 1e-12);
  EXPECT_NEAR(bridge_gate_bound(12, 0.01), 138.155, 1e-3);
  for (int n = 4; n < 40; ++n) EXPECT_GE(bridge_gate_bound_exact(n, 0.01), bridge_gate_bound(n, 0.01));
  for (int n : {4, 8, 12}) {
    const double b = disconnection_error_bound(0.3, n / 2, n, kQubit);
    const double qh = std::pow(2.0, n / 2);
    EXPECT_NEAR(b, 0.3 * std::pow((qh + 1) / (qh - 1), 2), 1e-12);
    EXPECT_GE(b, 0.3);
  }
  EXPECT_THROW(disconnection_error_bound(0.5, 0, 4, kQubit), ConfigError);
}

TEST(Precision, LongDoubleAgrees) {
  for (int n : {3, 8, 16, 50, 1000}) {
    for (BetaVariant v : {BetaVariant::entangled_boundaries, BetaVariant::collision}) {
      const double d = design_depth_formula(n, kQubit, 0.01, v);
      const long double ld = design_depth_formula<long double>(n, kQubit, 0.01, v);
      EXPECT_NEAR(d, static_cast<double>(ld), 1e-12 * std::abs(d)) << n;
    }
    const double g = dalzell_general_bound(n, kQubit, 0.01);
    EXPECT_NEAR(g, static_cast<double>(dalzell_general_bound<long double>(n, kQubit, 0.01)), 1e-12 * std::abs(g));
  }
}

TEST(Variants, Parse) {
  EXPECT_EQ(parse_beta_variant("collision"), BetaVariant::collision);
  EXPECT_EQ(parse_beta_variant("entangled_boundaries"), BetaVariant::entangled_boundaries);
  EXPECT_THROW(parse_beta_variant("other"), ConfigError);
}
