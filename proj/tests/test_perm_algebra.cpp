#include "twodesign/perm_algebra.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace twodesign;

namespace {

// Index of the two-site label pair (first site, second site).
int idx(int first, int second) { return first + 2 * second; }

}  // namespace

TEST(LocalDim, RejectsBelowTwo) {
  EXPECT_THROW(LocalDim{1}, std::invalid_argument);
  EXPECT_EQ(LocalDim{3}.value(), 3);
  EXPECT_EQ(LocalDim{}.value(), 2);
}

TEST(ExperimentVector, StringRoundTripAndParity) {
  const auto a = ExperimentVector::from_string("1001");
  EXPECT_EQ(a.n(), 4);
  EXPECT_TRUE(a.bit(0));
  EXPECT_TRUE(a.bit(3));
  EXPECT_EQ(a.weight(), 2);
  EXPECT_EQ(a.parity(), Parity::even);
  EXPECT_EQ(a.to_string(), "1001");
  EXPECT_EQ(ExperimentVector::entangled_boundaries(5).to_string(), "10001");
  EXPECT_EQ(ExperimentVector::from_string("110").reversed().to_string(), "011");
  EXPECT_EQ(a.sign(0), -1);
  EXPECT_EQ(a.sign(1), 1);
  EXPECT_THROW(ExperimentVector::from_string("102"), std::invalid_argument);
}

TEST(Weingarten, ClosedFormValues) {
  auto [i2, s2] = weingarten_pair(LocalDim{2}, 2);
  EXPECT_NEAR(i2, 1.0 / 3, 1e-15);
  EXPECT_NEAR(s2, -1.0 / 6, 1e-15);
  auto [i4, s4] = weingarten_pair(LocalDim{2}, 4);
  EXPECT_NEAR(i4, 1.0 / 15, 1e-15);
  EXPECT_NEAR(s4, -1.0 / 60, 1e-15);
  auto [i3, s3] = weingarten_pair(LocalDim{3}, 3);
  EXPECT_NEAR(i3, 1.0 / 8, 1e-15);
  EXPECT_NEAR(s3, -1.0 / 24, 1e-15);
  EXPECT_THROW(weingarten_pair(LocalDim{2}, 1), std::invalid_argument);
}

TEST(Weingarten, CobasisIsDualToBasis) {
  for (int qv : {2, 3, 4}) {
    const double q = qv;
    auto [wi, ws] = weingarten_pair(LocalDim{qv}, q);
    Eigen::Matrix2d gram;
    gram << 1, 1 / q, 1 / q, 1;
    Eigen::Matrix2d cobasis;
    cobasis << wi, ws, ws, wi;
    cobasis *= q * q;  // unnormalized Gram q^2 <-> normalized basis
    EXPECT_LT((cobasis * gram - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-14) << "q=" << qv;
  }
}

TEST(GateTransfer, Qubit) {
  const auto g = gate_transfer(LocalDim{2});
  Eigen::Vector4d is = g.m.col(idx(0, 1));
  EXPECT_NEAR(is[idx(0, 0)], 0.4, 1e-15);
  EXPECT_NEAR(is[idx(1, 1)], 0.4, 1e-15);
  EXPECT_EQ(is[idx(0, 1)], 0.0);
  EXPECT_EQ(is[idx(1, 0)], 0.0);
  EXPECT_EQ(g.m.col(idx(0, 0)), Eigen::Vector4d(1, 0, 0, 0));
  EXPECT_EQ(g.m.col(idx(1, 1)), Eigen::Vector4d(0, 0, 0, 1));
  EXPECT_NEAR(g.spread(), 0.4, 1e-15);
  EXPECT_LT((g.m * g.m - g.m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GateTransfer, Qutrit) {
  const auto g = gate_transfer(LocalDim{3});
  EXPECT_NEAR(g.spread(), 0.3, 1e-15);
  EXPECT_LT((g.m * g.m - g.m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Boundary, SitePairs) {
  auto [p0, p1] = boundary_site_pair(1, LocalDim{2});
  EXPECT_NEAR(p0, 2.0 / 3, 1e-15);
  EXPECT_NEAR(p1, 2.0 / 3, 1e-15);
  auto [m0, m1] = boundary_site_pair(-1, LocalDim{2});
  EXPECT_NEAR(m0, 2.0, 1e-15);
  EXPECT_NEAR(m1, -2.0, 1e-15);
}

TEST(Boundary, TwoSiteState) {
  const auto st = boundary_state(ExperimentVector::from_string("01"), LocalDim{2});
  ASSERT_EQ(st.size(), 4);
  EXPECT_NEAR(st.coeffs[idx(0, 0)], 4.0 / 3, 1e-14);
  EXPECT_NEAR(st.coeffs[idx(0, 1)], -4.0 / 3, 1e-14);
  EXPECT_NEAR(st.coeffs[idx(1, 0)], 4.0 / 3, 1e-14);
  EXPECT_NEAR(st.coeffs[idx(1, 1)], -4.0 / 3, 1e-14);
}

TEST(Boundary, Weights) {
  const Eigen::Vector4d w00 = boundary_weights(ExperimentVector::from_string("00"));
  EXPECT_EQ(w00, Eigen::Vector4d(1, 1, 1, 1));
  const Eigen::VectorXd w11 = boundary_weights(ExperimentVector::from_string("11"));
  EXPECT_EQ(w11[idx(0, 0)], 1);
  EXPECT_EQ(w11[idx(0, 1)], -1);
  EXPECT_EQ(w11[idx(1, 0)], -1);
  EXPECT_EQ(w11[idx(1, 1)], 1);
  const Eigen::VectorXd w10 = boundary_weights(ExperimentVector::from_string("10"));
  EXPECT_EQ(w10[idx(0, 0)], 1);
  EXPECT_EQ(w10[idx(0, 1)], 1);
  EXPECT_EQ(w10[idx(1, 0)], -1);
  EXPECT_EQ(w10[idx(1, 1)], -1);
}

TEST(Boundary, NormMatchesWeightsDotState) {
  EXPECT_NEAR(boundary_norm(ExperimentVector::from_string("11"), LocalDim{2}), 16.0, 1e-12);
  EXPECT_NEAR(boundary_norm(ExperimentVector::from_string("00"), LocalDim{2}), 16.0 / 9, 1e-12);
  for (int qv : {2, 3}) {
    for (std::uint64_t bits = 0; bits < 8; ++bits) {
      const ExperimentVector a(3, bits);
      const LocalDim q{qv};
      const double dot = boundary_weights(a).dot(boundary_state(a, q).coeffs);
      double expect = 1;
      for (int i = 0; i < 3; ++i) expect *= (2 - 2.0 * a.sign(i) / qv) / (1 - 1.0 / (qv * qv));
      EXPECT_NEAR(dot, expect, 1e-12 * expect);
      EXPECT_NEAR(boundary_norm(a, q), expect, 1e-12 * expect);
    }
  }
}

TEST(Haar, DiagonalValues) {
  EXPECT_NEAR(haar_moment_diagonal(2, LocalDim{2}, Parity::even), 1.6, 1e-15);
  EXPECT_NEAR(haar_moment_diagonal(3, LocalDim{2}, Parity::odd), 16.0 / 7, 1e-14);
  EXPECT_NEAR(haar_moment_diagonal(40, LocalDim{2}, Parity::even), 2.0, 1e-10);
  EXPECT_NEAR(haar_moment_diagonal(40, LocalDim{2}, Parity::odd), 2.0, 1e-10);
}

TEST(Haar, ParityWeightedError) {
  // Singles only, n = 2: Q(11) = 16, Q(00) = 16/9.
  EXPECT_NEAR(parity_weighted_error(16, 2, LocalDim{2}, Parity::even), 9.0, 1e-12);
  EXPECT_NEAR(parity_weighted_error(16.0 / 9, 2, LocalDim{2}, Parity::even), 1.0 / 9, 1e-12);
}

TEST(TwoSite, CollisionFixture) {
  auto st = boundary_state(ExperimentVector::zeros(2), LocalDim{2});
  apply_two_site_inplace(st, 0, 1);
  EXPECT_NEAR(st.coeffs[idx(0, 0)], 0.8, 1e-15);
  EXPECT_EQ(st.coeffs[idx(0, 1)], 0.0);
  EXPECT_EQ(st.coeffs[idx(1, 0)], 0.0);
  EXPECT_NEAR(st.coeffs[idx(1, 1)], 0.8, 1e-15);
  // One gate on two sites is global Haar.
  EXPECT_NEAR(contract_boundary(ExperimentVector::zeros(2), st), 1.6, 1e-14);
}

TEST(TwoSite, IdentityLabelsAreFixed) {
  CommutantState<double> st(4, LocalDim{2});
  st.coeffs[0] = 1.7;
  const auto out = apply_two_site(st, 1, 3);
  EXPECT_EQ(out.coeffs, st.coeffs);
}

TEST(TwoSite, IdempotentAndCommuting) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  CommutantState<double> st(5, LocalDim{3});
  for (Eigen::Index k = 0; k < st.size(); ++k) st.coeffs[k] = normal(rng);
  const auto once = apply_two_site(st, 4, 1);
  const auto twice = apply_two_site(once, 4, 1);
  EXPECT_LT((once.coeffs - twice.coeffs).cwiseAbs().maxCoeff(), 1e-12);
  const auto ab = apply_two_site(apply_two_site(st, 0, 1), 2, 3);
  const auto ba = apply_two_site(apply_two_site(st, 2, 3), 0, 1);
  EXPECT_LT((ab.coeffs - ba.coeffs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TwoSite, RejectsBadPairs) {
  CommutantState<double> st(3, LocalDim{2});
  EXPECT_THROW(apply_two_site_inplace(st, 1, 1), std::out_of_range);
  EXPECT_THROW(apply_two_site_inplace(st, 0, 3), std::out_of_range);
}

TEST(GlobalHaar, ProjectsOntoUniformLabels) {
  for (std::uint64_t bits = 0; bits < 16; ++bits) {
    const ExperimentVector a(4, bits);
    auto st = boundary_state(a, LocalDim{2});
    apply_global_haar_inplace(st);
    EXPECT_NEAR(contract_boundary(a, st), haar_moment_diagonal(4, LocalDim{2}, a.parity()), 1e-12);
  }
}
