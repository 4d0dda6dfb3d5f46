#include "twodesign/engine.hpp"
#include "twodesign/errors.hpp"
#include "twodesign/oracle.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>

using namespace twodesign;

namespace {

const LocalDim kQubit{2};

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

int count_near(const Eigen::VectorXd& v, double x) {
  return static_cast<int>(((v.array() - x).abs() < 1e-10).count());
}

}  // namespace

TEST(DenseMoment, SingleGateIsProjector) {
  const auto g = dense_gate_moment({0, 1}, 2, kQubit);
  ASSERT_EQ(g.matrix.rows(), 256);
  EXPECT_LT((g.matrix * g.matrix - g.matrix).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((g.matrix - g.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  // The commutant of U (x) U is span{I, S}: rank 2.
  const auto ev = sorted_eigenvalues(g.matrix);
  EXPECT_EQ(count_near(ev, 1.0), 2);
  EXPECT_EQ(count_near(ev, 0.0), 254);
  EXPECT_THROW(dense_gate_moment({0, 1}, 1, kQubit), std::exception);
  EXPECT_THROW(dense_gate_moment({0, 1}, 4, kQubit), ConfigError);
}

TEST(DenseMoment, GlobalHaarSpectrum) {
  for (int n : {2, 3}) {
    const auto& h = dense_haar_moment(n, kQubit);
    const auto ev = sorted_eigenvalues(h.matrix);
    EXPECT_EQ(count_near(ev, 1.0), 2) << n;
    EXPECT_EQ(count_near(ev, 0.0), ev.size() - 2) << n;
  }
}

TEST(DenseMoment, GateTransferMatchesDense) {
  for (int qv : {2, 3}) {
    const LocalDim q{qv};
    const SectorMatrix sm = sector_matrix(MomentProgram::gate({0, 1}, 2, q));
    EXPECT_LT(sm.residual, 1e-12);
    Eigen::Matrix4d gram;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) gram(a, b) = std::pow(1.0 / qv, __builtin_popcount(a ^ b));
    const Eigen::Matrix4d transfer = sm.m * gram;
    EXPECT_LT((transfer - gate_transfer(q).m).cwiseAbs().maxCoeff(), 1e-12) << "q=" << qv;
  }
}

TEST(DenseMoment, HaarSectorHasFourEntries) {
  for (int n : {2, 3}) {
    const auto sm = sector_matrix(dense_haar_moment(n, kQubit));
    const std::int64_t last = (std::int64_t{1} << n) - 1;
    int nonzero = 0;
    for (Eigen::Index a = 0; a < sm.m.rows(); ++a)
      for (Eigen::Index b = 0; b < sm.m.cols(); ++b)
        if (std::abs(sm.m(a, b)) > 1e-12) {
          ++nonzero;
          EXPECT_TRUE((a == 0 || a == last) && (b == 0 || b == last));
        }
    EXPECT_EQ(nonzero, 4);
  }
}

TEST(Choi, HaarAgainstItselfIsZero) {
  EXPECT_NEAR(choi_bisection(dense_haar_moment(2, kQubit), 1e-13), 0.0, 1e-12);
  EXPECT_NEAR(choi_bisection(dense_haar_moment(3, kQubit), 1e-13), 0.0, 1e-12);
  const auto sm = sector_matrix(dense_haar_moment(3, kQubit));
  EXPECT_EQ(sector_error(sm, sm), 0.0);
}

TEST(Choi, SinglesOnlyTwoQubits) {
  const auto dense = dense_spec_moment(EnsembleSpec::singles(2), 0);
  EXPECT_NEAR(choi_bisection(dense, 1e-13), 9.0, 1e-9);
  const auto haar = sector_matrix(dense_haar_moment(2, kQubit));
  EXPECT_NEAR(sector_error(sector_matrix(dense), haar), 9.0, 1e-10);
}

TEST(Choi, DiagonalSpectrumMatchesDenseEigensolver) {
  for (const auto& dense : {dense_spec_moment(EnsembleSpec::from_family(Family::linear, 2), 0),
                            dense_gate_moment({0, 1}, 2, kQubit), dense_haar_moment(2, kQubit)}) {
    const auto spec = choi_spectrum(dense);
    EXPECT_TRUE(spec.product_basis);
    EXPECT_LT(spec.offdiag_mass, 1e-12);
    Eigen::VectorXd diag = spec.eigenvalues;
    std::sort(diag.data(), diag.data() + diag.size());
    const auto full = sorted_eigenvalues(choi_matrix(dense));
    EXPECT_LT((diag - full).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Choi, LinearGraphMatchesEngine) {
  const auto spec = EnsembleSpec::from_family(Family::linear, 3);
  for (int s : {1, 3, 6}) {
    const auto o = oracle_errors(spec, s);
    const double engine = multiplicative_error(spec, s).value;
    EXPECT_NEAR(o.choi, engine, 1e-8 * engine);
    EXPECT_NEAR(o.sector, engine, 1e-8 * engine);
    EXPECT_LT(o.sector_residual, 1e-12);
  }
  const auto o2 = oracle_errors(EnsembleSpec::from_family(Family::linear, 2), 3);
  EXPECT_NEAR(o2.choi, 0.0, 1e-10);
}

TEST(Sector, DiagonalDominance) {
  const auto haar3 = sector_matrix(dense_haar_moment(3, kQubit));
  for (const auto& spec : {EnsembleSpec::from_family(Family::linear, 3), EnsembleSpec::from_family(Family::star, 3),
                           EnsembleSpec::from_family(Family::complete, 3), EnsembleSpec::singles(3)}) {
    for (int s : {0, 1, 2, 5}) {
      const auto d = sector_dominance(sector_matrix(dense_spec_moment(spec, s)), haar3);
      EXPECT_LE(d.max_off_diagonal, d.max_diagonal + 1e-12) << spec.name() << " s=" << s;
    }
  }
  for (int d : {1, 3, 5}) {
    const auto dom = sector_dominance(sector_matrix(dense_spec_moment(EnsembleSpec::brickwork(3, Boundary::open), d)),
                                      haar3);
    EXPECT_LE(dom.max_off_diagonal, dom.max_diagonal + 1e-12);
  }
}

TEST(Psd, GraphsAndOddBrickwork) {
  for (int n : {2, 3}) {
    for (Family f : {Family::linear, Family::complete, Family::star, Family::circle}) {
      if (f == Family::circle && n < 3) continue;
      const auto spec = EnsembleSpec::from_family(f, n);
      for (int s = 0; s <= 6; ++s) {
        const auto r = psd_check(dense_spec_moment(spec, s));
        EXPECT_TRUE(r.psd) << spec.name() << " s=" << s << " min=" << r.min_eigenvalue;
        EXPECT_LT(r.asymmetry, 1e-10);
      }
    }
    for (int d : {1, 3, 5}) EXPECT_TRUE(psd_check(dense_spec_moment(EnsembleSpec::brickwork(n, Boundary::open), d)).psd);
  }
  EXPECT_TRUE(psd_check(dense_gate_moment({0, 1}, 2, kQubit)).psd);
}

TEST(Psd, EvenBrickworkIsMeasuredOnly) {
  const auto r = psd_check(dense_spec_moment(EnsembleSpec::brickwork(3, Boundary::open), 2));
  RecordProperty("min_eigenvalue", std::to_string(r.min_eigenvalue));
  EXPECT_TRUE(std::isfinite(r.min_eigenvalue));
}

TEST(Spectral, MatchesEngineAtEveryDepth) {
  for (Family f : {Family::linear, Family::complete, Family::star}) {
    const auto spec = EnsembleSpec::from_family(f, 3);
    for (std::uint64_t b = 0; b < 8; ++b) {
      const ExperimentVector a(3, b);
      for (int s = 1; s <= 10; ++s) {
        const double engine = quadratic_form(spec, a, s) - haar_moment_diagonal(3, kQubit, a.parity());
        const double spectral =
            spectral_error(spec, a, s) * haar_moment_diagonal(3, kQubit, a.parity());
        EXPECT_NEAR(spectral, engine, 1e-8 * std::max(1e-6, std::abs(engine))) << spec.name() << " s=" << s;
      }
    }
  }
  EXPECT_THROW(spectral_error(EnsembleSpec::brickwork(3, Boundary::open), ExperimentVector::zeros(3), 1),
               ConfigError);
}

TEST(MonteCarlo, HaarUnitaryIsUnitary) {
  std::mt19937_64 rng(1);
  const auto u = haar_unitary(4, rng);
  EXPECT_LT((u.adjoint() * u - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MonteCarlo, GateAverageMatchesDense) {
  const int samples = 20000;
  const auto mc = mc_haar_average({{0, 1}}, 2, kQubit, samples, 5);
  const auto exact = dense_gate_moment({0, 1}, 2, kQubit);
  EXPECT_LT((mc.matrix - exact.matrix).cwiseAbs().maxCoeff(), 5 / std::sqrt(double(samples)));
  const auto again = mc_haar_average({{0, 1}}, 2, kQubit, 50, 5);
  EXPECT_EQ(again.matrix, mc_haar_average({{0, 1}}, 2, kQubit, 50, 5).matrix);
}

TEST(MonteCarlo, GateTransferWithinThreeSigma) {
  const auto mc = mc_gate_transfer(kQubit, 20000, 3);
  const auto exact = gate_transfer(kQubit).m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      EXPECT_LE(std::abs(mc.mean(r, c) - exact(r, c)), 3 * mc.std_err(r, c) + 1e-12) << r << "," << c;
}
