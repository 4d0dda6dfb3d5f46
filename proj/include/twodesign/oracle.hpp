#pragma once

// Ground truth at small n: the dense vectorized two-copy moment operator built
// from exact Weingarten projectors, Choi-matrix bisection on the multiplicative
// error, the sector (eigenvalue-ratio) formula and Monte Carlo Haar averages.
//
// Dense index layout: site-major, site 0 least significant, base q^4. The digit
// of one site is i1 + q*i2 + q^2*j1 + q^3*j2, where (i1, i2) index the two
// conjugated copies and (j1, j2) the two plain copies of the row; columns use
// the same layout for (k1, k2, l1, l2). The operator for a unitary U is
//   V_{(i,j),(k,l)} = conj(U_{i1 k1}) conj(U_{i2 k2}) U_{j1 l1} U_{j2 l2}.

#include "twodesign/architectures.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace twodesign {

/// Average over alternatives; each alternative applies Haar projectors on the
/// listed site sets in order.
struct MomentStage {
  std::vector<std::vector<std::vector<int>>> alternatives;
};

struct MomentProgram {
  int n = 0;
  LocalDim q;
  std::vector<MomentStage> stages;  // applied first to last

  /// Single-site twirls followed by `steps` steps of the ensemble. Matching
  /// ensembles are supported only where the layer distribution is enumerable
  /// (the parallel complete graph).
  static MomentProgram for_spec(const EnsembleSpec& spec, int steps);
  static MomentProgram gate(SitePair sites, int n, LocalDim q);
  static MomentProgram global_haar(int n, LocalDim q);
  bool starts_with_singles() const;
};

struct DenseMoment {
  int n = 0;
  LocalDim q;
  Eigen::MatrixXd matrix;  // q^{4n} x q^{4n}
};

inline constexpr std::int64_t kDefaultDenseCap = 4096;

std::int64_t dense_dim(int n, LocalDim q);

/// Applies the program to a vector of length q^{4n} without forming a matrix.
void apply_program(const MomentProgram& program, Eigen::VectorXd& x);

DenseMoment dense_moment(const MomentProgram& program, std::int64_t cap = kDefaultDenseCap);
DenseMoment dense_gate_moment(SitePair sites, int n, LocalDim q, std::int64_t cap = kDefaultDenseCap);
DenseMoment dense_spec_moment(const EnsembleSpec& spec, int steps, std::int64_t cap = kDefaultDenseCap);
/// Global Haar moment operator, cached per (n, q).
const DenseMoment& dense_haar_moment(int n, LocalDim q);

/// Columns |sigma> in the dense layout, normalized so <I|I> = 1 per site.
Eigen::MatrixXd permutation_basis(int n, LocalDim q);

struct SectorMatrix {
  int n = 0;
  LocalDim q;
  Eigen::MatrixXd m;       // 2^n x 2^n, M = G^-1 B^T V B G^-1
  double residual = 0;     // relative failure of V to preserve span{|sigma>}
};

SectorMatrix sector_matrix(const DenseMoment& dense);
SectorMatrix sector_matrix(const MomentProgram& program);

/// Value of the (a, b) sector: v(a)^T M v(b).
double sector_value(const SectorMatrix& m, const ExperimentVector& a, const ExperimentVector& b);

/// max over a, b of |sector(spec)/sector(haar) - 1|, skipping sectors where the
/// Haar value vanishes.
double sector_error(const SectorMatrix& spec, const SectorMatrix& haar);

struct SectorDominance {
  double max_diagonal = 0;
  double max_off_diagonal = 0;
};
SectorDominance sector_dominance(const SectorMatrix& spec, const SectorMatrix& haar);

/// Eigenvalues of the Choi matrix, computed in the product basis of symmetric
/// and antisymmetric pair states, certified by Frobenius mass. Falls back to a
/// dense eigensolver when the certificate fails and the matrix is small.
struct ChoiSpectrum {
  Eigen::VectorXd eigenvalues;  // ordered like the product basis
  double offdiag_mass = 0;      // relative Frobenius mass not on the diagonal
  bool product_basis = true;
};
ChoiSpectrum choi_spectrum(const DenseMoment& dense);

/// Dense Choi matrix (small n only), for cross-checks.
Eigen::MatrixXd choi_matrix(const DenseMoment& dense);

/// Smallest eps with (1+eps) Haar - spec and spec - (1-eps) Haar completely
/// positive, found by bisection on the Choi spectra. Throws OracleMismatch if
/// the bisection does not converge.
double choi_bisection(const DenseMoment& dense, double tol = 1e-10, int max_iter = 200);

struct PsdReport {
  bool psd = false;
  double min_eigenvalue = 0;     // of the symmetric part
  double asymmetry = 0;          // ||A - A^T||_F / ||A||_F
  double compression_residual = 0;
};
/// PSD test through the compression onto span{|sigma>} (exact when the
/// operator vanishes on the complement, which the residual reports).
PsdReport psd_check(const DenseMoment& dense, double tol = 1e-10);

/// Error of experiment a after `steps` graph steps from the spectral
/// decomposition of the one-step operator: sum_{i>0} lambda_i^s |P_i psi|^2 / |P_0 psi|^2.
/// Eigenvalues are grouped at relative tolerance group_tol.
double spectral_error(const EnsembleSpec& graph_spec, const ExperimentVector& a, int steps,
                      double group_tol = 1e-9);

/// Haar-random unitary via QR of a complex Ginibre matrix with phase fix.
Eigen::MatrixXcd haar_unitary(int dim, std::mt19937_64& rng);

/// Empirical mean of V(U) over circuits of independent Haar gates.
DenseMoment mc_haar_average(const GateSequence& arrangement, int n, LocalDim q, int samples,
                            std::uint64_t seed);

struct McTransfer {
  Eigen::Matrix4d mean;
  Eigen::Matrix4d std_err;
};
/// Monte Carlo estimate of the two-site gate transfer matrix.
McTransfer mc_gate_transfer(LocalDim q, int samples, std::uint64_t seed);

/// Checks that the two oracle reductions agree and returns their common value.
struct OracleComparison {
  double choi = 0;
  double sector = 0;
  double sector_residual = 0;
  double choi_offdiag_mass = 0;
};
OracleComparison oracle_errors(const EnsembleSpec& spec, int steps, double tol = 1e-13);

}  // namespace twodesign
