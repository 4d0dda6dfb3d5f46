#pragma once

// Second-moment (t = 2) algebra in the site-local permutation basis {I, S}.
//
// Basis index convention: a moment-space vector on n sites is stored as 2^n
// coefficients. Bit i of the index is the label of site i (0 = identity I,
// 1 = swap S). The per-site basis states are normalized so that <I|I> = 1 and
// <I|S> = 1/q.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace twodesign {

/// Local Hilbert-space dimension.
class LocalDim {
 public:
  constexpr LocalDim() = default;
  explicit LocalDim(int q) : q_(q) {
    if (q < 2) throw std::invalid_argument("local dimension q must be >= 2");
  }
  constexpr int value() const { return q_; }
  double as_double() const { return static_cast<double>(q_); }
  friend constexpr bool operator==(LocalDim, LocalDim) = default;

 private:
  int q_ = 2;
};

enum class Parity { even = 0, odd = 1 };

/// Bit string a in {0,1}^n selecting a symmetric (0) or antisymmetric (1)
/// preparation on every site. Limited to n <= 64 sites.
class ExperimentVector {
 public:
  ExperimentVector() = default;
  ExperimentVector(int n, std::uint64_t bits);

  static ExperimentVector zeros(int n) { return {n, 0}; }
  /// Parses "1001"-style strings; character k is site k.
  static ExperimentVector from_string(std::string_view s);
  /// (1,0,...,0,1): singlets on the two endpoints only.
  static ExperimentVector entangled_boundaries(int n);

  int n() const { return n_; }
  std::uint64_t bits() const { return bits_; }
  bool bit(int i) const { return (bits_ >> i) & 1u; }
  int sign(int i) const { return bit(i) ? -1 : 1; }
  int weight() const;
  Parity parity() const { return weight() % 2 == 0 ? Parity::even : Parity::odd; }
  ExperimentVector reversed() const;
  std::string to_string() const;

  friend bool operator==(const ExperimentVector&, const ExperimentVector&) = default;

 private:
  int n_ = 0;
  std::uint64_t bits_ = 0;
};

/// Coefficients of a two-copy moment-space vector in the |sigma> basis.
template <typename Scalar = double>
struct CommutantState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int n = 0;
  LocalDim q;
  Vector coeffs;

  CommutantState() = default;
  CommutantState(int n_sites, LocalDim local_dim)
      : n(n_sites), q(local_dim), coeffs(Vector::Zero(Eigen::Index{1} << n_sites)) {}

  Eigen::Index size() const { return coeffs.size(); }
  bool all_finite() const { return coeffs.allFinite(); }
};

/// Single Haar two-site gate restricted to the two-site commutant, as a 4x4
/// matrix over {II, IS, SI, SS} (first letter: first site of the pair).
struct GateTransfer {
  LocalDim q;
  Eigen::Matrix4d m;

  /// Weight that IS and SI spread onto both II and SS: q / (q^2 + 1).
  double spread() const { return m(0, 1); }
};

/// Weingarten values (Wg(I, D), Wg(S, D)) for two copies of a D-dimensional
/// space: (1/(D^2-1), -1/(D(D^2-1))).
std::pair<double, double> weingarten_pair(LocalDim q, double copies_dim);

GateTransfer gate_transfer(LocalDim q);

/// Per-site coefficient pair of |I~> + s|S~> in the {I, S} basis.
std::pair<double, double> boundary_site_pair(int sign, LocalDim q);

CommutantState<double> boundary_state(const ExperimentVector& a, LocalDim q);

/// <Psi(a)|sigma>: prod_i s_i^{[sigma_i = S]}.
Eigen::VectorXd boundary_weights(const ExperimentVector& a);

/// <Psi(a)|Psi(a)>, the quadratic form before any gates act.
double boundary_norm(const ExperimentVector& a, LocalDim q);

/// Haar value of <Psi(a)|vec Phi_Haar|Psi(a)> for the given parity of a.
double haar_moment_diagonal(int n, LocalDim q, Parity parity);

/// Converts a quadratic-form value into the likelihood-ratio error for an
/// experiment of the given parity: (1 +- q^-n)/2 * (value - haar).
double parity_weighted_error(double quadratic_form, int n, LocalDim q, Parity parity);

// Bit manipulation helpers for pair updates.
namespace detail {

/// Inserts zero bits at positions lo < hi into k.
inline std::uint64_t insert_two_zero_bits(std::uint64_t k, int lo, int hi) {
  const std::uint64_t low_mask = (std::uint64_t{1} << lo) - 1;
  k = ((k & ~low_mask) << 1) | (k & low_mask);
  const std::uint64_t high_mask = (std::uint64_t{1} << hi) - 1;
  return ((k & ~high_mask) << 1) | (k & high_mask);
}

inline void check_pair(int n, int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= n || j >= n)
    throw std::out_of_range("invalid site pair (" + std::to_string(i) + "," +
                            std::to_string(j) + ") for n=" + std::to_string(n));
}

}  // namespace detail

/// Applies the Haar two-site projector on sites (i, j) in place.
/// Sites not in the pair keep their labels. Linear and idempotent.
template <typename Scalar>
void apply_two_site_inplace(CommutantState<Scalar>& state, int i, int j) {
  detail::check_pair(state.n, i, j);
  const int lo = std::min(i, j), hi = std::max(i, j);
  const std::uint64_t mi = std::uint64_t{1} << i, mj = std::uint64_t{1} << j;
  const Scalar q = static_cast<Scalar>(state.q.value());
  const Scalar c = q / (q * q + Scalar(1));
  const std::uint64_t quads = std::uint64_t{1} << (state.n - 2);
  Scalar* v = state.coeffs.data();
  for (std::uint64_t k = 0; k < quads; ++k) {
    const std::uint64_t base = detail::insert_two_zero_bits(k, lo, hi);
    const Scalar mixed = c * (v[base | mi] + v[base | mj]);
    v[base] += mixed;
    v[base | mi | mj] += mixed;
    v[base | mi] = Scalar(0);
    v[base | mj] = Scalar(0);
  }
}

template <typename Scalar>
CommutantState<Scalar> apply_two_site(CommutantState<Scalar> state, int i, int j) {
  apply_two_site_inplace(state, i, j);
  return state;
}

/// <Psi(a)| x for a state x in the |sigma> basis.
template <typename Scalar>
Scalar contract_boundary(const ExperimentVector& a, const CommutantState<Scalar>& state) {
  // Sign of index sigma is (-1)^{popcount(sigma & a)}.
  const std::uint64_t mask = a.bits();
  Scalar acc(0);
  const auto size = static_cast<std::uint64_t>(state.coeffs.size());
  for (std::uint64_t s = 0; s < size; ++s) {
    const Scalar v = state.coeffs[static_cast<Eigen::Index>(s)];
    acc += (__builtin_popcountll(s & mask) & 1) ? -v : v;
  }
  return acc;
}

/// Orthogonal projection onto span{|I...I>, |S...S>}: the global Haar channel.
template <typename Scalar>
void apply_global_haar_inplace(CommutantState<Scalar>& state) {
  const Scalar q = static_cast<Scalar>(state.q.value());
  const auto size = static_cast<std::uint64_t>(state.coeffs.size());
  const int n = state.n;
  // Overlaps <I^n|sigma> = q^-|sigma| and <S^n|sigma> = q^-(n-|sigma|).
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> qpow(n + 1);
  qpow[0] = Scalar(1);
  for (int k = 1; k <= n; ++k) qpow[k] = qpow[k - 1] / q;
  Scalar oi(0), os(0);
  for (std::uint64_t s = 0; s < size; ++s) {
    const int w = __builtin_popcountll(s);
    const Scalar v = state.coeffs[static_cast<Eigen::Index>(s)];
    oi += v * qpow[w];
    os += v * qpow[n - w];
  }
  const Scalar g = qpow[n];
  const Scalar det = Scalar(1) - g * g;
  state.coeffs.setZero();
  state.coeffs[0] = (oi - g * os) / det;
  state.coeffs[static_cast<Eigen::Index>(size - 1)] += (os - g * oi) / det;
}

}  // namespace twodesign
