#include "twodesign/perm_algebra.hpp"

#include <bit>

namespace twodesign {

ExperimentVector::ExperimentVector(int n, std::uint64_t bits) : n_(n), bits_(bits) {
  if (n < 1 || n > 64) throw std::invalid_argument("experiment vector needs 1 <= n <= 64");
  if (n < 64 && (bits >> n) != 0)
    throw std::invalid_argument("experiment vector has bits beyond site count");
}

ExperimentVector ExperimentVector::from_string(std::string_view s) {
  std::uint64_t bits = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] == '1') bits |= std::uint64_t{1} << k;
    else if (s[k] != '0') throw std::invalid_argument("experiment vector must be a 0/1 string");
  }
  return {static_cast<int>(s.size()), bits};
}

ExperimentVector ExperimentVector::entangled_boundaries(int n) {
  if (n == 1) return {1, 1};
  return {n, 1u | (std::uint64_t{1} << (n - 1))};
}

int ExperimentVector::weight() const { return std::popcount(bits_); }

ExperimentVector ExperimentVector::reversed() const {
  std::uint64_t r = 0;
  for (int i = 0; i < n_; ++i)
    if (bit(i)) r |= std::uint64_t{1} << (n_ - 1 - i);
  return {n_, r};
}

std::string ExperimentVector::to_string() const {
  std::string s(static_cast<std::size_t>(n_), '0');
  for (int i = 0; i < n_; ++i)
    if (bit(i)) s[static_cast<std::size_t>(i)] = '1';
  return s;
}

std::pair<double, double> weingarten_pair(LocalDim, double copies_dim) {
  const double d = copies_dim;
  if (!(d >= 2)) throw std::invalid_argument("copies dimension must be >= 2");
  const double den = d * d - 1;
  return {1 / den, -1 / (d * den)};
}

GateTransfer gate_transfer(LocalDim q) {
  const double qd = q.as_double();
  const double c = qd / (qd * qd + 1);
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 0) = 1;
  m(3, 3) = 1;
  m(0, 1) = m(3, 1) = c;
  m(0, 2) = m(3, 2) = c;
  return {q, m};
}

std::pair<double, double> boundary_site_pair(int sign, LocalDim q) {
  const double qd = q.as_double();
  const double s = sign < 0 ? -1.0 : 1.0;
  const double norm = 1 / (1 - 1 / (qd * qd));
  return {(1 - s / qd) * norm, (s - 1 / qd) * norm};
}

CommutantState<double> boundary_state(const ExperimentVector& a, LocalDim q) {
  CommutantState<double> st(a.n(), q);
  st.coeffs[0] = 1;
  Eigen::Index filled = 1;
  for (int i = 0; i < a.n(); ++i) {
    const auto [ci, cs] = boundary_site_pair(a.sign(i), q);
    // Index bit i is the newest site, so the upper half takes the S label.
    st.coeffs.segment(filled, filled) = cs * st.coeffs.head(filled);
    st.coeffs.head(filled) *= ci;
    filled *= 2;
  }
  return st;
}

Eigen::VectorXd boundary_weights(const ExperimentVector& a) {
  const std::uint64_t size = std::uint64_t{1} << a.n();
  Eigen::VectorXd w(static_cast<Eigen::Index>(size));
  for (std::uint64_t s = 0; s < size; ++s)
    w[static_cast<Eigen::Index>(s)] = (std::popcount(s & a.bits()) & 1) ? -1.0 : 1.0;
  return w;
}

double boundary_norm(const ExperimentVector& a, LocalDim q) {
  const double qd = q.as_double();
  double v = 1;
  for (int i = 0; i < a.n(); ++i) v *= (2 - 2.0 * a.sign(i) / qd) / (1 - 1 / (qd * qd));
  return v;
}

double haar_moment_diagonal(int n, LocalDim q, Parity parity) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const double x = std::pow(q.as_double(), -n);
  return parity == Parity::even ? 2 / (1 + x) : 2 / (1 - x);
}

double parity_weighted_error(double quadratic_form, int n, LocalDim q, Parity parity) {
  const double x = std::pow(q.as_double(), -n);
  const double pref = parity == Parity::even ? (1 + x) / 2 : (1 - x) / 2;
  return pref * (quadratic_form - haar_moment_diagonal(n, q, parity));
}

}  // namespace twodesign
