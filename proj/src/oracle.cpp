#include "twodesign/oracle.hpp"

#include "twodesign/errors.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>

namespace twodesign {

namespace {

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int k = 0; k < e; ++k) r *= b;
  return r;
}

/// Per-site values of |I> and |S> (unnormalized) at digit i1 + q i2 + q^2 j1 + q^3 j2.
struct SiteTables {
  std::vector<double> t_i, t_s;
  explicit SiteTables(int q) {
    const int q4 = q * q * q * q;
    t_i.assign(static_cast<std::size_t>(q4), 0.0);
    t_s.assign(static_cast<std::size_t>(q4), 0.0);
    for (int d = 0; d < q4; ++d) {
      const int i1 = d % q, i2 = (d / q) % q, j1 = (d / (q * q)) % q, j2 = d / (q * q * q);
      t_i[d] = (i1 == j1 && i2 == j2) ? 1.0 : 0.0;
      t_s[d] = (i1 == j2 && i2 == j1) ? 1.0 : 0.0;
    }
  }
};

/// Weingarten projector sum_{sigma,tau} Wg(sigma^-1 tau, D) |T_sigma><T_tau| on
/// the given sites, identity elsewhere.
void apply_projector(Eigen::VectorXd& x, const std::vector<int>& sites, int n, int q) {
  const std::int64_t q4 = ipow(q, 4);
  const SiteTables tab(q);
  const double d = std::pow(static_cast<double>(q), static_cast<double>(sites.size()));
  const double wg_same = 1.0 / (d * d - 1), wg_swap = -1.0 / (d * (d * d - 1));
  // Offsets of every digit assignment on the selected sites, with T values.
  std::vector<std::int64_t> offsets{0};
  std::vector<double> ti{1.0}, ts{1.0};
  for (int s : sites) {
    const std::int64_t stride = ipow(q4, s);
    std::vector<std::int64_t> no;
    std::vector<double> ni, ns;
    for (std::size_t k = 0; k < offsets.size(); ++k)
      for (std::int64_t dgt = 0; dgt < q4; ++dgt) {
        no.push_back(offsets[k] + dgt * stride);
        ni.push_back(ti[k] * tab.t_i[dgt]);
        ns.push_back(ts[k] * tab.t_s[dgt]);
      }
    offsets.swap(no);
    ti.swap(ni);
    ts.swap(ns);
  }
  const std::int64_t dim = ipow(q4, n);
  for (std::int64_t base = 0; base < dim; ++base) {
    bool outer = true;
    for (int s : sites)
      if ((base / ipow(q4, s)) % q4 != 0) {
        outer = false;
        break;
      }
    if (!outer) continue;
    double oi = 0, os = 0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      const double v = x[base + offsets[k]];
      oi += ti[k] * v;
      os += ts[k] * v;
    }
    const double ci = wg_same * oi + wg_swap * os;
    const double cs = wg_swap * oi + wg_same * os;
    for (std::size_t k = 0; k < offsets.size(); ++k) x[base + offsets[k]] = ti[k] * ci + ts[k] * cs;
  }
}

void apply_stage(const MomentStage& stage, int n, int q, Eigen::VectorXd& x) {
  if (stage.alternatives.size() == 1) {
    for (const auto& sites : stage.alternatives[0]) apply_projector(x, sites, n, q);
    return;
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
  for (const auto& alt : stage.alternatives) {
    Eigen::VectorXd y = x;
    for (const auto& sites : alt) apply_projector(y, sites, n, q);
    acc += y;
  }
  x = acc / static_cast<double>(stage.alternatives.size());
}

/// Per-site Gram matrix of the normalized basis, as a 2^n x 2^n Kronecker power.
Eigen::MatrixXd gram(int n, LocalDim q) {
  const std::int64_t m = ipow(2, n);
  Eigen::MatrixXd g(m, m);
  const double inv = 1.0 / q.as_double();
  for (std::int64_t a = 0; a < m; ++a)
    for (std::int64_t b = 0; b < m; ++b) g(a, b) = std::pow(inv, __builtin_popcountll(static_cast<unsigned long long>(a ^ b)));
  return g;
}

Eigen::MatrixXd orthonormal_commutant(int n, LocalDim q) {
  const Eigen::MatrixXd b = permutation_basis(n, q);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
  return qr.householderQ() * Eigen::MatrixXd::Identity(b.rows(), b.cols());
}

void enumerate_matchings(std::vector<int> rest, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (rest.empty()) {
    out.push_back(cur);
    return;
  }
  const int first = rest[0];
  for (std::size_t k = 1; k < rest.size(); ++k) {
    std::vector<int> r2;
    for (std::size_t m = 1; m < rest.size(); ++m)
      if (m != k) r2.push_back(rest[m]);
    cur.push_back(first);
    cur.push_back(rest[k]);
    enumerate_matchings(r2, cur, out);
    cur.resize(cur.size() - 2);
  }
}

Eigen::VectorXd weight_vector(const ExperimentVector& a) { return boundary_weights(a); }

}  // namespace

std::int64_t dense_dim(int n, LocalDim q) { return ipow(ipow(q.value(), 4), n); }

MomentProgram MomentProgram::for_spec(const EnsembleSpec& spec, int steps) {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  MomentProgram p;
  p.n = spec.n;
  p.q = spec.q;
  MomentStage singles;
  singles.alternatives.emplace_back();
  for (int s = 0; s < spec.n; ++s) singles.alternatives[0].push_back({s});
  p.stages.push_back(singles);
  switch (spec.kind) {
    case EnsembleKind::single_site:
      break;
    case EnsembleKind::graph: {
      MomentStage step;
      for (auto [i, j] : spec.graph.edges) step.alternatives.push_back({{i, j}});
      for (int k = 0; k < steps; ++k) p.stages.push_back(step);
      break;
    }
    case EnsembleKind::brickwork_open:
    case EnsembleKind::brickwork_periodic: {
      const auto [odd, even] = brickwork_layers(
          spec.n, spec.kind == EnsembleKind::brickwork_open ? Boundary::open : Boundary::periodic);
      for (int k = 0; k < steps; ++k) {
        MomentStage layer;
        layer.alternatives.emplace_back();
        for (auto [i, j] : (k % 2 == 0 ? odd : even).pairs) layer.alternatives[0].push_back({i, j});
        p.stages.push_back(layer);
      }
      break;
    }
    case EnsembleKind::pcg: {
      std::vector<int> sites(static_cast<std::size_t>(spec.n));
      for (int s = 0; s < spec.n; ++s) sites[s] = s;
      std::vector<std::vector<int>> matchings;
      std::vector<int> cur;
      enumerate_matchings(sites, cur, matchings);
      MomentStage layer;
      for (const auto& m : matchings) {
        std::vector<std::vector<int>> alt;
        for (std::size_t k = 0; k < m.size(); k += 2) alt.push_back({m[k], m[k + 1]});
        layer.alternatives.push_back(alt);
      }
      for (int k = 0; k < steps; ++k) p.stages.push_back(layer);
      break;
    }
    default:
      throw ConfigError(fmt::format("no exact moment program for ensemble '{}'", spec.name()));
  }
  return p;
}

MomentProgram MomentProgram::gate(SitePair sites, int n, LocalDim q) {
  detail::check_pair(n, sites.first, sites.second);
  MomentProgram p;
  p.n = n;
  p.q = q;
  p.stages.push_back({{{{sites.first, sites.second}}}});
  return p;
}

MomentProgram MomentProgram::global_haar(int n, LocalDim q) {
  MomentProgram p;
  p.n = n;
  p.q = q;
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) all[s] = s;
  p.stages.push_back({{{all}}});
  return p;
}

bool MomentProgram::starts_with_singles() const {
  if (stages.empty() || stages[0].alternatives.size() != 1) return false;
  const auto& sets = stages[0].alternatives[0];
  if (static_cast<int>(sets.size()) != n) return false;
  for (int s = 0; s < n; ++s)
    if (sets[s].size() != 1 || sets[s][0] != s) return false;
  return true;
}

void apply_program(const MomentProgram& program, Eigen::VectorXd& x) {
  if (x.size() != dense_dim(program.n, program.q)) throw ConfigError("vector size does not match q^{4n}");
  for (const auto& stage : program.stages) apply_stage(stage, program.n, program.q.value(), x);
}

Eigen::MatrixXd permutation_basis(int n, LocalDim q) {
  const int qv = q.value();
  const std::int64_t q4 = ipow(qv, 4), dim = dense_dim(n, q), m = ipow(2, n);
  const SiteTables tab(qv);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, m);
  const double norm = std::pow(1.0 / q.as_double(), n);
  for (std::int64_t idx = 0; idx < dim; ++idx)
    for (std::int64_t sigma = 0; sigma < m; ++sigma) {
      double v = norm;
      std::int64_t rest = idx;
      for (int s = 0; s < n && v != 0.0; ++s, rest /= q4) {
        const auto dgt = static_cast<std::size_t>(rest % q4);
        v *= ((sigma >> s) & 1) ? tab.t_s[dgt] : tab.t_i[dgt];
      }
      b(idx, sigma) = v;
    }
  return b;
}

DenseMoment dense_moment(const MomentProgram& program, std::int64_t cap) {
  const std::int64_t dim = dense_dim(program.n, program.q);
  if (dim > cap) throw ConfigError(fmt::format("dense operator of dimension {} exceeds the cap {}", dim, cap));
  DenseMoment out{program.n, program.q, Eigen::MatrixXd()};
  if (program.starts_with_singles()) {
    // V = V_rest P_singles and P_singles = Q Q^T onto span{|sigma>}.
    MomentProgram rest = program;
    rest.stages.erase(rest.stages.begin());
    const Eigen::MatrixXd qb = orthonormal_commutant(program.n, program.q);
    Eigen::MatrixXd w = qb;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      Eigen::VectorXd col = w.col(c);
      apply_program(rest, col);
      w.col(c) = col;
    }
    out.matrix = w * qb.transpose();
    return out;
  }
  out.matrix.resize(dim, dim);
  for (std::int64_t c = 0; c < dim; ++c) {
    Eigen::VectorXd col = Eigen::VectorXd::Unit(dim, c);
    apply_program(program, col);
    out.matrix.col(c) = col;
  }
  return out;
}

DenseMoment dense_gate_moment(SitePair sites, int n, LocalDim q, std::int64_t cap) {
  if (n < 2) throw ConfigError("a two-site gate needs n >= 2");
  return dense_moment(MomentProgram::gate(sites, n, q), cap);
}

DenseMoment dense_spec_moment(const EnsembleSpec& spec, int steps, std::int64_t cap) {
  return dense_moment(MomentProgram::for_spec(spec, steps), cap);
}

const DenseMoment& dense_haar_moment(int n, LocalDim q) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<DenseMoment>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, q.value()}];
  if (!slot) {
    // Prefix the single-site twirls (absorbed by the global Haar projector) so
    // the construction goes through the commutant factorization.
    MomentProgram p = MomentProgram::for_spec(EnsembleSpec::singles(n, q), 0);
    p.stages.push_back(MomentProgram::global_haar(n, q).stages[0]);
    slot = std::make_unique<DenseMoment>(dense_moment(p, dense_dim(n, q)));
  }
  return *slot;
}

namespace {

SectorMatrix sector_from_vb(int n, LocalDim q, const Eigen::MatrixXd& b, const Eigen::MatrixXd& vb) {
  const Eigen::MatrixXd ginv = gram(n, q).inverse();
  const Eigen::MatrixXd btvb = b.transpose() * vb;
  SectorMatrix out{n, q, ginv * btvb * ginv, 0.0};
  const double scale = vb.norm();
  out.residual = scale > 0 ? (vb - b * (ginv * btvb)).norm() / scale : 0.0;
  return out;
}

}  // namespace

SectorMatrix sector_matrix(const DenseMoment& dense) {
  const Eigen::MatrixXd b = permutation_basis(dense.n, dense.q);
  return sector_from_vb(dense.n, dense.q, b, dense.matrix * b);
}

SectorMatrix sector_matrix(const MomentProgram& program) {
  const Eigen::MatrixXd b = permutation_basis(program.n, program.q);
  Eigen::MatrixXd vb = b;
  for (Eigen::Index c = 0; c < vb.cols(); ++c) {
    Eigen::VectorXd col = vb.col(c);
    apply_program(program, col);
    vb.col(c) = col;
  }
  return sector_from_vb(program.n, program.q, b, vb);
}

double sector_value(const SectorMatrix& m, const ExperimentVector& a, const ExperimentVector& b) {
  return weight_vector(a).dot(m.m * weight_vector(b));
}

namespace {

/// All sector values v(a)^T M v(b) as a 2^n x 2^n table.
Eigen::MatrixXd sector_table(const SectorMatrix& m) {
  const std::int64_t size = ipow(2, m.n);
  Eigen::MatrixXd v(size, size);
  for (std::int64_t a = 0; a < size; ++a) v.col(a) = weight_vector(ExperimentVector(m.n, static_cast<std::uint64_t>(a)));
  return v.transpose() * m.m * v;
}

}  // namespace

SectorDominance sector_dominance(const SectorMatrix& spec, const SectorMatrix& haar) {
  const Eigen::MatrixXd s = sector_table(spec), h = sector_table(haar);
  const double scale = h.cwiseAbs().maxCoeff();
  SectorDominance out;
  for (Eigen::Index a = 0; a < s.rows(); ++a)
    for (Eigen::Index b = 0; b < s.cols(); ++b) {
      if (std::abs(h(a, b)) <= 1e-12 * scale) continue;
      const double e = std::abs(s(a, b) / h(a, b) - 1.0);
      if (a == b)
        out.max_diagonal = std::max(out.max_diagonal, e);
      else
        out.max_off_diagonal = std::max(out.max_off_diagonal, e);
    }
  return out;
}

double sector_error(const SectorMatrix& spec, const SectorMatrix& haar) {
  const auto d = sector_dominance(spec, haar);
  return std::max(d.max_diagonal, d.max_off_diagonal);
}

Eigen::MatrixXd choi_matrix(const DenseMoment& dense) {
  const int q = dense.q.value();
  const std::int64_t q4 = ipow(q, 4), dim = dense.matrix.rows();
  // Reshuffle: Choi[(j,l),(i,k)] = V[(i,j),(k,l)], per-site digit j1 + q j2 + q^2 (l1 + q l2).
  auto split = [&](std::int64_t idx, std::int64_t& lo, std::int64_t& hi) {
    lo = hi = 0;
    std::int64_t mul = 1;
    for (int s = 0; s < dense.n; ++s, idx /= q4, mul *= q * q) {
      const std::int64_t d = idx % q4;
      lo += (d % (q * q)) * mul;
      hi += (d / (q * q)) * mul;
    }
  };
  auto join = [&](std::int64_t lo, std::int64_t hi) {
    std::int64_t out = 0, mul = 1;
    for (int s = 0; s < dense.n; ++s, mul *= q4) {
      const std::int64_t pl = (lo / ipow(q * q, s)) % (q * q), ph = (hi / ipow(q * q, s)) % (q * q);
      out += (pl + q * q * ph) * mul;
    }
    return out;
  };
  Eigen::MatrixXd j(dim, dim);
  for (std::int64_t r = 0; r < dim; ++r) {
    std::int64_t ri, rj;
    split(r, ri, rj);
    for (std::int64_t c = 0; c < dim; ++c) {
      std::int64_t ck, cl;
      split(c, ck, cl);
      // ri, rj, ck, cl are compact (base q^2 per site) indices.
      j(join(rj, cl), join(ri, ck)) = dense.matrix(r, c);
    }
  }
  return j;
}

ChoiSpectrum choi_spectrum(const DenseMoment& dense) {
  const int q = dense.q.value(), n = dense.n;
  const std::int64_t q2 = q * q, q4 = q2 * q2;
  // Symmetric and antisymmetric pair states on digits a + q b.
  struct PairVec {
    int idx[2];
    double coef[2];
    int count;
  };
  std::vector<PairVec> pairs;
  for (int a = 0; a < q; ++a) pairs.push_back({{a + q * a, 0}, {1.0, 0.0}, 1});
  const double r = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < q; ++a)
    for (int b = a + 1; b < q; ++b) {
      pairs.push_back({{a + q * b, b + q * a}, {r, r}, 2});
      pairs.push_back({{a + q * b, b + q * a}, {r, -r}, 2});
    }
  struct Term {
    std::int64_t a_row, a_col, b_row, b_col;
    double coef;
  };
  const std::int64_t per_site = q2 * q2;
  const std::int64_t count = ipow(per_site, n);
  ChoiSpectrum out;
  out.eigenvalues.resize(count);
  std::vector<Term> terms, next;
  for (std::int64_t basis = 0; basis < count; ++basis) {
    terms.assign(1, Term{0, 0, 0, 0, 1.0});
    std::int64_t rest = basis, stride = 1;
    for (int s = 0; s < n; ++s, rest /= per_site, stride *= q4) {
      const auto& f = pairs[static_cast<std::size_t>(rest % per_site % q2)];
      const auto& g = pairs[static_cast<std::size_t>(rest % per_site / q2)];
      next.clear();
      for (const auto& t : terms)
        for (int u = 0; u < f.count; ++u)
          for (int w = 0; w < g.count; ++w)
            next.push_back({t.a_row + q2 * f.idx[u] * stride, t.a_col + q2 * g.idx[w] * stride,
                            t.b_row + f.idx[u] * stride, t.b_col + g.idx[w] * stride,
                            t.coef * f.coef[u] * g.coef[w]});
      terms.swap(next);
    }
    double acc = 0;
    for (const auto& t : terms)
      for (const auto& u : terms) acc += t.coef * u.coef * dense.matrix(t.a_row + u.b_row, t.a_col + u.b_col);
    out.eigenvalues[basis] = acc;
  }
  const double total = dense.matrix.squaredNorm();
  out.offdiag_mass = total > 0 ? std::max(0.0, 1.0 - out.eigenvalues.squaredNorm() / total) : 0.0;
  if (out.offdiag_mass > 1e-6) {
    if (dense.matrix.rows() > 256)
      throw OracleMismatch(fmt::format("Choi matrix is not diagonal in the pair basis (off-diagonal mass {:.3g})",
                                       out.offdiag_mass));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(choi_matrix(dense), Eigen::EigenvaluesOnly);
    out.eigenvalues = es.eigenvalues();
    out.product_basis = false;
  }
  return out;
}

double choi_bisection(const DenseMoment& dense, double tol, int max_iter) {
  const ChoiSpectrum spec = choi_spectrum(dense);
  const ChoiSpectrum haar = choi_spectrum(dense_haar_moment(dense.n, dense.q));
  if (!spec.product_basis || !haar.product_basis) {
    throw OracleMismatch("Choi spectra are not in a common eigenbasis");
  }
  const double scale = haar.eigenvalues.cwiseAbs().maxCoeff();
  const Eigen::VectorXd h = haar.eigenvalues / scale, j = spec.eigenvalues / scale;
  auto feasible = [&](double eps) {
    const double upper = ((1 + eps) * h - j).minCoeff();
    const double lower = (j - (1 - eps) * h).minCoeff();
    return upper >= -tol && lower >= -tol;
  };
  if (feasible(0)) return 0;
  double lo = 0, hi = 1;
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > 1e15) throw OracleMismatch("ensemble is not dominated by any multiple of the Haar channel");
  }
  for (int it = 0; it < max_iter; ++it) {
    if (hi - lo <= tol * std::max(1.0, hi)) return hi;
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  throw OracleMismatch(fmt::format("Choi bisection did not converge in {} iterations", max_iter));
}

PsdReport psd_check(const DenseMoment& dense, double tol) {
  const Eigen::MatrixXd qb = orthonormal_commutant(dense.n, dense.q);
  const Eigen::MatrixXd a = qb.transpose() * dense.matrix * qb;
  PsdReport r;
  const double vnorm = dense.matrix.norm();
  r.compression_residual = vnorm > 0 ? (dense.matrix - qb * a * qb.transpose()).norm() / vnorm : 0.0;
  const double anorm = a.norm();
  r.asymmetry = anorm > 0 ? (a - a.transpose()).norm() / anorm : 0.0;
  if (r.compression_residual <= 1e-10) {
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    r.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    // The operator vanishes off the commutant, contributing zero eigenvalues.
    if (dense.matrix.rows() > a.rows()) r.min_eigenvalue = std::min(r.min_eigenvalue, 0.0);
  } else if (dense.matrix.rows() <= 256) {
    const Eigen::MatrixXd sym = 0.5 * (dense.matrix + dense.matrix.transpose());
    r.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  } else {
    throw OracleMismatch("operator does not vanish off the commutant; dense eigensolve too large");
  }
  r.psd = r.min_eigenvalue >= -tol;
  return r;
}

double spectral_error(const EnsembleSpec& spec, const ExperimentVector& a, int steps, double group_tol) {
  if (spec.kind != EnsembleKind::graph) throw ConfigError("spectral_error needs a graph ensemble");
  if (dense_dim(spec.n, spec.q) > kDefaultDenseCap) throw ConfigError("spectral_error is limited to the dense cap");
  MomentProgram step = MomentProgram::for_spec(spec, 1);
  step.stages.erase(step.stages.begin());
  const Eigen::MatrixXd qb = orthonormal_commutant(spec.n, spec.q);
  Eigen::MatrixXd gq = qb;
  for (Eigen::Index c = 0; c < gq.cols(); ++c) {
    Eigen::VectorXd col = gq.col(c);
    apply_program(step, col);
    gq.col(c) = col;
  }
  const Eigen::MatrixXd a_op = qb.transpose() * gq;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a_op + a_op.transpose()));
  const Eigen::VectorXd psi = permutation_basis(spec.n, spec.q) * boundary_state(a, spec.q).coeffs;
  const Eigen::VectorXd y = es.eigenvectors().transpose() * (qb.transpose() * psi);
  // Eigenvalues ascend; group from the top so group 0 is the unit eigenvalue.
  const Eigen::Index m = es.eigenvalues().size();
  std::vector<std::pair<double, double>> groups;  // (lambda, weight)
  for (Eigen::Index k = m - 1; k >= 0; --k) {
    const double lam = es.eigenvalues()[k], w = y[k] * y[k];
    if (!groups.empty() && std::abs(groups.back().first - lam) <= group_tol * std::max(1.0, std::abs(lam)))
      groups.back().second += w;
    else
      groups.emplace_back(lam, w);
  }
  if (std::abs(groups[0].first - 1.0) > 1e-9) throw OracleMismatch("graph step has no unit eigenvalue on top");
  double acc = 0;
  for (std::size_t g = 1; g < groups.size(); ++g) acc += std::pow(groups[g].first, steps) * groups[g].second;
  return acc / groups[0].second;
}

Eigen::MatrixXcd haar_unitary(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd z(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(r, c) = {re, im};
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd qm = qr.householderQ() * Eigen::MatrixXcd::Identity(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const std::complex<double> rkk = qr.matrixQR()(k, k);
    const double mag = std::abs(rkk);
    qm.col(k) *= mag > 0 ? rkk / mag : std::complex<double>(1.0);
  }
  return qm;
}

namespace {

/// Embeds a q^2 x q^2 gate on sites (i, j) into the q^n-dimensional space.
/// Site s is digit s (base q) of the basis index; the gate index is x_i + q x_j.
Eigen::MatrixXcd embed_gate(const Eigen::MatrixXcd& g, int i, int j, int n, int q) {
  const std::int64_t dim = ipow(q, n), si = ipow(q, i), sj = ipow(q, j);
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::int64_t x = 0; x < dim; ++x) {
    const std::int64_t xi = (x / si) % q, xj = (x / sj) % q;
    const std::int64_t rest = x - xi * si - xj * sj;
    for (int yi = 0; yi < q; ++yi)
      for (int yj = 0; yj < q; ++yj) u(rest + yi * si + yj * sj, x) = g(yi + q * yj, xi + q * xj);
  }
  return u;
}

}  // namespace

DenseMoment mc_haar_average(const GateSequence& arrangement, int n, LocalDim q, int samples, std::uint64_t seed) {
  if (n > 3) throw ConfigError("Monte Carlo moment averaging is limited to n <= 3");
  if (samples < 1) throw ConfigError("samples must be >= 1");
  const int qv = q.value();
  const std::int64_t dim = ipow(qv, n), q4 = ipow(qv, 4), ddim = dense_dim(n, q);
  // Dense index of the multi-site tuple (x1, x2, y1, y2).
  auto index = [&](std::int64_t x1, std::int64_t x2, std::int64_t y1, std::int64_t y2) {
    std::int64_t out = 0, mul = 1;
    for (int s = 0; s < n; ++s, mul *= q4, x1 /= qv, x2 /= qv, y1 /= qv, y2 /= qv)
      out += (x1 % qv + qv * (x2 % qv) + qv * qv * (y1 % qv) + qv * qv * qv * (y2 % qv)) * mul;
    return out;
  };
  std::vector<std::int64_t> map(static_cast<std::size_t>(dim * dim * dim * dim));
  for (std::int64_t x1 = 0; x1 < dim; ++x1)
    for (std::int64_t x2 = 0; x2 < dim; ++x2)
      for (std::int64_t y1 = 0; y1 < dim; ++y1)
        for (std::int64_t y2 = 0; y2 < dim; ++y2)
          map[static_cast<std::size_t>(((x1 * dim + x2) * dim + y1) * dim + y2)] = index(x1, x2, y1, y2);
  auto rng = stream_rng(seed, 0);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ddim, ddim);
  for (int smp = 0; smp < samples; ++smp) {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
    for (auto [i, j] : arrangement) u = embed_gate(haar_unitary(qv * qv, rng), i, j, n, qv) * u;
    const Eigen::MatrixXcd conj_u = u.conjugate();
    // V[(i,j),(k,l)] = conj(U_{i1k1} U_{i2k2}) U_{j1l1} U_{j2l2}.
    for (std::int64_t i1 = 0; i1 < dim; ++i1)
      for (std::int64_t i2 = 0; i2 < dim; ++i2)
        for (std::int64_t k1 = 0; k1 < dim; ++k1)
          for (std::int64_t k2 = 0; k2 < dim; ++k2) {
            const std::complex<double> left = conj_u(i1, k1) * conj_u(i2, k2);
            for (std::int64_t j1 = 0; j1 < dim; ++j1)
              for (std::int64_t j2 = 0; j2 < dim; ++j2) {
                const std::int64_t row = map[static_cast<std::size_t>(((i1 * dim + i2) * dim + j1) * dim + j2)];
                for (std::int64_t l1 = 0; l1 < dim; ++l1)
                  for (std::int64_t l2 = 0; l2 < dim; ++l2) {
                    const std::int64_t col = map[static_cast<std::size_t>(((k1 * dim + k2) * dim + l1) * dim + l2)];
                    acc(row, col) += (left * u(j1, l1) * u(j2, l2)).real();
                  }
              }
          }
  }
  return {n, q, acc / samples};
}

McTransfer mc_gate_transfer(LocalDim q, int samples, std::uint64_t seed) {
  if (samples < 2) throw ConfigError("samples must be >= 2");
  const int qv = q.value(), d = qv * qv, d2 = d * d;
  // Copy c = a + q b holds site 0 in a and site 1 in b; two copies give c1 + d c2.
  std::array<std::vector<int>, 4> perm;
  for (int sigma = 0; sigma < 4; ++sigma) {
    perm[sigma].resize(static_cast<std::size_t>(d2));
    for (int r = 0; r < d2; ++r) {
      int a1 = r % qv, b1 = (r / qv) % qv, a2 = (r / d) % qv, b2 = r / (d * qv);
      if (sigma & 1) std::swap(a1, a2);
      if (sigma & 2) std::swap(b1, b2);
      perm[sigma][r] = a1 + qv * b1 + d * (a2 + qv * b2);
    }
  }
  const Eigen::Matrix4d ginv = gram(2, q).inverse();
  const double norm = std::pow(q.as_double(), 4);
  auto rng = stream_rng(seed, 1);
  Eigen::Matrix4d sum = Eigen::Matrix4d::Zero(), sumsq = Eigen::Matrix4d::Zero();
  for (int smp = 0; smp < samples; ++smp) {
    const Eigen::MatrixXcd u = haar_unitary(d, rng);
    Eigen::MatrixXcd w(d2, d2);
    for (int r = 0; r < d2; ++r)
      for (int c = 0; c < d2; ++c) w(r, c) = u(r % d, c % d) * u(r / d, c / d);
    Eigen::Matrix4d o;
    for (int tau = 0; tau < 4; ++tau) {
      Eigen::MatrixXcd wp(d2, d2);
      for (int c = 0; c < d2; ++c) wp.col(c) = w.col(perm[tau][c]);
      const Eigen::MatrixXcd x = wp * w.adjoint();
      for (int sigma = 0; sigma < 4; ++sigma) {
        std::complex<double> tr = 0;
        for (int r = 0; r < d2; ++r) tr += x(perm[sigma][r], r);
        o(sigma, tau) = tr.real() / norm;
      }
    }
    const Eigen::Matrix4d m = ginv * o;
    sum += m;
    sumsq += m.cwiseProduct(m);
  }
  McTransfer out;
  out.mean = sum / samples;
  const Eigen::Matrix4d var = (sumsq / samples - out.mean.cwiseProduct(out.mean)) * (samples / (samples - 1.0));
  out.std_err = (var.cwiseMax(0.0) / samples).cwiseSqrt();
  return out;
}

OracleComparison oracle_errors(const EnsembleSpec& spec, int steps, double tol) {
  const DenseMoment dense = dense_spec_moment(spec, steps);
  const ChoiSpectrum choi = choi_spectrum(dense);
  OracleComparison out;
  out.choi = choi_bisection(dense, tol);
  out.choi_offdiag_mass = choi.offdiag_mass;
  const SectorMatrix sm = sector_matrix(dense);
  out.sector_residual = sm.residual;
  out.sector = sector_error(sm, sector_matrix(dense_haar_moment(spec.n, spec.q)));
  return out;
}

}  // namespace twodesign
