#include "twodesign/engine.hpp"

#include "twodesign/errors.hpp"
#include "twodesign/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <mutex>

namespace twodesign {

namespace {

constexpr std::uint64_t bit_at(int k) { return std::uint64_t{1} << k; }

double spread_of(LocalDim q) {
  const double qd = q.as_double();
  return qd / (qd * qd + 1);
}

// ---------------------------------------------------------------------------
// Block representation for layered ensembles.

/// Gates of a layer plus the sites it leaves idle, ordered by first site.
struct Partition {
  std::vector<std::vector<int>> blocks;
  std::vector<int> block_of;
};

Partition partition_of(const Layer& layer, int n) {
  Partition p;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (auto [i, j] : layer.pairs) {
    p.blocks.push_back({std::min(i, j), std::max(i, j)});
    used[i] = used[j] = 1;
  }
  for (int k = 0; k < n; ++k)
    if (!used[k]) p.blocks.push_back({k});
  std::sort(p.blocks.begin(), p.blocks.end());
  p.block_of.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    for (int s : p.blocks[b]) p.block_of[s] = static_cast<int>(b);
  return p;
}

/// One primitive of a block-to-block transfer. Labels live at bit positions of
/// the working index; new labels are appended as the top bit.
struct Op {
  enum class Kind { copy_label, mix_pair, sum_out } kind;
  int p1 = 0;
  int p2 = 0;
};

struct Transition {
  std::vector<Op> ops;
  int in_bits = 0;
  int out_bits = 0;
};

/// Compiles the map from labels of partition a to labels of partition b.
/// A gate of b reading two a-labels x, y outputs x if x == y and spreads
/// weight c onto both outputs otherwise; an idle site copies its label.
Transition compile_transition(const Partition& a, const Partition& b) {
  const int ma = static_cast<int>(a.blocks.size());
  const int mb = static_cast<int>(b.blocks.size());
  std::vector<std::vector<int>> reads(static_cast<std::size_t>(mb));
  std::vector<int> readers(static_cast<std::size_t>(ma), 0);
  for (int j = 0; j < mb; ++j) {
    for (int s : b.blocks[j]) {
      const int src = a.block_of[s];
      if (std::find(reads[j].begin(), reads[j].end(), src) == reads[j].end()) reads[j].push_back(src);
    }
    for (int src : reads[j]) ++readers[src];
  }
  std::vector<int> live(static_cast<std::size_t>(ma));
  for (int k = 0; k < ma; ++k) live[k] = k;
  auto pos = [&](int label) {
    return static_cast<int>(std::find(live.begin(), live.end(), label) - live.begin());
  };
  Transition t;
  t.in_bits = ma;
  for (int j = 0; j < mb; ++j) {
    if (reads[j].size() == 2)
      t.ops.push_back({Op::Kind::mix_pair, pos(reads[j][0]), pos(reads[j][1])});
    else
      t.ops.push_back({Op::Kind::copy_label, pos(reads[j][0]), 0});
    live.push_back(ma + j);
    for (int src : reads[j])
      if (--readers[src] == 0) {
        const int p = pos(src);
        t.ops.push_back({Op::Kind::sum_out, p, 0});
        live.erase(live.begin() + p);
      }
  }
  t.out_bits = mb;
  return t;
}

void run_transition(const Transition& t, double c, std::vector<double>& x, std::vector<double>& tmp) {
  int bits = t.in_bits;
  for (const Op& op : t.ops) {
    const std::uint64_t size = bit_at(bits);
    switch (op.kind) {
      case Op::Kind::copy_label: {
        tmp.assign(2 * size, 0.0);
        for (std::uint64_t idx = 0; idx < size; ++idx) {
          const std::uint64_t e = (idx >> op.p1) & 1u;
          tmp[idx | (e << bits)] = x[idx];
        }
        ++bits;
        break;
      }
      case Op::Kind::mix_pair: {
        tmp.resize(2 * size);
        for (std::uint64_t idx = 0; idx < size; ++idx) {
          const std::uint64_t e1 = (idx >> op.p1) & 1u, e2 = (idx >> op.p2) & 1u;
          const double v = x[idx];
          if (e1 == e2) {
            tmp[idx | (e1 << bits)] = v;
            tmp[idx | ((e1 ^ 1u) << bits)] = 0.0;
          } else {
            tmp[idx] = c * v;
            tmp[idx | size] = c * v;
          }
        }
        ++bits;
        break;
      }
      case Op::Kind::sum_out: {
        const std::uint64_t half = size / 2;
        const std::uint64_t low = bit_at(op.p1) - 1;
        tmp.resize(half);
        for (std::uint64_t idx = 0; idx < half; ++idx) {
          const std::uint64_t base = ((idx & ~low) << 1) | (idx & low);
          tmp[idx] = x[base] + x[base | bit_at(op.p1)];
        }
        --bits;
        break;
      }
    }
    x.swap(tmp);
  }
}

/// State over the blocks of the first layer, built directly from the product
/// boundary state.
std::vector<double> initial_blocks(const Partition& p, const ExperimentVector& a, LocalDim q) {
  const double c = spread_of(q);
  std::vector<double> x{1.0};
  for (const auto& block : p.blocks) {
    double phi[2];
    if (block.size() == 1) {
      const auto [ui, us] = boundary_site_pair(a.sign(block[0]), q);
      phi[0] = ui;
      phi[1] = us;
    } else {
      const auto [ai, as] = boundary_site_pair(a.sign(block[0]), q);
      const auto [bi, bs] = boundary_site_pair(a.sign(block[1]), q);
      const double mixed = c * (ai * bs + as * bi);
      phi[0] = ai * bi + mixed;
      phi[1] = as * bs + mixed;
    }
    const std::size_t size = x.size();
    x.resize(2 * size);
    for (std::size_t k = 0; k < size; ++k) {
      x[size + k] = x[k] * phi[1];
      x[k] *= phi[0];
    }
  }
  return x;
}

double contract_blocks(const Partition& p, const ExperimentVector& a, const std::vector<double>& x) {
  std::uint64_t negative = 0;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    int parity = 0;
    for (int s : p.blocks[b]) parity ^= static_cast<int>(a.bit(s));
    if (parity) negative |= bit_at(static_cast<int>(b));
  }
  double acc = 0;
  for (std::size_t idx = 0; idx < x.size(); ++idx)
    acc += (std::popcount(idx & negative) & 1) ? -x[idx] : x[idx];
  return acc;
}

/// Layers of one circuit realization, generated on demand from its own stream.
/// Entries are never moved once created, so references stay valid.
class LayerChain {
 public:
  struct Entry {
    Layer layer;
    Partition partition;
    Transition from_previous;  // empty for the first layer
  };

  LayerChain(const EnsembleSpec& spec, std::mt19937_64 rng) : spec_(spec), rng_(rng) {}

  /// Layer k, 1-based.
  const Entry& at(int k) {
    std::lock_guard lock(mutex_);
    while (static_cast<int>(entries_.size()) < k) append();
    return entries_[static_cast<std::size_t>(k - 1)];
  }

 private:
  void append() {
    const int k = static_cast<int>(entries_.size());  // 0-based index of the new layer
    Layer layer;
    switch (spec_.kind) {
      case EnsembleKind::brickwork_open:
      case EnsembleKind::brickwork_periodic: {
        const auto [odd, even] = brickwork_layers(
            spec_.n, spec_.kind == EnsembleKind::brickwork_open ? Boundary::open : Boundary::periodic);
        layer = k % 2 == 0 ? odd : even;
        break;
      }
      case EnsembleKind::pcg:
        layer = sample_pcg_layer(spec_.n, rng_);
        break;
      case EnsembleKind::pb:
        layer = k == 0 ? sample_pcg_layer(spec_.n, rng_) : sample_pb_layer(entries_.back().layer, spec_.n, rng_);
        break;
      case EnsembleKind::pbfe:
        layer = k % 2 == 0 ? sample_pbfe_odd_layer(spec_.fixed_even, spec_.n, rng_) : spec_.fixed_even;
        break;
      default:
        throw ConfigError("ensemble is not layered");
    }
    Entry e;
    e.partition = partition_of(layer, spec_.n);
    if (!entries_.empty()) e.from_previous = compile_transition(entries_.back().partition, e.partition);
    e.layer = std::move(layer);
    entries_.push_back(std::move(e));
  }

  const EnsembleSpec& spec_;
  std::mt19937_64 rng_;
  std::deque<Entry> entries_;
  std::mutex mutex_;
};

using Chains = std::vector<std::shared_ptr<LayerChain>>;

Chains make_chains(const EnsembleSpec& spec, const EngineOptions& opts) {
  Chains chains;
  if (!spec.is_layered()) return chains;
  const int count = spec.is_sampled() ? opts.realizations : 1;
  if (count < 1) throw ConfigError("realization count must be >= 1");
  for (int r = 0; r < count; ++r)
    chains.push_back(std::make_shared<LayerChain>(spec, stream_rng(opts.seed, static_cast<std::uint64_t>(r))));
  return chains;
}

// ---------------------------------------------------------------------------
// Trackers: evolve a group of experiments one step at a time.

class Tracker {
 public:
  Tracker(const EnsembleSpec& spec, std::vector<ExperimentVector> experiments)
      : spec_(spec), experiments_(std::move(experiments)), active_(experiments_.size(), 1) {}
  virtual ~Tracker() = default;

  virtual void advance() = 0;
  virtual double mean(std::size_t i) const = 0;
  virtual double std_err(std::size_t) const { return 0.0; }

  int step() const { return step_; }
  std::size_t size() const { return experiments_.size(); }
  const ExperimentVector& experiment(std::size_t i) const { return experiments_[i]; }
  bool active(std::size_t i) const { return active_[i] != 0; }
  virtual void deactivate(std::size_t i) { active_[i] = 0; }
  bool any_active() const { return std::any_of(active_.begin(), active_.end(), [](char c) { return c != 0; }); }

 protected:
  const EnsembleSpec& spec_;
  std::vector<ExperimentVector> experiments_;
  std::vector<char> active_;
  int step_ = 0;
};

class SingleSiteTracker final : public Tracker {
 public:
  using Tracker::Tracker;
  void advance() override { ++step_; }
  double mean(std::size_t i) const override { return boundary_norm(experiments_[i], spec_.q); }
};

class GraphTracker final : public Tracker {
 public:
  GraphTracker(const EnsembleSpec& spec, std::vector<ExperimentVector> experiments)
      : Tracker(spec, std::move(experiments)) {
    for (const auto& a : experiments_) {
      states_.push_back(boundary_state(a, spec_.q));
      values_.push_back(boundary_norm(a, spec_.q));
    }
  }

  void advance() override {
    for (std::size_t i = 0; i < size(); ++i) {
      if (!active(i)) continue;
      graph_step_inplace(states_[i], spec_.graph, scratch_);
      values_[i] = contract_boundary(experiments_[i], states_[i]);
    }
    ++step_;
  }

  double mean(std::size_t i) const override { return values_[i]; }

  void deactivate(std::size_t i) override {
    Tracker::deactivate(i);
    states_[i].coeffs.resize(0);
  }

 private:
  std::vector<CommutantState<double>> states_;
  std::vector<double> values_;
  Eigen::VectorXd scratch_;
};

class LayeredTracker final : public Tracker {
 public:
  LayeredTracker(const EnsembleSpec& spec, std::vector<ExperimentVector> experiments, Chains chains,
                 bool full_space)
      : Tracker(spec, std::move(experiments)), chains_(std::move(chains)), full_space_(full_space) {
    const std::size_t r = chains_.size();
    blocks_.assign(size(), std::vector<std::vector<double>>(r));
    if (full_space_) {
      dense_.resize(size());
      for (std::size_t i = 0; i < size(); ++i)
        dense_[i].assign(r, boundary_state(experiments_[i], spec_.q));
    }
    values_.assign(size(), std::vector<double>(r, 0.0));
    for (std::size_t i = 0; i < size(); ++i)
      std::fill(values_[i].begin(), values_[i].end(), boundary_norm(experiments_[i], spec_.q));
  }

  void advance() override {
    const int k = step_ + 1;
    const double c = spread_of(spec_.q);
    for (std::size_t r = 0; r < chains_.size(); ++r) {
      const auto& entry = chains_[r]->at(k);
      for (std::size_t i = 0; i < size(); ++i) {
        if (!active(i)) continue;
        if (full_space_) {
          for (auto [a, b] : entry.layer.pairs) apply_two_site_inplace(dense_[i][r], a, b);
          values_[i][r] = contract_boundary(experiments_[i], dense_[i][r]);
        } else {
          auto& x = blocks_[i][r];
          if (k == 1)
            x = initial_blocks(entry.partition, experiments_[i], spec_.q);
          else
            run_transition(entry.from_previous, c, x, scratch_);
          values_[i][r] = contract_blocks(entry.partition, experiments_[i], x);
        }
      }
    }
    ++step_;
  }

  double mean(std::size_t i) const override {
    double acc = 0;
    for (double v : values_[i]) acc += v;
    return acc / static_cast<double>(values_[i].size());
  }

  double std_err(std::size_t i) const override {
    const std::size_t r = values_[i].size();
    if (r < 2) return 0.0;
    const double m = mean(i);
    double ss = 0;
    for (double v : values_[i]) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(r - 1) / static_cast<double>(r));
  }

  void deactivate(std::size_t i) override {
    Tracker::deactivate(i);
    for (auto& x : blocks_[i]) std::vector<double>().swap(x);
    if (full_space_) dense_[i].clear();
  }

 private:
  Chains chains_;
  bool full_space_;
  std::vector<std::vector<std::vector<double>>> blocks_;       // [experiment][realization]
  std::vector<std::vector<CommutantState<double>>> dense_;     // full-space mode
  std::vector<std::vector<double>> values_;                    // [experiment][realization]
  std::vector<double> scratch_;
};

std::unique_ptr<Tracker> make_tracker(const EnsembleSpec& spec, std::vector<ExperimentVector> experiments,
                                      const Chains& chains, const EngineOptions& opts) {
  for (const auto& a : experiments)
    if (a.n() != spec.n) throw ConfigError("experiment length does not match the site count");
  switch (spec.kind) {
    case EnsembleKind::single_site:
      return std::make_unique<SingleSiteTracker>(spec, std::move(experiments));
    case EnsembleKind::graph:
      if (spec.n > 30) throw ConfigError("graph ensembles are limited to n <= 30");
      return std::make_unique<GraphTracker>(spec, std::move(experiments));
    default:
      if (opts.full_space_layers && spec.n > 30) throw ConfigError("full-space evolution is limited to n <= 30");
      return std::make_unique<LayeredTracker>(spec, std::move(experiments), chains, opts.full_space_layers);
  }
}

std::vector<std::vector<ExperimentVector>> split_chunks(const std::vector<ExperimentVector>& all, std::size_t chunk) {
  chunk = std::max<std::size_t>(chunk, 1);
  std::vector<std::vector<ExperimentVector>> out;
  for (std::size_t k = 0; k < all.size(); k += chunk)
    out.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(k),
                     all.begin() + static_cast<std::ptrdiff_t>(std::min(all.size(), k + chunk)));
  return out;
}

double pref(const EnsembleSpec& spec, Parity p) {
  const double x = std::pow(spec.q.as_double(), -spec.n);
  return p == Parity::even ? (1 + x) / 2 : (1 - x) / 2;
}

double error_of(const EnsembleSpec& spec, const ExperimentVector& a, double q_value) {
  return parity_weighted_error(q_value, spec.n, spec.q, a.parity());
}

struct Trajectories {
  Eigen::MatrixXd q;   // experiments x recorded steps
  Eigen::MatrixXd se;
};

/// Quadratic forms of every experiment at the given (sorted, unique) steps.
Trajectories run_trajectories(const EnsembleSpec& spec, const std::vector<ExperimentVector>& experiments,
                              const std::vector<int>& steps, const EngineOptions& opts) {
  Trajectories out;
  out.q.resize(static_cast<Eigen::Index>(experiments.size()), static_cast<Eigen::Index>(steps.size()));
  out.se.resizeLike(out.q);
  if (experiments.empty() || steps.empty()) return out;
  const Chains chains = make_chains(spec, opts);
  const auto chunks = split_chunks(experiments, opts.chunk);
  const std::size_t chunk = std::max<std::size_t>(opts.chunk, 1);
  parallel_for(chunks.size(), opts.threads, [&](std::size_t ci) {
    auto tracker = make_tracker(spec, chunks[ci], chains, opts);
    for (std::size_t s = 0; s < steps.size(); ++s) {
      while (tracker->step() < steps[s]) tracker->advance();
      for (std::size_t i = 0; i < tracker->size(); ++i) {
        const auto row = static_cast<Eigen::Index>(ci * chunk + i);
        out.q(row, static_cast<Eigen::Index>(s)) = tracker->mean(i);
        out.se(row, static_cast<Eigen::Index>(s)) = tracker->std_err(i);
      }
    }
  });
  return out;
}

std::vector<int> normalized_steps(std::vector<int> steps) {
  for (int s : steps)
    if (s < 0) throw ConfigError("step counts must be >= 0");
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

std::vector<ExperimentVector> representatives(const std::vector<ExperimentClass>& classes) {
  std::vector<ExperimentVector> reps;
  reps.reserve(classes.size());
  for (const auto& c : classes) reps.push_back(c.representative);
  return reps;
}

bool prunable_at(const EnsembleSpec& spec, int steps) {
  switch (spec.kind) {
    case EnsembleKind::single_site:
    case EnsembleKind::graph:
      return true;
    case EnsembleKind::brickwork_open:
    case EnsembleKind::brickwork_periodic:
      return steps % 2 == 1;
    default:
      return false;
  }
}

/// Whether error e of experiment a should replace the current maximum. Near
/// ties (relative 1e-12) go to the lowest weight, then to singlets farthest from
/// the middle of the chain, so equivalent experiments are reported consistently.
bool prefer(double e, const ExperimentVector& a, double best, const ExperimentVector* cur) {
  if (cur == nullptr) return true;
  const double tol = 1e-12 * std::max(std::abs(e), std::abs(best));
  if (e > best + tol) return true;
  if (e < best - tol) return false;
  if (a.weight() != cur->weight()) return a.weight() < cur->weight();
  auto spread = [](const ExperimentVector& x) {
    int acc = 0;
    for (int i = 0; i < x.n(); ++i)
      if (x.bit(i)) acc += std::abs(2 * i - (x.n() - 1));
    return acc;
  };
  if (spread(a) != spread(*cur)) return spread(a) > spread(*cur);
  return a.bits() > cur->bits();
}

struct ScanPoint {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t argmax = 0;
  double stat_err = 0;
  bool exact = true;
  bool seen = false;
};

/// Lockstep scan over steps until the maximum error over the experiments is at
/// most epsilon. Returns the per-step maxima for steps 0..upper.
std::vector<ScanPoint> scan_until(const EnsembleSpec& spec, const std::vector<ExperimentVector>& experiments,
                                  double epsilon, bool prune, const EngineOptions& opts) {
  const Chains chains = make_chains(spec, opts);
  auto chunks = split_chunks(experiments, opts.chunk);
  const std::size_t chunk = std::max<std::size_t>(opts.chunk, 1);
  std::vector<std::unique_ptr<Tracker>> trackers(chunks.size());
  for (std::size_t ci = 0; ci < chunks.size(); ++ci) trackers[ci] = make_tracker(spec, chunks[ci], chains, opts);
  const double threshold = opts.prune_factor * epsilon;
  std::vector<ScanPoint> curve;
  std::vector<ScanPoint> per_chunk(chunks.size());
  for (int step = 0;; ++step) {
    const bool prune_now = prune && prunable_at(spec, step);
    parallel_for(trackers.size(), opts.threads, [&](std::size_t ci) {
      auto& t = *trackers[ci];
      ScanPoint best;
      if (!t.any_active()) {
        per_chunk[ci] = best;
        return;
      }
      if (step > 0) t.advance();
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!t.active(i)) continue;
        const double e = error_of(spec, t.experiment(i), t.mean(i));
        if (prefer(e, t.experiment(i), best.value, best.seen ? &experiments[best.argmax] : nullptr)) {
          best.value = std::max(e, best.seen ? best.value : e);
          best.argmax = ci * chunk + i;
          best.seen = true;
          best.stat_err = pref(spec, t.experiment(i).parity()) * t.std_err(i);
        }
        if (prune_now && e < threshold) t.deactivate(i);
      }
      per_chunk[ci] = best;
    });
    ScanPoint global;
    for (const auto& p : per_chunk) {
      if (!p.seen) continue;
      if (prefer(p.value, experiments[p.argmax], global.value, global.seen ? &experiments[global.argmax] : nullptr)) {
        const double v = global.seen ? std::max(global.value, p.value) : p.value;
        global = p;
        global.value = v;
      }
    }
    // Pruned experiments sit below the threshold, so a maximum under the
    // threshold is not known exactly.
    global.exact = !prune || global.value >= threshold;
    curve.push_back(global);
    if (global.value <= epsilon) return curve;
    if (step >= opts.max_steps)
      throw UnreachedError(fmt::format("error {:.6g} still above epsilon {:.6g} after {} steps", global.value,
                                       epsilon, step),
                           step, global.value);
  }
}

DepthResult depth_from_scan(const EnsembleSpec& spec, const std::vector<ExperimentVector>& experiments,
                            double epsilon, ErrorKind kind, bool prune, const EngineOptions& opts) {
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
  auto curve = scan_until(spec, experiments, epsilon, prune, opts);
  const int upper = static_cast<int>(curve.size()) - 1;
  if (upper == 0)
    throw ConfigError(fmt::format("epsilon {:.6g} is not below the initial error {:.6g}", epsilon, curve[0].value));
  if (!curve[upper].exact) {
    // Rerun the ceiling step without pruning to report its exact maximum.
    const auto t = run_trajectories(spec, experiments, {upper}, opts);
    ScanPoint exact;
    for (Eigen::Index i = 0; i < t.q.rows(); ++i) {
      const double e = error_of(spec, experiments[static_cast<std::size_t>(i)], t.q(i, 0));
      const auto& a = experiments[static_cast<std::size_t>(i)];
      if (prefer(e, a, exact.value, exact.seen ? &experiments[exact.argmax] : nullptr)) {
        exact.value = exact.seen ? std::max(e, exact.value) : e;
        exact.argmax = static_cast<std::size_t>(i);
        exact.seen = true;
        exact.stat_err = pref(spec, experiments[static_cast<std::size_t>(i)].parity()) * t.se(i, 0);
      }
    }
    curve[upper] = exact;
  }
  DepthResult r;
  r.epsilon = epsilon;
  r.kind = kind;
  r.lower_step = upper - 1;
  r.upper_step = upper;
  r.lower_error = curve[upper - 1].value;
  r.upper_error = curve[upper].value;
  r.lower_argmax = experiments[curve[upper - 1].argmax];
  r.upper_argmax = experiments[curve[upper].argmax];
  r.stat_err = curve[upper].stat_err;
  r.guaranteed = step_guaranteed(spec, upper - 1) && step_guaranteed(spec, upper);
  r.depth = interpolate_log_depth(r.lower_step, r.lower_error, r.upper_step, r.upper_error, epsilon);
  return r;
}

}  // namespace

void graph_step_inplace(CommutantState<double>& state, const SiteGraph& g, Eigen::VectorXd& scratch) {
  const double c = spread_of(state.q);
  const double inv = 1.0 / static_cast<double>(g.edges.size());
  scratch = state.coeffs;
  const double* x = state.coeffs.data();
  double* y = scratch.data();
  const std::uint64_t quads = bit_at(state.n - 2);
  for (auto [i, j] : g.edges) {
    const int lo = std::min(i, j), hi = std::max(i, j);
    const std::uint64_t mi = bit_at(i), mj = bit_at(j);
    for (std::uint64_t k = 0; k < quads; ++k) {
      const std::uint64_t base = detail::insert_two_zero_bits(k, lo, hi);
      const double a = x[base | mi] * inv, b = x[base | mj] * inv;
      const double t = c * (a + b);
      y[base] += t;
      y[base | mi | mj] += t;
      y[base | mi] -= a;
      y[base | mj] -= b;
    }
  }
  state.coeffs.swap(scratch);
}

bool step_guaranteed(const EnsembleSpec& spec, int steps) {
  switch (spec.kind) {
    case EnsembleKind::single_site:
    case EnsembleKind::graph:
      return true;
    case EnsembleKind::brickwork_open:
    case EnsembleKind::brickwork_periodic:
      return steps == 0 || steps % 2 == 1;
    default:
      return steps <= 1;
  }
}

double interpolate_log_depth(int lower, double lower_error, int upper, double upper_error, double epsilon) {
  if (upper_error <= 0 || lower_error <= 0) return upper;
  const double t = (std::log(lower_error) - std::log(epsilon)) / (std::log(lower_error) - std::log(upper_error));
  return lower + t * (upper - lower);
}

Eigen::MatrixXd quadratic_form_trajectories(const EnsembleSpec& spec, const std::vector<ExperimentVector>& experiments,
                                            int max_step, const EngineOptions& opts) {
  if (max_step < 0) throw ConfigError("max_step must be >= 0");
  std::vector<int> steps(static_cast<std::size_t>(max_step + 1));
  for (int s = 0; s <= max_step; ++s) steps[s] = s;
  return run_trajectories(spec, experiments, steps, opts).q;
}

double quadratic_form(const EnsembleSpec& spec, const ExperimentVector& a, int steps, const EngineOptions& opts) {
  return run_trajectories(spec, {a}, normalized_steps({steps}), opts).q(0, 0);
}

ErrorCurve error_curve(const EnsembleSpec& spec, const std::vector<int>& steps_in, const EngineOptions& opts) {
  const auto steps = normalized_steps(steps_in);
  const auto classes = experiment_classes(spec, opts.class_cap, opts.use_symmetry);
  const auto reps = representatives(classes);
  const auto t = run_trajectories(spec, reps, steps, opts);
  ErrorCurve curve;
  curve.steps = steps;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
      const double e = error_of(spec, reps[i], t.q(static_cast<Eigen::Index>(i), col));
      if (prefer(e, reps[i], best, i == 0 ? nullptr : &reps[arg])) {
        best = i == 0 ? e : std::max(e, best);
        arg = i;
      }
    }
    // Class 0 always holds the all-zero experiment.
    curve.mult_error.push_back(best);
    curve.mult_stat_err.push_back(pref(spec, reps[arg].parity()) * t.se(static_cast<Eigen::Index>(arg), col));
    curve.coll_error.push_back(error_of(spec, reps[0], t.q(0, col)));
    curve.coll_stat_err.push_back(pref(spec, Parity::even) * t.se(0, col));
    curve.argmax.push_back(reps[arg]);
    curve.guaranteed.push_back(step_guaranteed(spec, steps[s]) ? 1 : 0);
  }
  return curve;
}

ErrorPoint multiplicative_error(const EnsembleSpec& spec, int steps, const EngineOptions& opts) {
  const auto c = error_curve(spec, {steps}, opts);
  return {c.mult_error[0], c.argmax[0], c.mult_stat_err[0], c.guaranteed[0] != 0};
}

ErrorPoint collisional_error(const EnsembleSpec& spec, int steps, const EngineOptions& opts) {
  const ExperimentVector zero = ExperimentVector::zeros(spec.n);
  const auto t = run_trajectories(spec, {zero}, normalized_steps({steps}), opts);
  return {error_of(spec, zero, t.q(0, 0)), zero, pref(spec, Parity::even) * t.se(0, 0), step_guaranteed(spec, steps)};
}

SweepResult experiment_sweep(const EnsembleSpec& spec, const std::vector<int>& steps_in, const EngineOptions& opts) {
  SweepResult out;
  out.steps = normalized_steps(steps_in);
  out.classes = experiment_classes(spec, opts.class_cap, opts.use_symmetry);
  out.symmetry = opts.use_symmetry ? SymmetryReducer::for_spec(spec).description() : "none";
  const auto reps = representatives(out.classes);
  const auto t = run_trajectories(spec, reps, out.steps, opts);
  out.error.resizeLike(t.q);
  out.stat_err.resizeLike(t.q);
  for (Eigen::Index i = 0; i < t.q.rows(); ++i) {
    const auto& a = reps[static_cast<std::size_t>(i)];
    for (Eigen::Index s = 0; s < t.q.cols(); ++s) {
      out.error(i, s) = error_of(spec, a, t.q(i, s));
      out.stat_err(i, s) = pref(spec, a.parity()) * t.se(i, s);
    }
  }
  for (Eigen::Index s = 0; s < t.q.cols(); ++s) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < reps.size(); ++i)
      if (prefer(out.error(static_cast<Eigen::Index>(i), s), reps[i], out.error(static_cast<Eigen::Index>(arg), s),
                 &reps[arg]))
        arg = i;
    out.argmax.push_back(arg);
  }
  return out;
}

DepthResult design_depth(const EnsembleSpec& spec, double epsilon, ErrorKind kind, const EngineOptions& opts) {
  if (kind == ErrorKind::collisional)
    return depth_from_scan(spec, {ExperimentVector::zeros(spec.n)}, epsilon, kind, false, opts);
  const auto reps = representatives(experiment_classes(spec, opts.class_cap, opts.use_symmetry));
  return depth_from_scan(spec, reps, epsilon, kind, opts.prune_factor > 0, opts);
}

DepthResult experiment_depth(const EnsembleSpec& spec, const ExperimentVector& a, double epsilon,
                             const EngineOptions& opts) {
  return depth_from_scan(spec, {a}, epsilon, ErrorKind::multiplicative, false, opts);
}

std::pair<double, double> sampled_error(const EnsembleSpec& spec, int layers, int realizations,
                                        std::uint64_t master_seed, const EngineOptions& opts) {
  if (!spec.is_sampled()) throw ConfigError("sampled_error needs a matching-based ensemble");
  if (realizations < 2) throw ConfigError("sampled_error needs at least 2 realizations");
  EngineOptions o = opts;
  o.realizations = realizations;
  o.seed = master_seed;
  const auto p = multiplicative_error(spec, layers, o);
  return {p.value, p.stat_err};
}

}  // namespace twodesign
