#include "twodesign/connectivity.hpp"

#include "twodesign/errors.hpp"
#include "twodesign/parallel.hpp"
#include "twodesign/union_find.hpp"

#include <algorithm>
#include <cmath>

namespace twodesign {

namespace {

struct Tagged {
  SitePair gate;
  int origin;
  bool dup;
};

bool connected_without(const std::vector<Tagged>& block, int n, std::size_t skip) {
  UnionFind uf(n);
  for (std::size_t k = 0; k < block.size(); ++k)
    if (k != skip) uf.unite(block[k].gate.first, block[k].gate.second);
  return uf.components() == 1;
}

bool shares_site(SitePair a, SitePair b) {
  return a.first == b.first || a.first == b.second || a.second == b.first || a.second == b.second;
}

}  // namespace

bool is_connected(const GateSequence& gates, int n) {
  if (n < 1) throw ConfigError("n must be >= 1");
  UnionFind uf(n);
  for (auto [i, j] : gates) {
    detail::check_pair(n, i, j);
    uf.unite(i, j);
  }
  return uf.components() == 1;
}

int naive_count(const GateSequence& gates, int n) {
  if (n < 2) return 0;
  int count = 0;
  UnionFind uf(n);
  for (auto [i, j] : gates) {
    detail::check_pair(n, i, j);
    uf.unite(i, j);
    if (uf.components() == 1) {
      ++count;
      uf = UnionFind(n);
    }
  }
  return count;
}

BlockDecomposition greedy_blocks(const GateSequence& gates, int n) {
  BlockDecomposition out;
  if (n < 2) return out;
  for (auto [i, j] : gates) detail::check_pair(n, i, j);
  std::vector<Tagged> carry;
  std::size_t pos = 0;
  while (true) {
    std::vector<Tagged> block = carry;
    UnionFind uf(n);
    for (const auto& t : block) uf.unite(t.gate.first, t.gate.second);
    // A block must consume at least one new gate so carried gates alone never
    // count as a connection.
    bool fresh = false;
    while (pos < gates.size() && !(fresh && uf.components() == 1)) {
      block.push_back({gates[pos], static_cast<int>(pos), false});
      uf.unite(gates[pos].first, gates[pos].second);
      ++pos;
      fresh = true;
    }
    if (!(fresh && uf.components() == 1)) break;
    // Last layer: gates with no later gate in the block on a shared site.
    std::vector<std::size_t> last;
    for (std::size_t k = 0; k < block.size(); ++k) {
      bool free = true;
      for (std::size_t m = k + 1; m < block.size() && free; ++m) free = !shares_site(block[k].gate, block[m].gate);
      if (free) last.push_back(k);
    }
    std::vector<char> removed(block.size(), 0);
    for (auto it = last.rbegin(); it != last.rend(); ++it) {
      std::vector<Tagged> trial;
      for (std::size_t k = 0; k < block.size(); ++k)
        if (!removed[k]) trial.push_back(block[k]);
      // Position of *it within trial.
      std::size_t idx = 0;
      for (std::size_t k = 0; k < *it; ++k) idx += removed[k] ? 0 : 1;
      if (connected_without(trial, n, idx)) removed[*it] = 1;
    }
    carry.clear();
    GateSequence seq;
    std::vector<int> origin;
    std::vector<char> dup;
    for (std::size_t k = 0; k < block.size(); ++k) {
      if (removed[k]) continue;
      seq.push_back(block[k].gate);
      origin.push_back(block[k].origin);
      dup.push_back(block[k].dup ? 1 : 0);
    }
    for (std::size_t k : last) {
      if (removed[k])
        carry.push_back(block[k]);
      else
        carry.push_back({block[k].gate, block[k].origin, true});
    }
    out.blocks.push_back(std::move(seq));
    out.origin.push_back(std::move(origin));
    out.duplicated.push_back(std::move(dup));
    ++out.count;
  }
  return out;
}

int greedy_count(const GateSequence& gates, int n) { return greedy_blocks(gates, n).count; }

bool greedy_rewrite_sound(const GateSequence& gates, const BlockDecomposition& d) {
  std::vector<int> order;
  std::vector<char> seen(gates.size(), 0);
  for (std::size_t b = 0; b < d.blocks.size(); ++b) {
    if (d.blocks[b].size() != d.origin[b].size() || d.blocks[b].size() != d.duplicated[b].size()) return false;
    for (std::size_t k = 0; k < d.blocks[b].size(); ++k) {
      const int o = d.origin[b][k];
      if (o < 0 || static_cast<std::size_t>(o) >= gates.size() || gates[o] != d.blocks[b][k]) return false;
      if (d.duplicated[b][k]) {
        // A copy must follow its original.
        if (!seen[o]) return false;
        continue;
      }
      if (seen[o]) return false;
      seen[o] = 1;
      order.push_back(o);
    }
  }
  // Gates sharing a site keep their relative order.
  for (std::size_t x = 0; x < order.size(); ++x)
    for (std::size_t y = x + 1; y < order.size(); ++y)
      if (order[x] > order[y] && shares_site(gates[order[x]], gates[order[y]])) return false;
  return true;
}

GateSequence sample_gate_sequence(const EnsembleSpec& spec, int s, std::mt19937_64& rng) {
  if (s < 0) throw ConfigError("gate count must be >= 0");
  if (spec.kind == EnsembleKind::graph) return sample_graph_realization(spec.graph, s, rng);
  if (!spec.is_layered()) throw ConfigError("ensemble has no two-site gates");
  const int per_layer = std::max(1, (spec.n - 1) / 2);
  GateSequence out;
  for (const auto& layer : realization_layers(spec, s / per_layer + 1, rng))
    out.insert(out.end(), layer.pairs.begin(), layer.pairs.end());
  out.resize(static_cast<std::size_t>(s));
  return out;
}

ConnectionStats mean_connection_count(const EnsembleSpec& spec, int s, int samples, std::uint64_t seed,
                                      int threads) {
  if (samples < 2) throw ConfigError("samples must be >= 2");
  spec.validate();
  std::vector<double> naive(static_cast<std::size_t>(samples)), greedy(naive.size());
  parallel_for(naive.size(), threads, [&](std::size_t r) {
    auto rng = stream_rng(seed, r);
    const GateSequence g = sample_gate_sequence(spec, s, rng);
    naive[r] = naive_count(g, spec.n);
    greedy[r] = greedy_count(g, spec.n);
  });
  auto stats = [&](const std::vector<double>& v, double& mean, double& se) {
    double sum = 0, sq = 0;
    for (double x : v) sum += x;
    mean = sum / samples;
    for (double x : v) sq += (x - mean) * (x - mean);
    se = std::sqrt(sq / (samples - 1) / samples);
  };
  ConnectionStats out;
  stats(naive, out.mean_naive, out.se_naive);
  stats(greedy, out.mean_greedy, out.se_greedy);
  return out;
}

double coupon_collector_expectation(int m) {
  if (m < 1) throw ConfigError("coupon count must be >= 1");
  double h = 0;
  for (int k = 1; k <= m; ++k) h += 1.0 / k;
  return m * h;
}

}  // namespace twodesign
