#include "twodesign/architectures.hpp"

#include "twodesign/errors.hpp"
#include "twodesign/union_find.hpp"

#include <fmt/format.h>
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace twodesign {

namespace {

SitePair ordered(int i, int j) { return i < j ? SitePair{i, j} : SitePair{j, i}; }

void add_clique(std::vector<SitePair>& edges, int first, int last) {
  for (int i = first; i <= last; ++i)
    for (int j = i + 1; j <= last; ++j) edges.emplace_back(i, j);
}

SiteGraph random_regular(int n, int d, std::uint64_t seed) {
  if (d < 1 || d >= n || (static_cast<long>(d) * n) % 2 != 0)
    throw ConfigError(fmt::format("no simple {}-regular graph on {} sites", d, n));
  std::mt19937_64 rng(seed);
  std::vector<int> stubs;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) stubs.push_back(i);
  // Configuration model; a pairing with a loop or multi-edge is discarded whole.
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    std::shuffle(stubs.begin(), stubs.end(), rng);
    std::set<SitePair> seen;
    bool simple = true;
    for (std::size_t k = 0; k + 1 < stubs.size() && simple; k += 2) {
      if (stubs[k] == stubs[k + 1] || !seen.insert(ordered(stubs[k], stubs[k + 1])).second)
        simple = false;
    }
    if (simple) return {n, {seen.begin(), seen.end()}};
  }
  throw ConfigError("random regular graph rejection sampling did not terminate");
}

}  // namespace

void SiteGraph::validate() const {
  if (n < 1) throw ConfigError("graph needs n >= 1");
  std::set<SitePair> seen;
  for (auto [i, j] : edges) {
    if (i == j) throw ConfigError(fmt::format("self-loop at site {}", i));
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw ConfigError(fmt::format("edge ({},{}) out of range for n={}", i, j, n));
    if (!seen.insert(ordered(i, j)).second)
      throw ConfigError(fmt::format("duplicate edge ({},{})", i, j));
  }
}

bool SiteGraph::has_edge(int i, int j) const {
  const auto e = ordered(i, j);
  return std::any_of(edges.begin(), edges.end(), [&](SitePair p) { return ordered(p.first, p.second) == e; });
}

bool Layer::is_disjoint(int n) const {
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (auto [i, j] : pairs) {
    if (i == j || i < 0 || j < 0 || i >= n || j >= n) return false;
    if (used[i] || used[j]) return false;
    used[i] = used[j] = 1;
  }
  return true;
}

bool Layer::is_perfect_matching(int n) const {
  return is_disjoint(n) && 2 * static_cast<int>(pairs.size()) == n;
}

Family parse_family(std::string_view name) {
  static const std::pair<std::string_view, Family> table[] = {
      {"linear", Family::linear},       {"circle", Family::circle},
      {"complete", Family::complete},   {"star", Family::star},
      {"lollipop", Family::lollipop},   {"bridge", Family::bridge},
      {"hourglass", Family::hourglass}, {"tree", Family::tree},
      {"random_regular", Family::random_regular}};
  for (auto [k, f] : table)
    if (k == name) return f;
  throw ConfigError(fmt::format("unknown graph family '{}'", name));
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::linear: return "linear";
    case Family::circle: return "circle";
    case Family::complete: return "complete";
    case Family::star: return "star";
    case Family::lollipop: return "lollipop";
    case Family::bridge: return "bridge";
    case Family::hourglass: return "hourglass";
    case Family::tree: return "tree";
    case Family::random_regular: return "random_regular";
  }
  return "?";
}

SiteGraph make_family(Family f, int n, const FamilyParams& params) {
  if (n < 2) throw ConfigError("graph families need n >= 2");
  SiteGraph g{n, {}};
  const int c = (n + 1) / 2;
  switch (f) {
    case Family::linear:
      for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
      break;
    case Family::circle:
      for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
      if (n > 2) g.edges.emplace_back(0, n - 1);
      break;
    case Family::complete:
      add_clique(g.edges, 0, n - 1);
      break;
    case Family::star:
      for (int i = 1; i < n; ++i) g.edges.emplace_back(0, i);
      break;
    case Family::lollipop:
      // Candy = clique on 0..c-1, stick = path c-1, c, ..., n-1.
      add_clique(g.edges, 0, c - 1);
      for (int i = c - 1; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
      break;
    case Family::bridge:
      add_clique(g.edges, 0, c - 1);
      add_clique(g.edges, c, n - 1);
      g.edges.emplace_back(c - 1, c);
      break;
    case Family::hourglass:
      // Cliques on 0..c-1 and c-1..n-1 share site c-1.
      add_clique(g.edges, 0, c - 1);
      add_clique(g.edges, c - 1, n - 1);
      break;
    case Family::tree:
      if (params.arity < 1) throw ConfigError("tree arity must be >= 1");
      for (int i = 1; i < n; ++i) g.edges.emplace_back((i - 1) / params.arity, i);
      break;
    case Family::random_regular:
      g = random_regular(n, params.degree, params.seed);
      break;
  }
  g.validate();
  return g;
}

SiteGraph make_family(std::string_view name, int n, const FamilyParams& params) {
  return make_family(parse_family(name), n, params);
}

SiteGraph graph_from_json(const std::string& text) {
  SiteGraph g;
  try {
    const auto j = nlohmann::json::parse(text);
    g.n = j.at("n").get<int>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ConfigError("edges must be [i, j] pairs");
      g.edges.push_back(ordered(e[0].get<int>(), e[1].get<int>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad graph JSON: {}", e.what()));
  }
  g.validate();
  return g;
}

std::string graph_to_json(const SiteGraph& g) {
  nlohmann::json j;
  j["n"] = g.n;
  j["edges"] = nlohmann::json::array();
  for (auto [a, b] : g.edges) j["edges"].push_back({a, b});
  return j.dump();
}

SiteGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open graph file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

std::pair<Layer, Layer> brickwork_layers(int n, Boundary boundary) {
  if (n < 2) throw ConfigError("brickwork needs n >= 2");
  if (boundary == Boundary::periodic && n % 2 != 0)
    throw ConfigError("periodic brickwork needs even n");
  Layer odd, even;
  for (int i = 0; i + 1 < n; i += 2) odd.pairs.emplace_back(i, i + 1);
  for (int i = 1; i + 1 < n; i += 2) even.pairs.emplace_back(i, i + 1);
  if (boundary == Boundary::periodic && n > 2) even.pairs.emplace_back(n - 1, 0);
  return {odd, even};
}

Layer default_fixed_even(int n) {
  Layer l;
  for (int i = 0; i + 1 < n; i += 2) l.pairs.emplace_back(i, i + 1);
  return l;
}

std::string_view kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::single_site: return "singles";
    case EnsembleKind::graph: return "graph";
    case EnsembleKind::brickwork_open: return "brickwork_obc";
    case EnsembleKind::brickwork_periodic: return "brickwork_pbc";
    case EnsembleKind::pcg: return "pcg";
    case EnsembleKind::pb: return "pb";
    case EnsembleKind::pbfe: return "pbfe";
  }
  return "?";
}

EnsembleSpec EnsembleSpec::singles(int n, LocalDim q) {
  EnsembleSpec s;
  s.kind = EnsembleKind::single_site;
  s.n = n;
  s.q = q;
  s.validate();
  return s;
}

EnsembleSpec EnsembleSpec::from_family(Family f, int n, LocalDim q, const FamilyParams& params) {
  EnsembleSpec s = from_graph(make_family(f, n, params), q);
  s.family = f;
  return s;
}

EnsembleSpec EnsembleSpec::from_graph(SiteGraph g, LocalDim q) {
  EnsembleSpec s;
  s.kind = EnsembleKind::graph;
  s.n = g.n;
  s.q = q;
  s.graph = std::move(g);
  s.validate();
  return s;
}

EnsembleSpec EnsembleSpec::brickwork(int n, Boundary boundary, LocalDim q) {
  EnsembleSpec s;
  s.kind = boundary == Boundary::open ? EnsembleKind::brickwork_open : EnsembleKind::brickwork_periodic;
  s.n = n;
  s.q = q;
  s.validate();
  return s;
}

EnsembleSpec EnsembleSpec::pcg(int n, LocalDim q) {
  EnsembleSpec s;
  s.kind = EnsembleKind::pcg;
  s.n = n;
  s.q = q;
  s.validate();
  return s;
}

EnsembleSpec EnsembleSpec::pb(int n, LocalDim q) {
  EnsembleSpec s = pcg(n, q);
  s.kind = EnsembleKind::pb;
  return s;
}

EnsembleSpec EnsembleSpec::pbfe(int n, LocalDim q, std::optional<Layer> fixed_even) {
  EnsembleSpec s;
  s.kind = EnsembleKind::pbfe;
  s.n = n;
  s.q = q;
  s.fixed_even = fixed_even ? *fixed_even : default_fixed_even(n);
  s.validate();
  return s;
}

void EnsembleSpec::validate() const {
  if (n < 1 || n > 64) throw ConfigError("site count must be in [1, 64]");
  switch (kind) {
    case EnsembleKind::single_site:
      break;
    case EnsembleKind::graph:
      graph.validate();
      if (graph.n != n) throw ConfigError("graph site count does not match n");
      if (graph.edges.empty()) throw ConfigError("graph ensemble needs at least one edge");
      break;
    case EnsembleKind::brickwork_open:
    case EnsembleKind::brickwork_periodic:
      brickwork_layers(n, kind == EnsembleKind::brickwork_open ? Boundary::open : Boundary::periodic);
      break;
    case EnsembleKind::pcg:
    case EnsembleKind::pb:
    case EnsembleKind::pbfe:
      if (n < 2 || n % 2 != 0) throw ConfigError("matching-based ensembles need even n >= 2");
      if (kind == EnsembleKind::pbfe && !fixed_even.is_perfect_matching(n))
        throw ConfigError("fixed even layer must be a perfect matching");
      break;
  }
}

bool EnsembleSpec::is_layered() const {
  return kind != EnsembleKind::graph && kind != EnsembleKind::single_site;
}

bool EnsembleSpec::is_sampled() const {
  return kind == EnsembleKind::pcg || kind == EnsembleKind::pb || kind == EnsembleKind::pbfe;
}

std::string EnsembleSpec::name() const {
  if (kind == EnsembleKind::graph) return family ? std::string(family_name(*family)) : "custom_graph";
  return std::string(kind_name(kind));
}

std::mt19937_64 stream_rng(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Layer sample_pcg_layer(int n, std::mt19937_64& rng) {
  if (n < 2 || n % 2 != 0) throw ConfigError("perfect matchings need even n >= 2");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Layer l;
  for (int k = 0; k < n; k += 2) l.pairs.push_back(ordered(perm[k], perm[k + 1]));
  std::sort(l.pairs.begin(), l.pairs.end());
  return l;
}

Layer sample_pb_layer(const Layer& prev, int n, std::mt19937_64& rng) {
  if (!prev.is_perfect_matching(n)) throw ConfigError("previous layer must be a perfect matching");
  // Two sites: the only matching is forced and trivially connected.
  if (n == 2) return sample_pcg_layer(n, rng);
  for (;;) {
    Layer next = sample_pcg_layer(n, rng);
    std::vector<SitePair> both = prev.pairs;
    both.insert(both.end(), next.pairs.begin(), next.pairs.end());
    if (pairs_connected(n, both)) return next;
  }
}

Layer sample_pbfe_odd_layer(const Layer& fixed_even, int n, std::mt19937_64& rng) {
  return sample_pb_layer(fixed_even, n, rng);
}

GateSequence sample_graph_realization(const SiteGraph& g, int s, std::mt19937_64& rng) {
  if (g.edges.empty()) throw ConfigError("cannot sample gates from an empty graph");
  std::uniform_int_distribution<std::size_t> pick(0, g.edges.size() - 1);
  GateSequence out;
  out.reserve(static_cast<std::size_t>(std::max(s, 0)));
  for (int k = 0; k < s; ++k) out.push_back(g.edges[pick(rng)]);
  return out;
}

std::vector<Layer> realization_layers(const EnsembleSpec& spec, int layers, std::mt19937_64& rng) {
  std::vector<Layer> out;
  out.reserve(static_cast<std::size_t>(std::max(layers, 0)));
  switch (spec.kind) {
    case EnsembleKind::brickwork_open:
    case EnsembleKind::brickwork_periodic: {
      const auto [odd, even] = brickwork_layers(
          spec.n, spec.kind == EnsembleKind::brickwork_open ? Boundary::open : Boundary::periodic);
      for (int k = 0; k < layers; ++k) out.push_back(k % 2 == 0 ? odd : even);
      break;
    }
    case EnsembleKind::pcg:
      for (int k = 0; k < layers; ++k) out.push_back(sample_pcg_layer(spec.n, rng));
      break;
    case EnsembleKind::pb:
      for (int k = 0; k < layers; ++k)
        out.push_back(k == 0 ? sample_pcg_layer(spec.n, rng) : sample_pb_layer(out.back(), spec.n, rng));
      break;
    case EnsembleKind::pbfe:
      for (int k = 0; k < layers; ++k)
        out.push_back(k % 2 == 0 ? sample_pbfe_odd_layer(spec.fixed_even, spec.n, rng) : spec.fixed_even);
      break;
    default:
      throw ConfigError("ensemble is not layered");
  }
  return out;
}

bool pairs_connected(int n, const std::vector<SitePair>& pairs) {
  UnionFind uf(n);
  for (auto [i, j] : pairs) uf.unite(i, j);
  return uf.components() == 1;
}

}  // namespace twodesign
