#pragma once

// Circuit ensembles: graph families with i.i.d. uniform edge sampling, fixed
// brickworks, and matching-based layered architectures.

#include "twodesign/perm_algebra.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace twodesign {

using SitePair = std::pair<int, int>;
using GateSequence = std::vector<SitePair>;

struct SiteGraph {
  int n = 0;
  std::vector<SitePair> edges;  // stored with first < second

  /// Throws ConfigError on self-loops, duplicates or out-of-range endpoints.
  void validate() const;
  bool has_edge(int i, int j) const;
};

/// A set of pairwise-disjoint gates applied simultaneously.
struct Layer {
  std::vector<SitePair> pairs;

  bool is_disjoint(int n) const;
  bool is_perfect_matching(int n) const;
  friend bool operator==(const Layer&, const Layer&) = default;
};

enum class Family { linear, circle, complete, star, lollipop, bridge, hourglass, tree, random_regular };

struct FamilyParams {
  int arity = 2;            // tree
  int degree = 3;           // random_regular
  std::uint64_t seed = 0;   // random_regular
};

Family parse_family(std::string_view name);
std::string_view family_name(Family f);

SiteGraph make_family(Family f, int n, const FamilyParams& params = {});
SiteGraph make_family(std::string_view name, int n, const FamilyParams& params = {});

/// Graph JSON: {"n": int, "edges": [[i, j], ...]}.
SiteGraph graph_from_json(const std::string& text);
std::string graph_to_json(const SiteGraph& g);
SiteGraph load_graph(const std::string& path);

enum class Boundary { open, periodic };

/// (L_odd, L_even) with L_odd = (0,1),(2,3),... and L_even = (1,2),(3,4),...
/// plus (n-1,0) when periodic.
std::pair<Layer, Layer> brickwork_layers(int n, Boundary boundary);

/// Default fixed even layer for the fixed-even permuted brickwork: (0,1),(2,3),...
Layer default_fixed_even(int n);

enum class EnsembleKind { single_site, graph, brickwork_open, brickwork_periodic, pcg, pb, pbfe };

std::string_view kind_name(EnsembleKind k);

/// Everything needed to evolve one step of an ensemble. A graph step is one
/// uniformly sampled gate; for every other kind a step is one layer.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::single_site;
  int n = 1;
  LocalDim q;
  SiteGraph graph;                // graph kind
  std::optional<Family> family;   // graph kind built from a named family
  Layer fixed_even;               // pbfe

  static EnsembleSpec singles(int n, LocalDim q = LocalDim{2});
  static EnsembleSpec from_family(Family f, int n, LocalDim q = LocalDim{2},
                                  const FamilyParams& params = {});
  static EnsembleSpec from_graph(SiteGraph g, LocalDim q = LocalDim{2});
  static EnsembleSpec brickwork(int n, Boundary boundary, LocalDim q = LocalDim{2});
  static EnsembleSpec pcg(int n, LocalDim q = LocalDim{2});
  static EnsembleSpec pb(int n, LocalDim q = LocalDim{2});
  static EnsembleSpec pbfe(int n, LocalDim q = LocalDim{2}, std::optional<Layer> fixed_even = {});

  void validate() const;
  bool is_layered() const;
  bool is_sampled() const;
  std::string name() const;
};

/// One independent random stream per realization, derived from the master seed.
std::mt19937_64 stream_rng(std::uint64_t master_seed, std::uint64_t stream);

Layer sample_pcg_layer(int n, std::mt19937_64& rng);
Layer sample_pb_layer(const Layer& prev, int n, std::mt19937_64& rng);
Layer sample_pbfe_odd_layer(const Layer& fixed_even, int n, std::mt19937_64& rng);
GateSequence sample_graph_realization(const SiteGraph& g, int s, std::mt19937_64& rng);

/// Layer list of one realization of a layered spec (brickwork is deterministic).
std::vector<Layer> realization_layers(const EnsembleSpec& spec, int layers, std::mt19937_64& rng);

/// Union-find connectivity of the union of the given pairs on n sites.
bool pairs_connected(int n, const std::vector<SitePair>& pairs);

}  // namespace twodesign
