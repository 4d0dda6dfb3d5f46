#pragma once

// Connected-block counting on gate sequences: the naive left-to-right slicing
// and the greedy variant that reuses commuting last-layer gates in the next
// block.

#include "twodesign/architectures.hpp"

#include <cstdint>
#include <vector>

namespace twodesign {

bool is_connected(const GateSequence& gates, int n);

int naive_count(const GateSequence& gates, int n);

/// Output of the greedy slicing. Each gate remembers its input position;
/// `duplicated` marks copies introduced by splitting a gate in two.
struct BlockDecomposition {
  std::vector<GateSequence> blocks;  // connected blocks only
  std::vector<std::vector<int>> origin;
  std::vector<std::vector<char>> duplicated;
  int count = 0;
};

BlockDecomposition greedy_blocks(const GateSequence& gates, int n);
int greedy_count(const GateSequence& gates, int n);

/// True when the blocks, with duplicates dropped, reorder a prefix of the input
/// only by swapping adjacent gates on disjoint sites.
bool greedy_rewrite_sound(const GateSequence& gates, const BlockDecomposition& d);

/// Gate sequence of s gates from one realization of the spec. Layered
/// ensembles are read layer by layer and truncated to s gates.
GateSequence sample_gate_sequence(const EnsembleSpec& spec, int s, std::mt19937_64& rng);

struct ConnectionStats {
  double mean_naive = 0;
  double mean_greedy = 0;
  double se_naive = 0;
  double se_greedy = 0;
};

ConnectionStats mean_connection_count(const EnsembleSpec& spec, int s, int samples,
                                      std::uint64_t seed, int threads = 1);

/// m * H_m: expected draws to collect m equally likely coupons.
double coupon_collector_expectation(int m);

}  // namespace twodesign
