#include "twodesign/symmetry.hpp"

#include "twodesign/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <set>

namespace twodesign {

namespace {

using Perm = std::vector<int>;

std::vector<int> range(int first, int last) {
  std::vector<int> r;
  for (int i = first; i <= last; ++i) r.push_back(i);
  return r;
}

Perm identity(int n) {
  Perm p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

Perm reversal(int n) {
  Perm p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[i] = n - 1 - i;
  return p;
}

/// Closure of the generators under composition.
std::vector<Perm> generate_group(int n, const std::vector<Perm>& gens) {
  std::set<Perm> group{identity(n)};
  std::vector<Perm> frontier{identity(n)};
  while (!frontier.empty()) {
    std::vector<Perm> next;
    for (const auto& p : frontier)
      for (const auto& g : gens) {
        Perm c(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) c[i] = g[p[i]];
        if (group.insert(c).second) next.push_back(c);
      }
    frontier = std::move(next);
  }
  return {group.begin(), group.end()};
}

std::uint64_t permute(std::uint64_t mask, const Perm& p) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if ((mask >> i) & 1u) out |= std::uint64_t{1} << p[i];
  return out;
}

}  // namespace

SymmetryReducer SymmetryReducer::trivial(int n) {
  SymmetryReducer s;
  s.n_ = n;
  s.perms_ = {identity(n)};
  return s;
}

SymmetryReducer SymmetryReducer::for_spec(const EnsembleSpec& spec) {
  const int n = spec.n;
  SymmetryReducer s = trivial(n);
  const int c = (n + 1) / 2;
  auto with_group = [&](std::vector<Perm> gens, std::string desc) {
    s.perms_ = generate_group(n, gens);
    s.description_ = std::move(desc);
  };
  switch (spec.kind) {
    case EnsembleKind::single_site:
    case EnsembleKind::pcg:
    case EnsembleKind::pb:
      s.blocks_ = {range(0, n - 1)};
      s.description_ = "hamming";
      break;
    case EnsembleKind::pbfe:
      s.fixed_pairs_ = spec.fixed_even.pairs;
      s.description_ = "pair_occupancy";
      break;
    case EnsembleKind::brickwork_open:
      // Reversal maps L_odd onto itself only when n is even.
      if (n % 2 == 0) with_group({reversal(n)}, "reversal");
      break;
    case EnsembleKind::brickwork_periodic: {
      Perm shift2(static_cast<std::size_t>(n)), reflect(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        shift2[i] = (i + 2) % n;
        reflect[i] = ((1 - i) % n + n) % n;
      }
      with_group({shift2, reflect}, "brickwork_dihedral");
      break;
    }
    case EnsembleKind::graph:
      if (!spec.family) break;
      switch (*spec.family) {
        case Family::complete:
          s.blocks_ = {range(0, n - 1)};
          s.description_ = "hamming";
          break;
        case Family::star:
          s.blocks_ = {range(1, n - 1)};
          s.description_ = "star_points";
          break;
        case Family::linear:
          with_group({reversal(n)}, "reversal");
          break;
        case Family::circle: {
          Perm rot(static_cast<std::size_t>(n));
          for (int i = 0; i < n; ++i) rot[i] = (i + 1) % n;
          with_group({rot, reversal(n)}, "dihedral");
          break;
        }
        case Family::lollipop:
          if (c >= 2) s.blocks_ = {range(0, c - 2)};
          s.description_ = "candy_block";
          break;
        case Family::bridge:
          s.blocks_ = {range(0, c - 2), range(c + 1, n - 1)};
          if (n % 2 == 0) with_group({reversal(n)}, "bridge_blocks");
          else s.description_ = "bridge_blocks";
          break;
        case Family::hourglass:
          s.blocks_ = {range(0, c - 2), range(c, n - 1)};
          if (n % 2 == 1) with_group({reversal(n)}, "hourglass_blocks");
          else s.description_ = "hourglass_blocks";
          break;
        case Family::tree:
        case Family::random_regular:
          break;
      }
      break;
  }
  std::erase_if(s.blocks_, [](const std::vector<int>& b) { return b.size() < 2; });
  return s;
}

std::uint64_t SymmetryReducer::sort_blocks(std::uint64_t mask) const {
  for (const auto& block : blocks_) {
    int ones = 0;
    for (int site : block) {
      ones += static_cast<int>((mask >> site) & 1u);
      mask &= ~(std::uint64_t{1} << site);
    }
    // Pack the singlets onto the lowest sites of the block.
    for (int k = 0; k < ones; ++k) mask |= std::uint64_t{1} << block[k];
  }
  return mask;
}

std::uint64_t SymmetryReducer::canonical(std::uint64_t mask) const {
  if (!fixed_pairs_.empty()) {
    int doubles = 0, singles = 0;
    for (auto [i, j] : fixed_pairs_) {
      const int occ = static_cast<int>(((mask >> i) & 1u) + ((mask >> j) & 1u));
      doubles += occ == 2;
      singles += occ == 1;
    }
    std::vector<SitePair> pairs = fixed_pairs_;
    std::sort(pairs.begin(), pairs.end());
    std::uint64_t out = 0;
    std::size_t k = 0;
    for (int d = 0; d < doubles; ++d, ++k)
      out |= (std::uint64_t{1} << pairs[k].first) | (std::uint64_t{1} << pairs[k].second);
    for (int s = 0; s < singles; ++s, ++k) out |= std::uint64_t{1} << std::min(pairs[k].first, pairs[k].second);
    return out;
  }
  std::uint64_t best = ~std::uint64_t{0};
  for (const auto& p : perms_) best = std::min(best, sort_blocks(permute(mask, p)));
  return best;
}

std::vector<ExperimentClass> experiment_classes(const SymmetryReducer& sym, std::size_t cap) {
  const int n = sym.n();
  if (n > 30) throw ConfigError(fmt::format("class enumeration over 2^{} experiments is not supported", n));
  std::map<std::uint64_t, std::uint64_t> counts;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t m = 0; m < total; ++m) {
    ++counts[sym.canonical(m)];
    if (counts.size() > cap)
      throw ConfigError(fmt::format(
          "more than {} experiment classes for n={} (symmetry '{}'); evaluate selected experiments instead",
          cap, n, sym.description()));
  }
  std::vector<ExperimentClass> out;
  out.reserve(counts.size());
  for (auto [rep, mult] : counts) out.push_back({ExperimentVector(n, rep), mult});
  return out;
}

std::vector<ExperimentClass> experiment_classes(const EnsembleSpec& spec, std::size_t cap, bool use_symmetry) {
  return experiment_classes(use_symmetry ? SymmetryReducer::for_spec(spec) : SymmetryReducer::trivial(spec.n), cap);
}

}  // namespace twodesign
