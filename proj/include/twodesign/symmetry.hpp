#pragma once

// Experiment classes: orbits of bit strings a under the symmetries of an
// ensemble. Members of one class have identical quadratic forms.

#include "twodesign/architectures.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace twodesign {

struct ExperimentClass {
  ExperimentVector representative;  // canonical (smallest) member
  std::uint64_t multiplicity = 1;
};

/// Site symmetry group written as interchangeable site blocks times a finite
/// list of site permutations. The permutations must form a group that maps
/// blocks onto blocks. For the fixed-even permuted brickwork, classes are
/// instead labeled by how many fixed pairs hold 0, 1 or 2 singlets.
class SymmetryReducer {
 public:
  static SymmetryReducer trivial(int n);
  static SymmetryReducer for_spec(const EnsembleSpec& spec);

  std::uint64_t canonical(std::uint64_t mask) const;
  int n() const { return n_; }
  const std::string& description() const { return description_; }

 private:
  std::uint64_t sort_blocks(std::uint64_t mask) const;

  int n_ = 0;
  std::string description_ = "none";
  std::vector<std::vector<int>> blocks_;
  std::vector<std::vector<int>> perms_;  // includes the identity
  std::vector<SitePair> fixed_pairs_;
};

/// All classes of {0,1}^n, ordered by representative. Throws ConfigError if the
/// count exceeds cap.
std::vector<ExperimentClass> experiment_classes(const SymmetryReducer& sym, std::size_t cap);
std::vector<ExperimentClass> experiment_classes(const EnsembleSpec& spec, std::size_t cap,
                                                bool use_symmetry = true);

}  // namespace twodesign
