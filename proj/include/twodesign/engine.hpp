#pragma once

// Quadratic forms <Psi(a)| vec(Phi)^steps |Psi(a)>, multiplicative and
// collisional errors, experiment sweeps and interpolated design depths.
//
// Graph ensembles evolve the full 2^n coefficient vector under the
// edge-averaged step. Layered ensembles (brickworks and matchings) use the fact
// that after a gate acts, its two sites carry equal labels: the state is stored
// with one label per block of the most recent layer.

#include "twodesign/architectures.hpp"
#include "twodesign/symmetry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace twodesign {

enum class ErrorKind { multiplicative, collisional };

struct EngineOptions {
  int realizations = 100;        // matching-based ensembles
  std::uint64_t seed = 0;        // master seed for realization streams
  int threads = 1;
  std::size_t class_cap = std::size_t{1} << 20;
  bool use_symmetry = true;
  double prune_factor = 0.1;     // classes below prune_factor * eps leave the depth search
  int max_steps = 100000;
  std::size_t chunk = 16;        // classes per work unit
  bool full_space_layers = false;  // evolve layered ensembles in the 2^n basis (testing)
};

struct ErrorPoint {
  double value = 0;
  ExperimentVector argmax;
  double stat_err = 0;     // zero for deterministic ensembles
  bool guaranteed = true;  // PSD vectorization known at this step count
};

struct ErrorCurve {
  std::vector<int> steps;
  std::vector<double> mult_error;
  std::vector<double> coll_error;
  std::vector<double> mult_stat_err;
  std::vector<double> coll_stat_err;
  std::vector<ExperimentVector> argmax;
  std::vector<char> guaranteed;
};

struct SweepResult {
  std::vector<int> steps;
  std::vector<ExperimentClass> classes;
  std::string symmetry;
  Eigen::MatrixXd error;     // classes x steps, parity weighted
  Eigen::MatrixXd stat_err;  // classes x steps
  std::vector<std::size_t> argmax;  // class index per step
};

struct DepthResult {
  double epsilon = 0;
  double depth = 0;  // log-interpolated
  ErrorKind kind = ErrorKind::multiplicative;
  int lower_step = 0;
  int upper_step = 0;
  double lower_error = 0;
  double upper_error = 0;
  ExperimentVector lower_argmax;
  ExperimentVector upper_argmax;
  double stat_err = 0;  // at upper_step
  bool guaranteed = true;
};

/// Whether maximizing over product experiments is backed by a PSD
/// vectorization at this step count (graphs always, brickworks at odd depth).
bool step_guaranteed(const EnsembleSpec& spec, int steps);

/// Mean over realizations (single value for deterministic ensembles).
double quadratic_form(const EnsembleSpec& spec, const ExperimentVector& a, int steps,
                      const EngineOptions& opts = {});

/// Quadratic forms of several experiments at steps 0..max_step.
/// Result is experiments x (max_step + 1).
Eigen::MatrixXd quadratic_form_trajectories(const EnsembleSpec& spec,
                                            const std::vector<ExperimentVector>& experiments,
                                            int max_step, const EngineOptions& opts = {});

ErrorPoint multiplicative_error(const EnsembleSpec& spec, int steps, const EngineOptions& opts = {});
ErrorPoint collisional_error(const EnsembleSpec& spec, int steps, const EngineOptions& opts = {});

ErrorCurve error_curve(const EnsembleSpec& spec, const std::vector<int>& steps,
                       const EngineOptions& opts = {});

SweepResult experiment_sweep(const EnsembleSpec& spec, const std::vector<int>& steps,
                             const EngineOptions& opts = {});

DepthResult design_depth(const EnsembleSpec& spec, double epsilon, ErrorKind kind,
                         const EngineOptions& opts = {});

/// Depth at which one fixed experiment's error falls to epsilon.
DepthResult experiment_depth(const EnsembleSpec& spec, const ExperimentVector& a, double epsilon,
                             const EngineOptions& opts = {});

/// Error at a fixed layer count for a matching-based ensemble: (mean, std_err).
std::pair<double, double> sampled_error(const EnsembleSpec& spec, int layers, int realizations,
                                        std::uint64_t master_seed, const EngineOptions& opts = {});

/// Step where log(error) crosses log(epsilon), linear between the brackets.
/// Returns upper when upper_error <= 0.
double interpolate_log_depth(int lower, double lower_error, int upper, double upper_error,
                             double epsilon);

/// One edge-averaged graph step: x + (1/|E|) sum_e (G_e x - x).
void graph_step_inplace(CommutantState<double>& state, const SiteGraph& g,
                        Eigen::VectorXd& scratch);

}  // namespace twodesign
