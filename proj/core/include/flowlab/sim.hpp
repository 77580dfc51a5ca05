#pragma once

#include <cstdint>
#include <vector>

#include "flowlab/model.hpp"

namespace flowlab {

enum class Scheme { euler_maruyama, tamed_euler };
enum class ExitPolicy { freeze, reject };

std::string scheme_name(Scheme s);
std::string exit_policy_name(ExitPolicy p);

struct Anchor {
  double s;  // start time, grid aligned
  Vec x;     // start point inside the state domain
};

/// Perturbation ladder applied to every anchor: starts x + y v for each y.
struct DirectionSpec {
  Vec v;                        // unit direction
  std::vector<double> y_values; // nonzero offsets
};

struct FlowGrid {
  std::vector<Anchor> anchors;
  std::vector<DirectionSpec> directions;
  double time_step = 1.0 / 1024.0;
  Scheme scheme = Scheme::euler_maruyama;
  ExitPolicy exit_policy = ExitPolicy::freeze;
  long n_paths = 1000;
  std::vector<double> record_times;  // sorted, in [max anchor s, T]
  int n_threads = 0;                 // 0 -> default_thread_count()
};

/// One simulated start: a base anchor (direction = -1) or a perturbed start
/// x + y v (direction, y_index into the ladder).
struct SimAnchor {
  int base = 0;
  int direction = -1;
  int y_index = -1;
  long start_step = 0;
  double s = 0;
  Vec x0;
};

// Coupled ensemble: every simulated start sees the same Brownian increments
// per path index (the increment at step k is keyed by (seed, path, k) alone),
// so differences across anchors are pathwise meaningful.
struct PathEnsemble {
  FlowGrid grid;
  uint64_t seed = 0;
  int dim = 0;
  std::vector<SimAnchor> sim_anchors;
  std::vector<long> record_steps;
  std::vector<Mat> states;                   // [anchor * n_records + record], d x n_paths
  std::vector<std::vector<long>> exit_step;  // [anchor][path]; -1 = stayed inside

  long n_records() const { return static_cast<long>(record_steps.size()); }
  const Mat& state(int sim_anchor, long record) const {
    return states[static_cast<size_t>(sim_anchor) * static_cast<size_t>(n_records()) +
                  static_cast<size_t>(record)];
  }
  /// Index of the simulated start for (base, direction, y_index); -1 if absent.
  int find_anchor(int base, int direction = -1, int y_index = -1) const;
  long n_exited(int sim_anchor) const;
};

struct DerivativeEnsemble {
  enum class Mode { variational, quotient };
  Mode mode = Mode::variational;
  int base_anchor = 0;  // sim-anchor index in the source ensemble
  Vec v;
  double y = 0;  // 0 in variational mode
  Vec x0;        // start point of the underlying flow anchor
  std::vector<long> record_steps;
  std::vector<double> record_times;
  double start_time = 0;
  std::vector<Mat> states;       // per record, d x n_paths
  std::vector<long> exit_step;   // union of the participating anchors' exits
  long n_paths = 0;

  const Mat& state(long record) const { return states[static_cast<size_t>(record)]; }
};

/// Integrates every anchor (and every perturbed start) of the grid on shared
/// Brownian paths. Deterministic in (model, grid, seed) regardless of thread
/// count or anchor order. Paths that step outside the state domain are frozen
/// at the last inside state and marked (reject policy only changes how
/// estimators treat them). A non-finite state raises SimulationError.
PathEnsemble simulate_flow(const ModelSpec& model, const FlowGrid& grid, uint64_t seed);

/// First-variation process along the flow of `sim_anchor`, started at v at the
/// anchor time, propagated with the exact derivative of the one-step scheme
/// map on the replayed noise (plain mu'/sigma' increments for Euler-Maruyama,
/// the tamed increment's derivative for the tamed scheme).
DerivativeEnsemble simulate_variational(const ModelSpec& model, const PathEnsemble& ensemble,
                                        int sim_anchor, const Vec& v);

/// Difference quotient (X^{x+yv} - X^x)/y on the stored record states; an
/// arithmetic identity on the coupled ensemble, no extra simulation.
DerivativeEnsemble difference_quotient(const PathEnsemble& ensemble, int base_anchor,
                                       int direction, int y_index);

/// Single-path replay from an arbitrary grid-aligned start (the low-level
/// stepper behind simulate_flow; exposed for flow-property and replay checks).
struct SinglePathResult {
  std::vector<Vec> states;  // one per record time
  long exit_step = -1;
};
SinglePathResult simulate_one_path(const ModelSpec& model, Scheme scheme, double time_step,
                                   uint64_t seed, long path, double s, const Vec& x0,
                                   const std::vector<double>& record_times);

/// The Brownian increment of step k for a path (bitwise replayable).
Vec brownian_increment(const ModelSpec& model, double time_step, uint64_t seed, long path,
                       long step);

}  // namespace flowlab
