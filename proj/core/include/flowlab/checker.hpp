#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowlab/model.hpp"

namespace flowlab {

enum class Sampler { sobol, uniform_random, grid };

std::string sampler_name(Sampler s);

struct SampleRegion {
  Vec box_lo, box_hi;  // axis-aligned box, must lie inside the state domain
  long n_points = 256;
  int n_directions = 4;
  int n_times = 4;
  Sampler sampler = Sampler::sobol;
};

// One certified condition family. The witness is the flattened argmin tuple;
// its layout is fixed per condition_id:
//   mono_c1:             [t, x(d), y(d), h(d)]
//   mono_c0:             [t, x(d), y(d)]
//   exp_moment_v0 / v1:  [t, x(d)]
//   growth_coeff:        [x(d)]
//   growth_jacobian:     [x(d), y(d)]
//   jacobian_lipschitz:  [lambda, x1(d), x2(d), x3(d), x4(d)]
struct ConditionRecord {
  std::string condition_id;
  long n_evaluated = 0;
  double min_margin = kInf;
  std::vector<double> witness;
  bool passed = false;
};

struct CertifyOptions {
  double tol_cert = 0.0;  // passed <=> min_margin >= -tol_cert
  int n_threads = 0;      // 0 -> default_thread_count()
};

struct ConditionReport {
  std::vector<ConditionRecord> conditions;
  std::string model_name;  // optional caller-supplied label
  uint64_t seed = 0;
  SampleRegion region;
  double tol_cert = 0.0;
  long n_rejected = 0;  // draws rejected for leaving the domain (resampled)
  std::vector<std::string> model_flags;
  std::map<std::string, std::string> flags;
  bool all_passed = false;
};

/// Samples all condition families of the model hypotheses over the region and
/// reports the minimum margin and its witness per family. Deterministic in
/// (model, region, seed) and independent of the thread count. A certification
/// is a statement about the sampled points only (flagged in the report).
ConditionReport certify(const ModelSpec& model, const SampleRegion& region, uint64_t seed,
                        const CertifyOptions& options = {});

/// Re-evaluates a record's witness through the model margins; equals
/// min_margin up to 1e-12 (bitwise in practice).
double reevaluate_witness(const ModelSpec& model, const ConditionRecord& record);

/// Smallest constants making the sampled hypotheses hold, obtained by
/// rearranging each condition for its constant (suprema over the same sample
/// set that certify uses). alpha/beta fits use the worst-case time weight
/// e^{-alpha t} <= 1, so they are sufficient for every sampled t. The phi
/// entries are the constant offsets the two monotonicity families need.
/// Values are rounded up by 4 ulps so that substituting them back certifies.
struct FitResult {
  double c1_min = 0, c2_min = 0, c3_min = 0;
  double alpha0_min = 0, beta0_min = 0;
  double alpha1_min = 0, beta1_min = 0;
  double phi_c1_min = 0, phi_c0_min = 0;
  bool bounded = true;  // false when a rearrangement divides by a zero Lyapunov value
};

FitResult fit_constants(const ModelSpec& model, const SampleRegion& region, uint64_t seed);

/// A copy of the model with c1..c3 replaced by the fitted values, beta_i
/// raised to the fitted requirement and phi raised pointwise to the fitted
/// monotonicity offsets. certify(apply_fit(m, fit_constants(m, r, s)), r, s)
/// passes by construction.
ModelSpec apply_fit(const ModelSpec& model, const FitResult& fit);

/// Spot-check of the convexity invariant of the state domain: for sampled
/// pairs and lambda in {1/4, 1/2, 3/4}, the combination stays inside.
bool sampled_convexity_ok(const ModelSpec& model, const SampleRegion& region, uint64_t seed,
                          long n_pairs);

}  // namespace flowlab
