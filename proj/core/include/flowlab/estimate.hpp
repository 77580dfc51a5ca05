#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flowlab/model.hpp"
#include "flowlab/sim.hpp"

namespace flowlab {

/// (mean |sample|^r)^{1/r} over the columns; r = inf gives the sample maximum.
/// Computed in scaled form so large r does not overflow.
double empirical_norm(const Mat& sample_columns, double r);
double empirical_norm(const std::vector<double>& samples, double r);

struct ConfidenceInterval {
  double lo = kNaN, hi = kNaN;
  double level = 0.99;
};

// Empirical-vs-closed-form comparison of one bound. rhs_bound is always a
// pure function of the model constants and the echoed inputs; satisfied uses
// the upper end of the 99% CI of the left side (a Monte Carlo check can only
// falsify at confidence, never prove).
struct BoundReport {
  std::string bound_id;
  double lhs = kNaN;
  ConfidenceInterval lhs_ci;
  double rhs = kNaN;
  bool satisfied = false;
  bool overflow = false;
  double log_lhs = kNaN;  // set when the left side exceeds 1e300
  long n_effective = 0;
  std::map<std::string, std::string> inputs;
};

/// E[V(X_tend)] <= e^{alpha (tend - s)} V(x0) (CLT interval).
BoundReport check_lyapunov_bound(const ModelSpec& model, const PathEnsemble& ensemble,
                                 int sim_anchor, WhichV which, double alpha);

/// Exponential-moment estimate: mean exp(V(X_T)/e^{aT} + int vbar/e^{ar})
/// against exp(V(x)/e^{as} + int beta e^{-ar} dr); bootstrap interval,
/// log-sum-exp in the heavy-tail regime. `which` selects (V_i, alpha_i,
/// beta_i); the i = 1 leg carries the vbar path integral.
BoundReport check_exp_moment_bound(const ModelSpec& model, const PathEnsemble& ensemble,
                                   int sim_anchor, WhichV which, double s);

/// ||1 + V0(X_t)||_{L^r} <= e^{a0 t}(r + int_s^t beta0 e^{-a0 u} du + e^{-a0 s} V0(x)).
BoundReport check_poly_moment_bound(const ModelSpec& model, const PathEnsemble& ensemble,
                                    int sim_anchor, double s, double t, double r_exp);

/// Four coupled processes: L^q norm of the exponential path functional against
/// the product of start-value exponential norms.
BoundReport check_multiple_exp_bound(const ModelSpec& model, const PathEnsemble& ensemble,
                                     const std::array<int, 4>& sim_anchors, double s, double q0,
                                     double q1);

struct GronwallParams {
  double p = 4, q = 8.0 / 3.0, r = 8, delta = 1;  // 1/q = 1/p + 1/r
};

/// Stochastic Gronwall bound on the coupled difference Y = X^x - X^y with the
/// pathwise (alpha_t, beta_t) read off the C^0 monotonicity decomposition;
/// both sides are Monte Carlo, satisfied uses a one-sided paired-bootstrap
/// interval on lhs - rhs.
BoundReport check_gronwall(const ModelSpec& model, const PathEnsemble& ensemble, int anchor_x,
                           int anchor_y, const GronwallParams& params, long record_index = -1);

struct AnchorTime {
  int sim_anchor = 0;
  long record = 0;
};

/// Flow Hoelder estimate between two (s, t, x) anchors at exponent pq/(p+q);
/// one report per pair. The bound's unsubscripted alpha parameter follows
/// model.alpha_reading (per-index by default) and the time weighting flag.
std::vector<BoundReport> check_flow_holder(const ModelSpec& model, const PathEnsemble& ensemble,
                                           const std::vector<std::pair<AnchorTime, AnchorTime>>& pairs,
                                           double p, double q);

/// ||D_t||_{L^{pq/(p+q)}} <= |v| exp(int_s^t phi + sum beta_i/(q_i e^{a_i r}) dr
///                                   + sum V_i(x)/(q_i e^{a_i s})).
BoundReport check_derivative_moment_bound(const ModelSpec& model,
                                          const DerivativeEnsemble& derivative,
                                          long record_index = -1);

struct KolmogorovEntry {
  double radius = 0;
  long n_pairs = 0;
  double sup_quotient = 0;
  double mean_quotient = 0;
};

struct KolmogorovRow {
  double distance = 0;   // |ds|^at + |dt|^at + |dx|^as
  double lp_norm = 0;    // empirical L^p distance of the two lattice nodes
  double quotient = 0;
};

struct KolmogorovTable {
  double exponent = 2;
  double alpha_time = 0.5, alpha_space = 1.0;
  std::vector<KolmogorovEntry> balls;
  std::vector<KolmogorovRow> rows;  // all node pairs of the largest ball
};

/// Empirical Hoelder-quotient table over the (s, t, x) lattice spanned by the
/// ensemble anchors and record times; boundedness under refinement is the
/// empirical proxy for the Kolmogorov-Chentsov moment condition.
KolmogorovTable kolmogorov_table(const PathEnsemble& ensemble, double p, double alpha_time,
                                 double alpha_space, const std::vector<double>& radii = {1, 2, 4});

struct GradientAssemblyReport {
  std::vector<double> scales;
  std::vector<double> residual_l2;   // per scale
  double fitted_order = 0;           // log-log slope
  bool pass = false;
};

/// Telescoping check that basis variational processes assemble the gradient:
/// residual X^{x+v} - X^x - sum_i <v, e_i> D^{e_i} over a ladder of |v|,
/// fitted order >= order_tol passes (2 = first-order Taylor accuracy).
GradientAssemblyReport gradient_assembly_check(const ModelSpec& model, double s, const Vec& x,
                                               const Vec& v_unit,
                                               const std::vector<double>& scales,
                                               double time_step, long n_paths, uint64_t seed,
                                               Scheme scheme, double t_end, double order_tol);

/// int_s^t beta e^{-alpha r} dr, exact.
double integral_exp_decay(double beta, double alpha, double s, double t);

/// int_s^T beta (1 - (r-s)/(T-s)) e^{-alpha r} dr, exact.
double integral_exp_decay_tent(double beta, double alpha, double s, double T);

/// int_s^t phi(r) dr: exact when phi is constant, trapezoid on 1024 panels
/// otherwise (deterministic, so the right sides stay reproducible).
double integral_phi(const ModelSpec& model, double s, double t);

}  // namespace flowlab
