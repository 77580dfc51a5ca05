#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowlab/common.hpp"

namespace flowlab {

// Coefficient callbacks write into caller-owned buffers so the simulation hot
// loop stays allocation-free. All callbacks must be pure and reentrant: a
// ModelSpec is immutable after construction and shared freely across threads.
using VectorField = std::function<void(const Vec& x, Vec& out)>;            // mu: R^d -> R^d
using MatrixField = std::function<void(const Vec& x, Mat& out)>;            // sigma: R^d -> R^{d x m}
using JacobianField = std::function<void(const Vec& x, Mat& out)>;          // mu': R^d -> R^{d x d}
using DirectionalJacobian =
    std::function<void(const Vec& x, const Vec& h, Mat& out)>;              // sigma'(x) h: R^{d x m}
using DomainPredicate = std::function<bool(const Vec& x)>;
using ScalarField = std::function<double(const Vec& x)>;
using GradientField = std::function<void(const Vec& x, Vec& out)>;
using HessianField = std::function<void(const Vec& x, Mat& out)>;
using TimeStateField = std::function<double(double t, const Vec& x)>;       // \bar V(t, x)
using TimeFunction = std::function<double(double t)>;

struct LyapunovTriple {
  ScalarField value;
  GradientField gradient;
  HessianField hessian;
};

enum class WhichV { V0, V1 };

/// `horizon` weighs the monotonicity right side by 1/(2 q0 T e^{a0 t});
/// `remaining_time` replaces T by (T - t) in both Lyapunov weights.
enum class TimeWeighting { horizon, remaining_time };

/// How to read the unsubscripted alpha appearing in the flow Hoelder bound:
/// per_index substitutes alpha_i wherever the weighted V_i sits, alpha0 reads
/// every occurrence as alpha_0.
enum class AlphaReading { per_index, alpha0 };

struct ModelSpec {
  int dim_state = 1;   // d
  int dim_noise = 1;   // m
  double horizon = 1;  // T, time units

  VectorField drift;
  MatrixField diffusion;
  JacobianField drift_jacobian;
  DirectionalJacobian diffusion_jacobian;

  DomainPredicate domain_O;      // open superset; coefficients are defined here
  DomainPredicate domain_cal_O;  // convex Borel subset; simulation and checks live here

  LyapunovTriple lyapunov_v0;
  LyapunovTriple lyapunov_v1;
  TimeStateField vbar;  // \bar V(t,x); time-independent models ignore t
  TimeFunction phi;     // phi(t) >= 0, integrable on [0,T]
  std::optional<double> phi_constant;  // set when phi is constant (exact time integrals)

  double alpha0 = 0, alpha1 = 0;  // >= 0
  double beta0 = 0, beta1 = 0;
  double p_exp = 2;      // p in [2, inf)
  double q_exp = kInf;   // q in (2p, inf]
  double q0 = kInf, q1 = kInf;  // 1/q0 + 1/q1 = 1/q (1/inf = 0)
  double delta = 0.5;    // > 0
  double gamma = 1;      // > 0
  double c1 = 0, c2 = 0, c3 = 0;

  TimeWeighting time_weighting = TimeWeighting::horizon;
  AlphaReading alpha_reading = AlphaReading::per_index;

  int quadrature_nodes = 8;  // Gauss-Legendre nodes for segment-averaged Jacobians

  double lp_exponent() const { return lp_combine(p_exp, q_exp); }

  /// Throws ConfigError on hard violations (exponent relations, signs) and
  /// returns soft flags, e.g. when pq/(p+q) <= 2d+6 so the differentiability
  /// conclusion is out of reach even though the moment machinery applies.
  std::vector<std::string> validate() const;
};

// -- pointwise hypothesis functionals ---------------------------------------

/// <grad V(x), mu(x)> + 1/2 tr(sigma sigma^T Hess V)(x).
double generator_apply(const ModelSpec& model, WhichV which, const Vec& x);

/// Gauss-Legendre approximation of int_0^1 mu'(l x + (1-l) y) dl; exact for
/// polynomial Jacobians of degree <= 2*nodes - 1 along the segment.
Mat averaged_drift_jacobian(const ModelSpec& model, const Vec& x, const Vec& y, int nodes = 0);

/// Same for sigma', returned as the (d*m) x d matrix of the flattened linear
/// map h |-> vec(sigma' h) (column-major flattening).
Mat averaged_diffusion_jacobian(const ModelSpec& model, const Vec& x, const Vec& y, int nodes = 0);

/// Margin (right minus left side) of the C^1 local monotonicity hypothesis at
/// (t, x, y, h); nonnegative means the hypothesis holds at this tuple. The
/// delta contribution enters as the operator shift int mu' dl + delta*Id.
double monotonicity_margin_c1(const ModelSpec& model, double t, const Vec& x, const Vec& y,
                              const Vec& h);

/// Margin of the derived C^0 monotonicity condition on coefficient differences.
double monotonicity_margin_c0(const ModelSpec& model, double t, const Vec& x, const Vec& y);

/// Margin of the Lyapunov exponential-moment condition for V_i (i in {0,1});
/// the i = 1 condition carries the extra \bar V(t,x) term.
double exp_moment_margin(const ModelSpec& model, int i, double t, const Vec& x);

struct GrowthMargins {
  double coeff_growth;        // c1 (1+V0(x))^g - max(|mu|, |sigma|_F)
  double jacobian_growth;     // c2 (2+V0(x)+V0(y))^g - max op-norms of averaged Jacobians
  double jacobian_lipschitz;  // quadruple condition at lambda=1, (x, x, y, y)
};
GrowthMargins growth_margins(const ModelSpec& model, const Vec& x, const Vec& y);

/// Margin of the quadruple Jacobian-Lipschitz condition at (x1..x4, lambda).
double jacobian_lipschitz_margin(const ModelSpec& model, const Vec& x1, const Vec& x2,
                                 const Vec& x3, const Vec& x4, double lambda);

/// Right side of both monotonicity conditions divided by |h|^2:
/// phi(t) + Lyapunov weights; also the pathwise alpha_t of the stochastic
/// Gronwall decomposition for coupled differences.
double monotonicity_rhs_density(const ModelSpec& model, double t, const Vec& x, const Vec& y);

/// Operator norm via power iteration on J^T J (50 iterations, tol 1e-10).
double operator_norm(const Mat& j);

// -- derivative coherence ----------------------------------------------------

struct JacobianValidation {
  double max_rel_error_drift = 0;
  double max_rel_error_diffusion = 0;
  double max_rel_error_gradient_v0 = 0;
  double max_rel_error_hessian_v0 = 0;
  double max_rel_error_gradient_v1 = 0;
  double max_rel_error_hessian_v1 = 0;
};

/// Central finite differences (step h) of the supplied fields against the
/// supplied derivatives at quasi-random points of [lo, hi].
JacobianValidation validate_jacobians(const ModelSpec& model, const Vec& lo, const Vec& hi,
                                      int n_points, double step = 1e-5);

}  // namespace flowlab
