#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowlab/model.hpp"
#include "flowlab/sim.hpp"

namespace flowlab {

/// Closed-form references for linear models; absent members are left empty.
struct Oracle {
  std::function<Vec(double s, double t, const Vec& x)> flow_mean;
  std::function<Vec(double s, double t, const Vec& x)> flow_variance;  // componentwise
  // Deterministic derivative factor: D^v_{s,t} = factor(s,t) * v (OU-type models).
  std::function<double(double s, double t)> derivative_factor;
  // E[exp(lambda * |X_t|^2)] for a deterministic start at x (Gaussian models).
  std::function<double(double lambda, double s, double t, const Vec& x)> exp_moment;
  bool derivative_equals_flow_ratio = false;  // linear flows: D = (X_t / x) v, pathwise
};

struct NamedModel {
  std::string name;
  std::string description;
  ModelSpec spec;
  Vec box_lo, box_hi;  // documented certification box
  bool certified = true;
  Scheme default_scheme = Scheme::euler_maruyama;  // tamed for superlinear drift
  Oracle oracle;
  // Frozen fit_constants regression values on the documented box (seed 20240801);
  // reproduced bit-exactly by the checker regression test.
  std::map<std::string, double> fit_regression;
};

/// Built-ins: "ou", "gbm", "ginzburg_landau", "double_well", "lorenz_stochastic",
/// "cir". Throws ConfigError listing the known names on an unknown name.
const NamedModel& model_by_name(const std::string& name);

std::vector<std::string> model_names();

/// Human-readable summary: equations, constants, certified box, oracle
/// availability, frozen fit regression values.
std::string describe(const NamedModel& model);

}  // namespace flowlab
