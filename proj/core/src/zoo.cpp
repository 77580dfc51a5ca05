#include "flowlab/zoo.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

namespace flowlab {

namespace {

DomainPredicate whole_space() {
  return [](const Vec&) { return true; };
}

LyapunovTriple zero_triple() {
  LyapunovTriple t;
  t.value = [](const Vec&) { return 0.0; };
  t.gradient = [](const Vec& x, Vec& out) { out.setZero(x.size()); };
  t.hessian = [](const Vec& x, Mat& out) { out = Mat::Zero(x.size(), x.size()); };
  return t;
}

/// V(x) = scale * |x|^2.
LyapunovTriple quadratic_triple(double scale) {
  LyapunovTriple t;
  t.value = [scale](const Vec& x) { return scale * x.squaredNorm(); };
  t.gradient = [scale](const Vec& x, Vec& out) { out = 2.0 * scale * x; };
  t.hessian = [scale](const Vec& x, Mat& out) {
    out = 2.0 * scale * Mat::Identity(x.size(), x.size());
  };
  return t;
}

TimeStateField zero_vbar() {
  return [](double, const Vec&) { return 0.0; };
}

void set_constant_phi(ModelSpec& spec, double value) {
  spec.phi = [value](double) { return value; };
  spec.phi_constant = value;
}

DirectionalJacobian zero_diffusion_jacobian() {
  return [](const Vec& x, const Vec&, Mat& out) { out = Mat::Zero(x.size(), x.size()); };
}

ModelSpec base_spec(int d, int m) {
  ModelSpec spec;
  spec.dim_state = d;
  spec.dim_noise = m;
  spec.horizon = 1.0;
  spec.domain_O = whole_space();
  spec.domain_cal_O = whole_space();
  spec.lyapunov_v1 = zero_triple();
  spec.vbar = zero_vbar();
  return spec;
}

NamedModel make_ou() {
  NamedModel nm;
  nm.name = "ou";
  nm.description = "Ornstein-Uhlenbeck: dX = -X dt + dW (d = m = 1)";
  ModelSpec spec = base_spec(1, 1);
  spec.drift = [](const Vec& x, Vec& out) { out = -x; };
  spec.diffusion = [](const Vec& x, Mat& out) { out = Mat::Identity(x.size(), x.size()); };
  spec.drift_jacobian = [](const Vec& x, Mat& out) {
    out = -Mat::Identity(x.size(), x.size());
  };
  spec.diffusion_jacobian = zero_diffusion_jacobian();
  spec.lyapunov_v0 = quadratic_triple(1.0);
  set_constant_phi(spec, 0.0);
  spec.alpha0 = 0.0;
  spec.beta0 = 1.5;
  spec.p_exp = 2;
  spec.q_exp = kInf;
  spec.q0 = kInf;
  spec.q1 = kInf;
  spec.delta = 0.5;
  spec.gamma = 1.0;
  spec.c1 = 2;
  spec.c2 = 2;
  spec.c3 = 2;
  nm.spec = std::move(spec);
  nm.box_lo = Vec::Constant(1, -5.0);
  nm.box_hi = Vec::Constant(1, 5.0);

  nm.oracle.flow_mean = [](double s, double t, const Vec& x) -> Vec {
    return x * std::exp(-(t - s));
  };
  nm.oracle.flow_variance = [](double s, double t, const Vec& x) -> Vec {
    return Vec::Constant(x.size(), 0.5 * (1.0 - std::exp(-2.0 * (t - s))));
  };
  nm.oracle.derivative_factor = [](double s, double t) { return std::exp(-(t - s)); };
  nm.oracle.exp_moment = [](double lambda, double s, double t, const Vec& x) {
    // X_t ~ N(x e^{-dt}, (1 - e^{-2 dt})/2); E exp(l X^2) for l var < 1/2.
    const double dt = t - s;
    const double mean = x[0] * std::exp(-dt);
    const double var = 0.5 * (1.0 - std::exp(-2.0 * dt));
    const double denom = 1.0 - 2.0 * lambda * var;
    if (denom <= 0.0) return kInf;
    return std::exp(lambda * mean * mean / denom) / std::sqrt(denom);
  };
  return nm;
}

NamedModel make_gbm() {
  static constexpr double a = 0.05, b = 0.2;
  NamedModel nm;
  nm.name = "gbm";
  nm.description = "geometric Brownian motion: dX = 0.05 X dt + 0.2 X dW (d = m = 1)";
  ModelSpec spec = base_spec(1, 1);
  spec.drift = [](const Vec& x, Vec& out) { out = a * x; };
  spec.diffusion = [](const Vec& x, Mat& out) { out = b * x.asDiagonal().toDenseMatrix(); };
  spec.drift_jacobian = [](const Vec& x, Mat& out) {
    out = a * Mat::Identity(x.size(), x.size());
  };
  spec.diffusion_jacobian = [](const Vec& x, const Vec& h, Mat& out) {
    out = b * h.asDiagonal().toDenseMatrix();
    (void)x;
  };
  spec.lyapunov_v0 = quadratic_triple(0.02);
  set_constant_phi(spec, 1.0);
  spec.alpha0 = 1.0;
  spec.beta0 = 1.0;
  spec.p_exp = 2;
  spec.q_exp = kInf;
  spec.q0 = kInf;
  spec.q1 = kInf;
  spec.delta = 0.5;
  spec.gamma = 1.0;
  spec.c1 = 1;
  spec.c2 = 1;
  spec.c3 = 1;
  nm.spec = std::move(spec);
  nm.box_lo = Vec::Constant(1, -5.0);
  nm.box_hi = Vec::Constant(1, 5.0);

  nm.oracle.flow_mean = [](double s, double t, const Vec& x) -> Vec {
    return x * std::exp(a * (t - s));
  };
  nm.oracle.flow_variance = [](double s, double t, const Vec& x) -> Vec {
    const double dt = t - s;
    return x.array().square() * std::exp(2.0 * a * dt) * (std::exp(b * b * dt) - 1.0);
  };
  nm.oracle.derivative_equals_flow_ratio = true;
  return nm;
}

NamedModel make_ginzburg_landau() {
  NamedModel nm;
  nm.name = "ginzburg_landau";
  nm.description = "Ginzburg-Landau: dX = (X - X^3) dt + 0.5 dW (d = m = 1, superlinear drift)";
  ModelSpec spec = base_spec(1, 1);
  spec.drift = [](const Vec& x, Vec& out) { out = x.array() - x.array().cube(); };
  spec.diffusion = [](const Vec& x, Mat& out) {
    out = 0.5 * Mat::Identity(x.size(), x.size());
  };
  spec.drift_jacobian = [](const Vec& x, Mat& out) {
    out = Mat::Zero(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i, i) = 1.0 - 3.0 * x[i] * x[i];
  };
  spec.diffusion_jacobian = zero_diffusion_jacobian();
  spec.lyapunov_v0 = quadratic_triple(1.0);
  set_constant_phi(spec, 1.5);
  spec.alpha0 = 3.0;
  spec.beta0 = 1.0;
  spec.p_exp = 3;
  spec.q_exp = 8;
  spec.q0 = 16;
  spec.q1 = 16;
  spec.delta = 0.5;
  spec.gamma = 1.5;
  spec.c1 = 2;
  spec.c2 = 1;
  spec.c3 = 1;
  nm.spec = std::move(spec);
  nm.box_lo = Vec::Constant(1, -3.0);
  nm.box_hi = Vec::Constant(1, 3.0);
  nm.default_scheme = Scheme::tamed_euler;
  // fit_constants on the documented box, 256 sobol points, seed 20240801
  nm.fit_regression = {
      {"c1_min", 0.75845020827080356},    {"c2_min", 0.35237606395272397},
      {"c3_min", 0.35300266439913874},    {"alpha0_min", 0.050221054096345898},
      {"beta0_min", 0.24999514705180115}, {"alpha1_min", 0.0},
      {"beta1_min", 0.0},                 {"phi_c1_min", 1.4383921708895693},
      {"phi_c0_min", 0.99182390012694654},
  };
  return nm;
}

NamedModel make_double_well() {
  NamedModel nm;
  nm.name = "double_well";
  nm.description =
      "componentwise Ginzburg-Landau in d = 2: dX_i = (X_i - X_i^3) dt + 0.5 dW_i";
  ModelSpec spec = base_spec(2, 2);
  spec.drift = [](const Vec& x, Vec& out) { out = x.array() - x.array().cube(); };
  spec.diffusion = [](const Vec& x, Mat& out) {
    out = 0.5 * Mat::Identity(x.size(), x.size());
  };
  spec.drift_jacobian = [](const Vec& x, Mat& out) {
    out = Mat::Zero(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i, i) = 1.0 - 3.0 * x[i] * x[i];
  };
  spec.diffusion_jacobian = zero_diffusion_jacobian();
  spec.lyapunov_v0 = quadratic_triple(1.0);
  set_constant_phi(spec, 1.5);
  spec.alpha0 = 3.0;
  spec.beta0 = 1.0;
  spec.p_exp = 3;
  spec.q_exp = 10;
  spec.q0 = 20;
  spec.q1 = 20;
  spec.delta = 0.5;
  spec.gamma = 1.5;
  spec.c1 = 2;
  spec.c2 = 1;
  spec.c3 = 1;
  nm.spec = std::move(spec);
  nm.box_lo = Vec::Constant(2, -3.0);
  nm.box_hi = Vec::Constant(2, 3.0);
  nm.default_scheme = Scheme::tamed_euler;
  return nm;
}

NamedModel make_lorenz() {
  static constexpr double sig = 10.0, rho = 28.0, b = 8.0 / 3.0, noise = 0.3;
  NamedModel nm;
  nm.name = "lorenz_stochastic";
  nm.description = "Lorenz-63 with additive noise 0.3 (d = m = 3)";
  ModelSpec spec = base_spec(3, 3);
  spec.drift = [](const Vec& x, Vec& out) {
    out.resize(3);
    out[0] = sig * (x[1] - x[0]);
    out[1] = x[0] * (rho - x[2]) - x[1];
    out[2] = x[0] * x[1] - b * x[2];
  };
  spec.diffusion = [](const Vec&, Mat& out) { out = noise * Mat::Identity(3, 3); };
  spec.drift_jacobian = [](const Vec& x, Mat& out) {
    out.resize(3, 3);
    out << -sig, sig, 0.0, rho - x[2], -1.0, -x[0], x[1], x[0], -b;
  };
  spec.diffusion_jacobian = [](const Vec&, const Vec&, Mat& out) { out = Mat::Zero(3, 3); };
  spec.lyapunov_v0 = quadratic_triple(0.01);
  set_constant_phi(spec, 41.0);
  spec.alpha0 = 37.0;
  spec.beta0 = 1.0;
  spec.p_exp = 2;
  spec.q_exp = kInf;
  spec.q0 = kInf;
  spec.q1 = kInf;
  spec.delta = 0.5;
  spec.gamma = 1.0;
  spec.c1 = 170;
  spec.c2 = 25;
  spec.c3 = 1;
  nm.spec = std::move(spec);
  nm.box_lo = Vec::Constant(3, -30.0);
  nm.box_hi = Vec::Constant(3, 30.0);
  nm.default_scheme = Scheme::tamed_euler;
  return nm;
}

NamedModel make_cir() {
  static constexpr double kappa = 1.0, theta = 1.0, xi = 0.5;
  NamedModel nm;
  nm.name = "cir";
  nm.description =
      "Cox-Ingersoll-Ross: dX = (1 - X) dt + 0.5 sqrt(X) dW on (0, inf); boundary-behavior "
      "stressor, not certified (sigma' blows up at 0)";
  ModelSpec spec = base_spec(1, 1);
  spec.drift = [](const Vec& x, Vec& out) { out = kappa * (theta - x.array()).matrix(); };
  spec.diffusion = [](const Vec& x, Mat& out) {
    out.resize(1, 1);
    out(0, 0) = xi * std::sqrt(std::max(x[0], 0.0));
  };
  spec.drift_jacobian = [](const Vec&, Mat& out) {
    out.resize(1, 1);
    out(0, 0) = -kappa;
  };
  spec.diffusion_jacobian = [](const Vec& x, const Vec& h, Mat& out) {
    out.resize(1, 1);
    out(0, 0) = x[0] > 0.0 ? 0.5 * xi / std::sqrt(x[0]) * h[0] : kInf;
  };
  spec.domain_cal_O = [](const Vec& x) { return x[0] > 0.0; };
  spec.lyapunov_v0 = quadratic_triple(1.0);
  set_constant_phi(spec, 1.0);
  spec.alpha0 = 3.0;
  spec.beta0 = 2.0;
  spec.p_exp = 2;
  spec.q_exp = kInf;
  spec.q0 = kInf;
  spec.q1 = kInf;
  spec.delta = 0.5;
  spec.gamma = 1.0;
  spec.c1 = 2;
  spec.c2 = 5;
  spec.c3 = 5;
  nm.spec = std::move(spec);
  nm.box_lo = Vec::Constant(1, 0.05);
  nm.box_hi = Vec::Constant(1, 5.0);
  nm.certified = false;

  nm.oracle.flow_mean = [](double s, double t, const Vec& x) -> Vec {
    return Vec::Constant(1, theta + (x[0] - theta) * std::exp(-kappa * (t - s)));
  };
  nm.oracle.flow_variance = [](double s, double t, const Vec& x) -> Vec {
    const double dt = t - s;
    const double e1 = std::exp(-kappa * dt), e2 = std::exp(-2.0 * kappa * dt);
    return Vec::Constant(1, x[0] * xi * xi / kappa * (e1 - e2) +
                                theta * xi * xi / (2.0 * kappa) * (1.0 - e1) * (1.0 - e1));
  };
  return nm;
}

std::vector<NamedModel> build_registry() {
  std::vector<NamedModel> models;
  models.push_back(make_ou());
  models.push_back(make_gbm());
  models.push_back(make_ginzburg_landau());
  models.push_back(make_double_well());
  models.push_back(make_lorenz());
  models.push_back(make_cir());
  for (auto& m : models) m.spec.validate();
  return models;
}

const std::vector<NamedModel>& registry() {
  static const std::vector<NamedModel> models = build_registry();
  return models;
}

}  // namespace

const NamedModel& model_by_name(const std::string& name) {
  for (const auto& m : registry()) {
    if (m.name == name) return m;
  }
  std::string known;
  for (const auto& m : registry()) {
    if (!known.empty()) known += ", ";
    known += m.name;
  }
  throw ConfigError("unknown model '" + name + "'; available: " + known);
}

std::vector<std::string> model_names() {
  std::vector<std::string> names;
  for (const auto& m : registry()) names.push_back(m.name);
  return names;
}

std::string describe(const NamedModel& model) {
  std::ostringstream os;
  os << model.name << ": " << model.description << "\n";
  const auto& s = model.spec;
  os << "  dim_state = " << s.dim_state << ", dim_noise = " << s.dim_noise
     << ", horizon T = " << format_g17(s.horizon) << "\n";
  os << "  constants: alpha0 = " << format_g17(s.alpha0) << ", beta0 = " << format_g17(s.beta0)
     << ", alpha1 = " << format_g17(s.alpha1) << ", beta1 = " << format_g17(s.beta1) << "\n";
  os << "             p = " << format_g17(s.p_exp) << ", q = " << format_g17(s.q_exp)
     << ", q0 = " << format_g17(s.q0) << ", q1 = " << format_g17(s.q1) << "\n";
  os << "             delta = " << format_g17(s.delta) << ", gamma = " << format_g17(s.gamma)
     << ", c1 = " << format_g17(s.c1) << ", c2 = " << format_g17(s.c2)
     << ", c3 = " << format_g17(s.c3) << "\n";
  if (s.phi_constant) os << "  phi(t) = " << format_g17(*s.phi_constant) << " (constant)\n";
  os << "  certified box: " << format_vec(model.box_lo) << " .. " << format_vec(model.box_hi)
     << (model.certified ? "" : "  [NOT certified]") << "\n";
  os << "  oracle: flow_mean " << (model.oracle.flow_mean ? "yes" : "no") << ", flow_variance "
     << (model.oracle.flow_variance ? "yes" : "no") << ", derivative "
     << (model.oracle.derivative_factor
             ? "deterministic factor"
             : (model.oracle.derivative_equals_flow_ratio ? "flow ratio (linear)" : "no"))
     << ", exp_moment " << (model.oracle.exp_moment ? "yes" : "no") << "\n";
  if (!model.fit_regression.empty()) {
    os << "  fit_constants regression (documented box, seed 20240801):\n";
    for (const auto& [key, value] : model.fit_regression) {
      os << "    " << key << " = " << format_g17(value) << "\n";
    }
  }
  return os.str();
}

}  // namespace flowlab
