#include "flowlab/model.hpp"

#include <cmath>

#include "flowlab/quadrature.hpp"
#include "flowlab/sobol.hpp"

namespace flowlab {

namespace {

void require_in_domain(const ModelSpec& model, const Vec& x, const char* where) {
  if (!model.domain_cal_O(x)) {
    throw DomainError(std::string(where) + ": point outside the state domain: " + format_vec(x));
  }
}

void require_finite(double v, const Vec& x, const char* what) {
  if (!std::isfinite(v)) {
    throw EvaluationError(std::string(what) + " evaluated non-finite at x = " + format_vec(x));
  }
}

void require_finite(const Eigen::Ref<const Mat>& m, const Vec& x, const char* what) {
  if (!m.allFinite()) {
    throw EvaluationError(std::string(what) + " evaluated non-finite at x = " + format_vec(x));
  }
}

const LyapunovTriple& select_triple(const ModelSpec& model, WhichV which) {
  return which == WhichV::V0 ? model.lyapunov_v0 : model.lyapunov_v1;
}

}  // namespace

// phi(t) + (V0(x)+V0(y))/w0 + (vbar(t,x)+vbar(t,y))/w1 with the
// horizon / remaining-time weighting switch.
double monotonicity_rhs_density(const ModelSpec& model, double t, const Vec& x, const Vec& y) {
  const double tw =
      model.time_weighting == TimeWeighting::horizon ? model.horizon : model.horizon - t;
  const double w0 = 2.0 * model.q0 * tw * std::exp(model.alpha0 * t);
  const double w1 = model.time_weighting == TimeWeighting::horizon
                        ? 2.0 * model.q1 * std::exp(model.alpha1 * t)
                        : 2.0 * model.q1 * tw * std::exp(model.alpha1 * t);
  const double v0x = model.lyapunov_v0.value(x);
  const double v0y = model.lyapunov_v0.value(y);
  const double vbx = model.vbar(t, x);
  const double vby = model.vbar(t, y);
  // q_i = inf makes w_i = inf and the term vanish (IEEE finite/inf = 0).
  return model.phi(t) + (v0x + v0y) / w0 + (vbx + vby) / w1;
}

std::vector<std::string> ModelSpec::validate() const {
  if (dim_state < 1 || dim_noise < 1) throw ConfigError("ModelSpec: dimensions must be positive");
  if (!(horizon > 0)) throw ConfigError("ModelSpec: horizon must be positive");
  if (!drift || !diffusion || !drift_jacobian || !diffusion_jacobian) {
    throw ConfigError("ModelSpec: drift/diffusion and their Jacobians are required");
  }
  if (!domain_O || !domain_cal_O) throw ConfigError("ModelSpec: domain predicates are required");
  if (!lyapunov_v0.value || !lyapunov_v0.gradient || !lyapunov_v0.hessian ||
      !lyapunov_v1.value || !lyapunov_v1.gradient || !lyapunov_v1.hessian) {
    throw ConfigError("ModelSpec: both Lyapunov triples are required (zero triples are fine)");
  }
  if (!vbar || !phi) throw ConfigError("ModelSpec: vbar and phi are required");
  if (!(p_exp >= 2)) throw ConfigError("ModelSpec: p must be >= 2");
  if (!(q_exp > 2 * p_exp)) throw ConfigError("ModelSpec: q must lie in (2p, inf]");
  if (!(q0 > 0) || !(q1 > 0)) throw ConfigError("ModelSpec: q0, q1 must be positive");
  if (!(delta > 0)) throw ConfigError("ModelSpec: delta must be positive");
  if (!(gamma > 0)) throw ConfigError("ModelSpec: gamma must be positive");
  if (alpha0 < 0 || alpha1 < 0) throw ConfigError("ModelSpec: alpha_i must be nonnegative");

  const double target = ext_inv(q_exp);
  const double sum = ext_inv(q0) + ext_inv(q1);
  if (target == 0.0) {
    if (sum != 0.0) throw ConfigError("ModelSpec: q = inf requires q0 = q1 = inf");
  } else if (std::abs(sum - target) > 1e-12 * target) {
    throw ConfigError("ModelSpec: 1/q0 + 1/q1 = 1/q violated (relative tolerance 1e-12)");
  }

  const double lp = lp_exponent();
  const double lower = std::max(2.0, 1.0 / gamma);
  if (lp < lower - 1e-12) {
    throw ConfigError("ModelSpec: pq/(p+q) = " + format_g17(lp) +
                      " must be >= max(2, 1/gamma) = " + format_g17(lower));
  }

  std::vector<std::string> flags;
  const double diff_threshold = 2.0 * dim_state + 6.0;
  if (lp <= diff_threshold) {
    flags.push_back("pq/(p+q) = " + format_g17(lp) + " <= 2 dim(H)+6 = " +
                    format_g17(diff_threshold) +
                    ": moment machinery applies, differentiability exponent condition not met");
  }
  return flags;
}

double generator_apply(const ModelSpec& model, WhichV which, const Vec& x) {
  require_in_domain(model, x, "generator_apply");
  const auto& v = select_triple(model, which);
  const int d = model.dim_state, m = model.dim_noise;

  Vec grad(d), mu(d);
  Mat hess(d, d), sigma(d, m);
  v.gradient(x, grad);
  v.hessian(x, hess);
  model.drift(x, mu);
  model.diffusion(x, sigma);
  require_finite(grad, x, "generator_apply: grad V");
  require_finite(hess, x, "generator_apply: Hess V");
  require_finite(mu, x, "generator_apply: drift");
  require_finite(sigma, x, "generator_apply: diffusion");

  // tr(sigma sigma^T Hess V) = sum_j sigma_j^T Hess V sigma_j over noise columns.
  double trace = 0.0;
  for (int j = 0; j < m; ++j) trace += sigma.col(j).dot(hess * sigma.col(j));
  const double out = grad.dot(mu) + 0.5 * trace;
  require_finite(out, x, "generator_apply");
  return out;
}

Mat averaged_drift_jacobian(const ModelSpec& model, const Vec& x, const Vec& y, int nodes) {
  require_in_domain(model, x, "averaged_jacobian");
  require_in_domain(model, y, "averaged_jacobian");
  const int d = model.dim_state;
  Mat j(d, d);
  if (x == y) {  // quadrature of a constant, bit-for-bit
    model.drift_jacobian(x, j);
    require_finite(j, x, "drift_jacobian");
    return j;
  }
  if (nodes <= 0) nodes = model.quadrature_nodes;
  const auto& rule = gauss_legendre_01(nodes);
  Mat acc = Mat::Zero(d, d);
  Vec point(d);
  for (int k = 0; k < nodes; ++k) {
    const double l = rule.nodes[static_cast<size_t>(k)];
    point = l * x + (1.0 - l) * y;
    if (!model.domain_cal_O(point)) {
      throw DomainError("averaged_jacobian: segment leaves the state domain at " +
                        format_vec(point));
    }
    model.drift_jacobian(point, j);
    require_finite(j, point, "drift_jacobian");
    acc += rule.weights[static_cast<size_t>(k)] * j;
  }
  return acc;
}

Mat averaged_diffusion_jacobian(const ModelSpec& model, const Vec& x, const Vec& y, int nodes) {
  require_in_domain(model, x, "averaged_jacobian");
  require_in_domain(model, y, "averaged_jacobian");
  const int d = model.dim_state, m = model.dim_noise;
  Mat flat = Mat::Zero(d * m, d);
  Mat dir(d, m);
  Vec basis = Vec::Zero(d);

  auto accumulate = [&](const Vec& point, double weight) {
    for (int k = 0; k < d; ++k) {
      basis.setZero();
      basis[k] = 1.0;
      model.diffusion_jacobian(point, basis, dir);
      require_finite(dir, point, "diffusion_jacobian");
      flat.col(k) += weight * Eigen::Map<const Vec>(dir.data(), d * m);
    }
  };

  if (x == y) {
    accumulate(x, 1.0);
    return flat;
  }
  if (nodes <= 0) nodes = model.quadrature_nodes;
  const auto& rule = gauss_legendre_01(nodes);
  Vec point(d);
  for (int k = 0; k < nodes; ++k) {
    const double l = rule.nodes[static_cast<size_t>(k)];
    point = l * x + (1.0 - l) * y;
    if (!model.domain_cal_O(point)) {
      throw DomainError("averaged_jacobian: segment leaves the state domain at " +
                        format_vec(point));
    }
    accumulate(point, rule.weights[static_cast<size_t>(k)]);
  }
  return flat;
}

double monotonicity_margin_c1(const ModelSpec& model, double t, const Vec& x, const Vec& y,
                              const Vec& h) {
  if (!(t >= 0) || t >= model.horizon) {
    throw DomainError("monotonicity_margin_c1: t must lie in [0, T), got t = " + format_g17(t));
  }
  const double h2 = h.squaredNorm();
  if (h2 == 0.0) throw std::invalid_argument("monotonicity_margin_c1: direction h must be nonzero");
  const int d = model.dim_state, m = model.dim_noise;

  const Mat j_mu = averaged_drift_jacobian(model, x, y);
  const Mat j_sigma = averaged_diffusion_jacobian(model, x, y);

  const Vec sh_flat = j_sigma * h;
  const Eigen::Map<const Mat> sh(sh_flat.data(), d, m);
  const Eigen::RowVectorXd h_sh = h.transpose() * sh;  // <h, (int sigma' dl) h> in HS(U, R)

  const double p = model.p_exp, delta = model.delta;
  const double lhs = h.dot(j_mu * h) + delta * h2 + 0.5 * (1.0 + delta) * sh.squaredNorm() +
                     (p - 1.0 + p * delta) * h_sh.squaredNorm() / h2;
  const double rhs = h2 * monotonicity_rhs_density(model, t, x, y);
  return rhs - lhs;
}

double monotonicity_margin_c0(const ModelSpec& model, double t, const Vec& x, const Vec& y) {
  if (x == y) throw std::invalid_argument("monotonicity_margin_c0: degenerate pair x = y");
  if (!(t >= 0) || t >= model.horizon) {
    throw DomainError("monotonicity_margin_c0: t must lie in [0, T), got t = " + format_g17(t));
  }
  require_in_domain(model, x, "monotonicity_margin_c0");
  require_in_domain(model, y, "monotonicity_margin_c0");
  const int d = model.dim_state, m = model.dim_noise;

  Vec mu_x(d), mu_y(d);
  Mat sig_x(d, m), sig_y(d, m);
  model.drift(x, mu_x);
  model.drift(y, mu_y);
  model.diffusion(x, sig_x);
  model.diffusion(y, sig_y);
  require_finite(mu_x, x, "drift");
  require_finite(sig_x, x, "diffusion");
  require_finite(mu_y, y, "drift");
  require_finite(sig_y, y, "diffusion");

  const Vec diff = x - y;
  const double n2 = diff.squaredNorm();
  const Mat sig_diff = sig_x - sig_y;
  const Eigen::RowVectorXd cross = diff.transpose() * sig_diff;

  const double p = model.p_exp, delta = model.delta;
  const double lhs = diff.dot(mu_x - mu_y) + 0.5 * sig_diff.squaredNorm() +
                     0.5 * (2.0 * p * (1.0 + delta) - 2.0) * cross.squaredNorm() / n2;
  const double rhs = n2 * monotonicity_rhs_density(model, t, x, y);
  return rhs - lhs;
}

double exp_moment_margin(const ModelSpec& model, int i, double t, const Vec& x) {
  if (i != 0 && i != 1) throw std::invalid_argument("exp_moment_margin: i must be 0 or 1");
  if (!(t >= 0) || t > model.horizon) {
    throw DomainError("exp_moment_margin: t must lie in [0, T], got t = " + format_g17(t));
  }
  const WhichV which = i == 0 ? WhichV::V0 : WhichV::V1;
  const auto& triple = select_triple(model, which);
  const double alpha = i == 0 ? model.alpha0 : model.alpha1;
  const double beta = i == 0 ? model.beta0 : model.beta1;
  const int d = model.dim_state, m = model.dim_noise;

  const double gen = generator_apply(model, which, x);
  Vec grad(d);
  Mat sigma(d, m);
  triple.gradient(x, grad);
  model.diffusion(x, sigma);
  const double grad_term = (sigma.transpose() * grad).squaredNorm();
  const double vbar_term = i == 1 ? model.vbar(t, x) : 0.0;
  const double lhs = gen + 0.5 * std::exp(-alpha * t) * grad_term + vbar_term;
  return alpha * triple.value(x) + beta - lhs;
}

GrowthMargins growth_margins(const ModelSpec& model, const Vec& x, const Vec& y) {
  require_in_domain(model, x, "growth_margins");
  require_in_domain(model, y, "growth_margins");
  const int d = model.dim_state, m = model.dim_noise;

  Vec mu(d);
  Mat sigma(d, m);
  model.drift(x, mu);
  model.diffusion(x, sigma);
  require_finite(mu, x, "drift");
  require_finite(sigma, x, "diffusion");

  const double v0x = model.lyapunov_v0.value(x);
  const double v0y = model.lyapunov_v0.value(y);

  GrowthMargins out{};
  out.coeff_growth = model.c1 * std::pow(1.0 + v0x, model.gamma) -
                     std::max(mu.norm(), sigma.norm());

  const double op_mu = operator_norm(averaged_drift_jacobian(model, x, y));
  const double op_sigma = operator_norm(averaged_diffusion_jacobian(model, x, y));
  out.jacobian_growth =
      model.c2 * std::pow(2.0 + v0x + v0y, model.gamma) - std::max(op_mu, op_sigma);

  out.jacobian_lipschitz = jacobian_lipschitz_margin(model, x, x, y, y, 1.0);
  return out;
}

double jacobian_lipschitz_margin(const ModelSpec& model, const Vec& x1, const Vec& x2,
                                 const Vec& x3, const Vec& x4, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("jacobian_lipschitz_margin: lambda must lie in [0, 1]");
  }
  const int d = model.dim_state;
  const Vec u = lambda * x1 + (1.0 - lambda) * x2;
  const Vec w = lambda * x3 + (1.0 - lambda) * x4;
  require_in_domain(model, u, "jacobian_lipschitz_margin");
  require_in_domain(model, w, "jacobian_lipschitz_margin");

  Mat ju(d, d), jw(d, d);
  model.drift_jacobian(u, ju);
  model.drift_jacobian(w, jw);
  require_finite(ju, u, "drift_jacobian");
  require_finite(jw, w, "drift_jacobian");

  const double vsum = model.lyapunov_v0.value(x1) + model.lyapunov_v0.value(x2) +
                      model.lyapunov_v0.value(x3) + model.lyapunov_v0.value(x4);
  const double scale = (lambda * (x1 - x3) + (1.0 - lambda) * (x2 - x4)).norm();
  return model.c3 * scale * std::pow(4.0 + vsum, model.gamma) - operator_norm(ju - jw);
}

double operator_norm(const Mat& j) {
  const Eigen::Index n = j.cols();
  if (n == 0 || j.rows() == 0) return 0.0;
  if (j.isZero(0.0)) return 0.0;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i) / (static_cast<double>(n) + 1.0);
  v.normalize();
  double lambda = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    Vec w = j.transpose() * (j * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (std::abs(norm - lambda) <= 1e-10 * std::max(1.0, norm)) {
      lambda = norm;
      break;
    }
    lambda = norm;
  }
  return std::sqrt(lambda);
}

JacobianValidation validate_jacobians(const ModelSpec& model, const Vec& lo, const Vec& hi,
                                      int n_points, double step) {
  const int d = model.dim_state, m = model.dim_noise;
  JacobianValidation out{};
  SobolSequence sobol(d);
  std::vector<double> u(static_cast<size_t>(d));
  Vec x(d), xp(d), xm(d), fd_vec(d), col(d), gp(d), gm(d), grad(d);
  Mat jac(d, d), sp(d, m), sm(d, m), dir(d, m), hess(d, d);
  Vec basis = Vec::Zero(d);

  auto rel = [](double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
  };

  for (int i = 0; i < n_points; ++i) {
    sobol.next(u.data());
    for (int k = 0; k < d; ++k) x[k] = lo[k] + u[static_cast<size_t>(k)] * (hi[k] - lo[k]);
    if (!model.domain_cal_O(x)) continue;

    model.drift_jacobian(x, jac);
    for (int k = 0; k < d; ++k) {
      xp = x;
      xm = x;
      xp[k] += step;
      xm[k] -= step;
      Vec fp(d), fm(d);
      model.drift(xp, fp);
      model.drift(xm, fm);
      fd_vec = (fp - fm) / (2.0 * step);
      for (int r = 0; r < d; ++r) {
        out.max_rel_error_drift = std::max(out.max_rel_error_drift, rel(fd_vec[r], jac(r, k)));
      }

      basis.setZero();
      basis[k] = 1.0;
      model.diffusion_jacobian(x, basis, dir);
      model.diffusion(xp, sp);
      model.diffusion(xm, sm);
      const Mat fd_mat = (sp - sm) / (2.0 * step);
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < m; ++c) {
          out.max_rel_error_diffusion =
              std::max(out.max_rel_error_diffusion, rel(fd_mat(r, c), dir(r, c)));
        }
      }
    }

    for (int which = 0; which < 2; ++which) {
      const auto& triple = which == 0 ? model.lyapunov_v0 : model.lyapunov_v1;
      double& grad_err =
          which == 0 ? out.max_rel_error_gradient_v0 : out.max_rel_error_gradient_v1;
      double& hess_err = which == 0 ? out.max_rel_error_hessian_v0 : out.max_rel_error_hessian_v1;
      triple.gradient(x, grad);
      triple.hessian(x, hess);
      for (int k = 0; k < d; ++k) {
        xp = x;
        xm = x;
        xp[k] += step;
        xm[k] -= step;
        const double fd = (triple.value(xp) - triple.value(xm)) / (2.0 * step);
        grad_err = std::max(grad_err, rel(fd, grad[k]));
        triple.gradient(xp, gp);
        triple.gradient(xm, gm);
        col = (gp - gm) / (2.0 * step);
        for (int r = 0; r < d; ++r) hess_err = std::max(hess_err, rel(col[r], hess(r, k)));
      }
    }
  }
  return out;
}

}  // namespace flowlab
