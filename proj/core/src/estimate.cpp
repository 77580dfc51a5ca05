#include "flowlab/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "flowlab/rng.hpp"

namespace flowlab {

namespace {

constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile
constexpr int kBootstrap = 400;

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void echo(BoundReport& r, const std::string& key, double value) {
  r.inputs[key] = format_g17(value);
}

void echo_point(BoundReport& r, const std::string& key, const Vec& v) {
  r.inputs[key] = format_vec(v);
}

/// Paths kept by the exit policy: freeze keeps everything, reject drops paths
/// that left the domain in any of the listed anchors.
std::vector<long> effective_paths(const PathEnsemble& ens, const std::vector<int>& anchors) {
  std::vector<long> keep;
  keep.reserve(static_cast<size_t>(ens.grid.n_paths));
  for (long p = 0; p < ens.grid.n_paths; ++p) {
    bool ok = true;
    if (ens.grid.exit_policy == ExitPolicy::reject) {
      for (int a : anchors) {
        if (ens.exit_step[static_cast<size_t>(a)][static_cast<size_t>(p)] >= 0) {
          ok = false;
          break;
        }
      }
    }
    if (ok) keep.push_back(p);
  }
  if (keep.empty()) throw ConfigError("estimate: no effective paths (all rejected)");
  return keep;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

ConfidenceInterval clt_mean_ci(const std::vector<double>& vals) {
  const double n = static_cast<double>(vals.size());
  const double mean = mean_of(vals);
  double ss = 0;
  for (double x : vals) ss += (x - mean) * (x - mean);
  const double se = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return {mean - kZ99 * se, mean + kZ99 * se, 0.99};
}

double logsumexp(const std::vector<double>& v) {
  double mx = -kInf;
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double acc = 0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

/// Percentile bootstrap (400 resamples) of a statistic over path indices.
ConfidenceInterval bootstrap_ci(long n, uint64_t seed, uint64_t stream,
                                const std::function<double(const std::vector<long>&)>& stat) {
  std::vector<double> stats(kBootstrap);
  std::vector<long> idx(static_cast<size_t>(n));
  for (int b = 0; b < kBootstrap; ++b) {
    for (long i = 0; i < n; ++i) {
      idx[static_cast<size_t>(i)] = static_cast<long>(
          rng::bits64(seed, rng::kStreamTagBootstrap | stream,
                      static_cast<uint64_t>(b) * static_cast<uint64_t>(n) +
                          static_cast<uint64_t>(i)) %
          static_cast<uint64_t>(n));
    }
    stats[static_cast<size_t>(b)] = stat(idx);
  }
  std::sort(stats.begin(), stats.end());
  return {stats[1], stats[kBootstrap - 2], 0.99};  // 0.5% / 99.5% percentile slots
}

/// Trapezoid path integral of f(record r) over record times in [t_lo, t_hi].
double trapezoid_records(const std::vector<double>& times, double t_lo, double t_hi,
                         const std::function<double(long)>& f) {
  double acc = 0;
  double prev_t = kNaN, prev_f = kNaN;
  bool have_prev = false;
  for (long r = 0; r < static_cast<long>(times.size()); ++r) {
    const double t = times[static_cast<size_t>(r)];
    if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
    const double ft = f(r);
    if (have_prev) acc += 0.5 * (t - prev_t) * (ft + prev_f);
    prev_t = t;
    prev_f = ft;
    have_prev = true;
  }
  return acc;
}

long resolve_record(const PathEnsemble& ens, long record_index) {
  if (record_index < 0) return ens.n_records() - 1;
  if (record_index >= ens.n_records()) throw ConfigError("estimate: record index out of range");
  return record_index;
}

long find_record_at(const std::vector<double>& times, double t) {
  for (long r = 0; r < static_cast<long>(times.size()); ++r) {
    if (std::abs(times[static_cast<size_t>(r)] - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
      return r;
    }
  }
  throw ConfigError("estimate: time " + format_g17(t) + " is not a record time");
}

}  // namespace

double empirical_norm(const std::vector<double>& samples, double r) {
  if (samples.empty()) throw ConfigError("empirical_norm: empty sample");
  if (!(r > 0)) throw ConfigError("empirical_norm: exponent must be positive");
  double mx = 0;
  for (double x : samples) mx = std::max(mx, std::abs(x));
  if (r == kInf || mx == 0.0) return mx;
  double acc = 0;
  for (double x : samples) acc += std::pow(std::abs(x) / mx, r);
  return mx * std::pow(acc / static_cast<double>(samples.size()), 1.0 / r);
}

double empirical_norm(const Mat& sample_columns, double r) {
  if (sample_columns.cols() == 0) throw ConfigError("empirical_norm: empty sample");
  std::vector<double> norms(static_cast<size_t>(sample_columns.cols()));
  for (Eigen::Index c = 0; c < sample_columns.cols(); ++c) {
    norms[static_cast<size_t>(c)] = sample_columns.col(c).norm();
  }
  return empirical_norm(norms, r);
}

double integral_exp_decay(double beta, double alpha, double s, double t) {
  if (beta == 0.0) return 0.0;
  if (alpha == 0.0) return beta * (t - s);
  return beta * (std::exp(-alpha * s) - std::exp(-alpha * t)) / alpha;
}

double integral_exp_decay_tent(double beta, double alpha, double s, double T) {
  if (beta == 0.0) return 0.0;
  const double len = T - s;
  if (len <= 0.0) return 0.0;
  const double al = alpha * len;
  if (std::abs(al) < 1e-8) {
    return beta * std::exp(-alpha * s) * (0.5 * len - alpha * len * len / 6.0);
  }
  const double e = std::exp(-al);
  const double full = (1.0 - e) / alpha;
  const double ramp = (1.0 - e * (1.0 + al)) / (alpha * alpha * len);
  return beta * std::exp(-alpha * s) * (full - ramp);
}

double integral_phi(const ModelSpec& model, double s, double t) {
  if (t <= s) return 0.0;
  if (model.phi_constant) return *model.phi_constant * (t - s);
  const int n = 1024;
  const double h = (t - s) / n;
  double acc = 0.5 * (model.phi(s) + model.phi(t));
  for (int i = 1; i < n; ++i) acc += model.phi(s + i * h);
  return acc * h;
}

BoundReport check_lyapunov_bound(const ModelSpec& model, const PathEnsemble& ensemble,
                                 int sim_anchor, WhichV which, double alpha) {
  const auto& sa = ensemble.sim_anchors.at(static_cast<size_t>(sim_anchor));
  const long rec = ensemble.n_records() - 1;
  const double t_end = ensemble.grid.record_times.back();
  const auto keep = effective_paths(ensemble, {sim_anchor});
  const auto& triple = which == WhichV::V0 ? model.lyapunov_v0 : model.lyapunov_v1;

  std::vector<double> vals;
  vals.reserve(keep.size());
  const Mat& states = ensemble.state(sim_anchor, rec);
  for (long p : keep) vals.push_back(triple.value(states.col(p)));

  BoundReport r;
  r.bound_id = "lyapunov";
  r.n_effective = static_cast<long>(keep.size());
  r.lhs_ci = clt_mean_ci(vals);
  r.lhs = mean_of(vals);
  r.rhs = std::exp(alpha * (t_end - sa.s)) * triple.value(sa.x0);
  r.satisfied = r.lhs_ci.hi <= r.rhs;
  echo(r, "alpha", alpha);
  echo(r, "s", sa.s);
  echo(r, "t_end", t_end);
  echo_point(r, "x0", sa.x0);
  r.inputs["which_V"] = which == WhichV::V0 ? "V0" : "V1";
  r.inputs["exit_policy"] = exit_policy_name(ensemble.grid.exit_policy);
  return r;
}

BoundReport check_exp_moment_bound(const ModelSpec& model, const PathEnsemble& ensemble,
                                   int sim_anchor, WhichV which, double s) {
  const auto& sa = ensemble.sim_anchors.at(static_cast<size_t>(sim_anchor));
  if (std::abs(s - sa.s) > 1e-12) {
    throw ConfigError("check_exp_moment_bound: s must equal the anchor start time");
  }
  const double alpha = which == WhichV::V0 ? model.alpha0 : model.alpha1;
  const double beta = which == WhichV::V0 ? model.beta0 : model.beta1;
  const auto& triple = which == WhichV::V0 ? model.lyapunov_v0 : model.lyapunov_v1;
  const bool with_vbar = which == WhichV::V1;

  const auto& times = ensemble.grid.record_times;
  const double t_end = times.back();
  const long rec_end = ensemble.n_records() - 1;
  const auto keep = effective_paths(ensemble, {sim_anchor});

  std::vector<double> args;
  args.reserve(keep.size());
  for (long p : keep) {
    double arg = triple.value(ensemble.state(sim_anchor, rec_end).col(p)) / std::exp(alpha * t_end);
    if (with_vbar) {
      arg += trapezoid_records(times, s, t_end, [&](long r) {
        const double t = times[static_cast<size_t>(r)];
        return model.vbar(t, ensemble.state(sim_anchor, r).col(p)) / std::exp(alpha * t);
      });
    }
    args.push_back(arg);
  }

  BoundReport r;
  r.bound_id = "exp_moment";
  r.n_effective = static_cast<long>(keep.size());
  const long n = static_cast<long>(args.size());
  r.log_lhs = logsumexp(args) - std::log(static_cast<double>(n));
  r.lhs = std::exp(r.log_lhs);

  const auto stat = [&](const std::vector<long>& idx) {
    std::vector<double> sub;
    sub.reserve(idx.size());
    for (long i : idx) sub.push_back(args[static_cast<size_t>(i)]);
    return logsumexp(sub) - std::log(static_cast<double>(sub.size()));
  };
  const ConfidenceInterval log_ci =
      bootstrap_ci(n, ensemble.seed, fnv1a(r.bound_id), stat);
  r.lhs_ci = {std::exp(log_ci.lo), std::exp(log_ci.hi), 0.99};

  r.rhs = std::exp(triple.value(sa.x0) / std::exp(alpha * s) +
                   integral_exp_decay(beta, alpha, s, t_end));
  if (!(r.lhs <= 1e300)) {
    r.overflow = true;
    r.lhs = kInf;
    r.satisfied = false;
  } else {
    r.satisfied = r.lhs_ci.hi <= r.rhs;
  }
  echo(r, "alpha", alpha);
  echo(r, "beta", beta);
  echo(r, "s", s);
  echo(r, "t_end", t_end);
  echo_point(r, "x0", sa.x0);
  r.inputs["which_V"] = which == WhichV::V0 ? "V0" : "V1";
  return r;
}

BoundReport check_poly_moment_bound(const ModelSpec& model, const PathEnsemble& ensemble,
                                    int sim_anchor, double s, double t, double r_exp) {
  const auto& sa = ensemble.sim_anchors.at(static_cast<size_t>(sim_anchor));
  if (std::abs(s - sa.s) > 1e-12) {
    throw ConfigError("check_poly_moment_bound: s must equal the anchor start time");
  }
  if (!(r_exp >= 1)) throw ConfigError("check_poly_moment_bound: exponent must be >= 1");
  const long rec = find_record_at(ensemble.grid.record_times, t);
  const auto keep = effective_paths(ensemble, {sim_anchor});

  std::vector<double> vals;
  vals.reserve(keep.size());
  const Mat& states = ensemble.state(sim_anchor, rec);
  for (long p : keep) vals.push_back(1.0 + model.lyapunov_v0.value(states.col(p)));

  BoundReport r;
  r.bound_id = "poly_moment";
  r.n_effective = static_cast<long>(keep.size());
  r.lhs = empirical_norm(vals, r_exp);
  if (r_exp == kInf) {
    r.lhs_ci = {r.lhs, r.lhs, 0.99};
  } else {
    std::vector<double> powers;
    powers.reserve(vals.size());
    for (double v : vals) powers.push_back(std::pow(v, r_exp));
    const ConfidenceInterval ci = clt_mean_ci(powers);
    r.lhs_ci = {std::pow(std::max(ci.lo, 0.0), 1.0 / r_exp), std::pow(ci.hi, 1.0 / r_exp), 0.99};
  }
  r.rhs = std::exp(model.alpha0 * t) *
          (r_exp + integral_exp_decay(model.beta0, model.alpha0, s, t) +
           std::exp(-model.alpha0 * s) * model.lyapunov_v0.value(sa.x0));
  r.satisfied = r.lhs_ci.hi <= r.rhs;
  echo(r, "s", s);
  echo(r, "t", t);
  echo(r, "r_exp", r_exp);
  echo_point(r, "x0", sa.x0);
  return r;
}

BoundReport check_multiple_exp_bound(const ModelSpec& model, const PathEnsemble& ensemble,
                                     const std::array<int, 4>& sim_anchors, double s, double q0,
                                     double q1) {
  for (int a : sim_anchors) {
    if (std::abs(ensemble.sim_anchors.at(static_cast<size_t>(a)).s - s) > 1e-12) {
      throw ConfigError("check_multiple_exp_bound: all four anchors must start at s");
    }
  }
  const double inv_q = ext_inv(q0) + ext_inv(q1);
  const double q = inv_q == 0.0 ? kInf : 1.0 / inv_q;
  const auto& times = ensemble.grid.record_times;
  const double t_end = times.back();
  const auto keep =
      effective_paths(ensemble, {sim_anchors[0], sim_anchors[1], sim_anchors[2], sim_anchors[3]});

  const double phi_int = integral_phi(model, s, t_end);
  std::vector<double> args;
  args.reserve(keep.size());
  for (long p : keep) {
    double arg = phi_int;
    for (int a : sim_anchors) {
      arg += trapezoid_records(times, s, t_end, [&](long rec) {
        const double t = times[static_cast<size_t>(rec)];
        const Vec x = ensemble.state(a, rec).col(p);
        const double v0_term = model.lyapunov_v0.value(x) /
                               (4.0 * q0 * (t_end - s) * std::exp(model.alpha0 * t));
        const double vbar_term = model.vbar(t, x) / (4.0 * q1 * std::exp(model.alpha1 * t));
        return v0_term + vbar_term;
      });
    }
    args.push_back(arg);
  }

  BoundReport r;
  r.bound_id = "multiple_exp";
  r.n_effective = static_cast<long>(keep.size());
  const long n = static_cast<long>(args.size());

  // ||exp(A)||_{L^q} = (mean exp(q A))^{1/q}, in log space; q = inf -> max.
  const auto lq_log = [&](const std::vector<double>& a) {
    if (q == kInf) {
      double mx = -kInf;
      for (double x : a) mx = std::max(mx, x);
      return mx;
    }
    std::vector<double> scaled;
    scaled.reserve(a.size());
    for (double x : a) scaled.push_back(q * x);
    return (logsumexp(scaled) - std::log(static_cast<double>(a.size()))) / q;
  };
  r.log_lhs = lq_log(args);
  r.lhs = std::exp(r.log_lhs);
  const ConfidenceInterval log_ci =
      bootstrap_ci(n, ensemble.seed, fnv1a(r.bound_id), [&](const std::vector<long>& idx) {
        std::vector<double> sub;
        sub.reserve(idx.size());
        for (long i : idx) sub.push_back(args[static_cast<size_t>(i)]);
        return lq_log(sub);
      });
  r.lhs_ci = {std::exp(log_ci.lo), std::exp(log_ci.hi), 0.99};

  double start_terms = 0;
  for (int a : sim_anchors) {
    const Vec& x0 = ensemble.sim_anchors.at(static_cast<size_t>(a)).x0;
    start_terms += model.lyapunov_v0.value(x0) / (4.0 * q0 * std::exp(model.alpha0 * s));
    start_terms += model.lyapunov_v1.value(x0) / (4.0 * q1 * std::exp(model.alpha1 * s));
  }
  const double beta_int = integral_exp_decay_tent(model.beta0, model.alpha0, s, t_end) * ext_inv(q0) +
                          integral_exp_decay(model.beta1, model.alpha1, s, t_end) * ext_inv(q1);
  r.rhs = std::exp(phi_int + beta_int + start_terms);

  if (!(r.lhs <= 1e300)) {
    r.overflow = true;
    r.lhs = kInf;
    r.satisfied = false;
  } else {
    r.satisfied = r.lhs_ci.hi <= r.rhs;
  }
  echo(r, "s", s);
  echo(r, "t_end", t_end);
  echo(r, "q0", q0);
  echo(r, "q1", q1);
  echo(r, "q", q);
  return r;
}

BoundReport check_gronwall(const ModelSpec& model, const PathEnsemble& ensemble, int anchor_x,
                           int anchor_y, const GronwallParams& params, long record_index) {
  const auto& ax = ensemble.sim_anchors.at(static_cast<size_t>(anchor_x));
  const auto& ay = ensemble.sim_anchors.at(static_cast<size_t>(anchor_y));
  if (std::abs(ax.s - ay.s) > 1e-12) {
    throw ConfigError("check_gronwall: both anchors must share the start time");
  }
  if (!(params.delta > 0)) throw ConfigError("check_gronwall: delta must be positive");
  const double inv_q = 1.0 / params.p + 1.0 / params.r;
  if (std::abs(inv_q - 1.0 / params.q) > 1e-12 * std::max(1.0, 1.0 / params.q)) {
    throw ConfigError("check_gronwall: 1/q = 1/p + 1/r violated");
  }
  const long rec_end = resolve_record(ensemble, record_index);
  const auto& times = ensemble.grid.record_times;
  const double s = ax.s;
  const double t = times[static_cast<size_t>(rec_end)];
  const auto keep = effective_paths(ensemble, {anchor_x, anchor_y});
  const long n = static_cast<long>(keep.size());
  const double p = params.p, q = params.q, delta = params.delta;
  const int d = model.dim_state, m = model.dim_noise;

  // Per-path ingredients of both sides.
  std::vector<double> y_end_q(static_cast<size_t>(n));      // |Y_t|^q
  std::vector<double> base_p(static_cast<size_t>(n));       // |Y_0|^p + d^{(p-2)/2} int |beta|^p
  std::vector<double> q_log_exp(static_cast<size_t>(n));    // q * int alpha
  {
    Vec mu_x(d), mu_y(d);
    Mat sig_x(d, m), sig_y(d, m);
    std::vector<double> alpha_r(static_cast<size_t>(rec_end) + 1);
    std::vector<double> beta_p_r(static_cast<size_t>(rec_end) + 1);
    for (long i = 0; i < n; ++i) {
      const long path = keep[static_cast<size_t>(i)];
      for (long rec = 0; rec <= rec_end; ++rec) {
        const double u = times[static_cast<size_t>(rec)];
        const Vec xs = ensemble.state(anchor_x, rec).col(path);
        const Vec ys = ensemble.state(anchor_y, rec).col(path);
        const Vec diff = xs - ys;
        const double n2 = diff.squaredNorm();
        const double a_u = monotonicity_rhs_density(model, u, xs, ys);
        alpha_r[static_cast<size_t>(rec)] = a_u;
        // beta_t^2: slack of the one-sided growth of (Y, a, b) over alpha |Y|^2.
        double b2 = 0;
        if (n2 > 0) {
          model.drift(xs, mu_x);
          model.drift(ys, mu_y);
          model.diffusion(xs, sig_x);
          model.diffusion(ys, sig_y);
          const Mat sdiff = sig_x - sig_y;
          const Eigen::RowVectorXd cross = diff.transpose() * sdiff;
          const double lhs = diff.dot(mu_x - mu_y) + 0.5 * sdiff.squaredNorm() +
                             0.5 * (p - 2.0) * cross.squaredNorm() / n2;
          b2 = std::max(0.0, lhs - a_u * n2);
        }
        beta_p_r[static_cast<size_t>(rec)] = std::pow(b2, 0.5 * p);  // |beta|^p
      }
      const Vec y_end = ensemble.state(anchor_x, rec_end).col(path) -
                        ensemble.state(anchor_y, rec_end).col(path);
      y_end_q[static_cast<size_t>(i)] = std::pow(y_end.norm(), q);
      const double beta_int = trapezoid_records(times, s, t, [&](long rec) {
        return beta_p_r[static_cast<size_t>(rec)];
      });
      base_p[static_cast<size_t>(i)] =
          std::pow((ax.x0 - ay.x0).norm(), p) + std::pow(delta, 0.5 * (p - 2.0)) * beta_int;
      const double alpha_int = trapezoid_records(times, s, t, [&](long rec) {
        return alpha_r[static_cast<size_t>(rec)];
      });
      q_log_exp[static_cast<size_t>(i)] = q * alpha_int;
    }
  }

  const double tail = std::exp((0.5 - 1.0 / p) * (t - s) / delta);
  const auto lhs_of = [&](const std::vector<long>& idx) {
    double acc = 0;
    for (long i : idx) acc += y_end_q[static_cast<size_t>(i)];
    return std::pow(acc / static_cast<double>(idx.size()), 1.0 / q);
  };
  const auto rhs_of = [&](const std::vector<long>& idx) {
    double f1 = 0;
    std::vector<double> logs;
    logs.reserve(idx.size());
    for (long i : idx) {
      f1 += base_p[static_cast<size_t>(i)];
      logs.push_back(q_log_exp[static_cast<size_t>(i)]);
    }
    f1 = std::pow(f1 / static_cast<double>(idx.size()), 1.0 / p);
    const double f2 =
        std::exp((logsumexp(logs) - std::log(static_cast<double>(idx.size()))) / q);
    return f1 * f2 * tail;
  };

  std::vector<long> all(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;

  BoundReport r;
  r.bound_id = "gronwall";
  r.n_effective = n;
  r.lhs = lhs_of(all);
  r.rhs = rhs_of(all);
  r.lhs_ci = bootstrap_ci(n, ensemble.seed, fnv1a("gronwall_lhs"), lhs_of);
  // One-sided paired bootstrap of lhs - rhs (both sides are Monte Carlo).
  const ConfidenceInterval diff_ci =
      bootstrap_ci(n, ensemble.seed, fnv1a("gronwall_diff"), [&](const std::vector<long>& idx) {
        return lhs_of(idx) - rhs_of(idx);
      });
  r.satisfied = diff_ci.hi <= 0.0;
  echo(r, "p", p);
  echo(r, "q", q);
  echo(r, "r", params.r);
  echo(r, "delta", delta);
  echo(r, "s", s);
  echo(r, "t", t);
  echo_point(r, "x0", ax.x0);
  echo_point(r, "y0", ay.x0);
  echo(r, "diff_ci_hi", diff_ci.hi);
  return r;
}

std::vector<BoundReport> check_flow_holder(const ModelSpec& model, const PathEnsemble& ensemble,
                                           const std::vector<std::pair<AnchorTime, AnchorTime>>& pairs,
                                           double p, double q) {
  std::vector<BoundReport> out;
  const double kappa = lp_combine(p, q);
  const double T = model.horizon;
  const double gamma = model.gamma;

  // int_0^T phi + beta_0/(q_0 e^{a_0 r}) + beta_1/(q_1 e^{a_1 r}) dr, shared by
  // the spatial and start-time terms of the bound.
  const double shared_int = integral_phi(model, 0.0, T) +
                            integral_exp_decay(model.beta0, model.alpha0, 0.0, T) * ext_inv(model.q0) +
                            integral_exp_decay(model.beta1, model.alpha1, 0.0, T) * ext_inv(model.q1);

  for (const auto& [a_raw, b_raw] : pairs) {
    // The bound is derived for s1 <= s2; swap the pair accordingly.
    AnchorTime first = a_raw, second = b_raw;
    const auto& sa_f = ensemble.sim_anchors.at(static_cast<size_t>(first.sim_anchor));
    const auto& sa_s = ensemble.sim_anchors.at(static_cast<size_t>(second.sim_anchor));
    if (sa_f.s > sa_s.s) std::swap(first, second);
    const auto& a1 = ensemble.sim_anchors.at(static_cast<size_t>(first.sim_anchor));
    const auto& a2 = ensemble.sim_anchors.at(static_cast<size_t>(second.sim_anchor));
    const double s1 = a1.s, s2 = a2.s;
    const double t1 = ensemble.grid.record_times.at(static_cast<size_t>(first.record));
    const double t2 = ensemble.grid.record_times.at(static_cast<size_t>(second.record));
    const Vec& x1 = a1.x0;
    const Vec& x2 = a2.x0;

    const auto keep = effective_paths(ensemble, {first.sim_anchor, second.sim_anchor});
    std::vector<double> norms;
    norms.reserve(keep.size());
    const Mat& st1 = ensemble.state(first.sim_anchor, first.record);
    const Mat& st2 = ensemble.state(second.sim_anchor, second.record);
    for (long path : keep) norms.push_back((st1.col(path) - st2.col(path)).norm());

    BoundReport r;
    r.bound_id = "flow_holder";
    r.n_effective = static_cast<long>(keep.size());
    r.lhs = empirical_norm(norms, kappa);
    {
      std::vector<double> powers;
      powers.reserve(norms.size());
      for (double v : norms) powers.push_back(std::pow(v, kappa));
      const ConfidenceInterval ci = clt_mean_ci(powers);
      r.lhs_ci = {std::pow(std::max(ci.lo, 0.0), 1.0 / kappa), std::pow(ci.hi, 1.0 / kappa),
                  0.99};
    }

    const double v0_x1 = model.lyapunov_v0.value(x1);
    const double v0_x2 = model.lyapunov_v0.value(x2);
    const double v1_x1 = model.lyapunov_v1.value(x1);
    const double v1_x2 = model.lyapunov_v1.value(x2);

    // Temporal term: sqrt|t1-t2| e^{a0 g T} |kg + e^{-a0 s1} V0(x1)|^g (sqrt T + k).
    // The unsubscripted alpha of the scalar exponents is read as alpha_0.
    const double term_t = std::sqrt(std::abs(t1 - t2)) * std::exp(model.alpha0 * gamma * T) *
                          std::pow(std::abs(kappa * gamma + std::exp(-model.alpha0 * s1) * v0_x1),
                                   gamma) *
                          (std::sqrt(T) + kappa);

    // Spatial term: |x1-x2| exp(shared_int + sum_i (V_i(x1)+V_i(x2))/(2 q_i)).
    const double term_x =
        (x1 - x2).norm() *
        std::exp(shared_int + 0.5 * (v0_x1 + v0_x2) * ext_inv(model.q0) +
                 0.5 * (v1_x1 + v1_x2) * ext_inv(model.q1));

    // Start-time term: sqrt|s1-s2| e^{a0 g |s2-s1|} |p g + V0(x2)|^g (sqrt|s2-s1| + p)
    //   * exp(shared_int + sum_i V_i(x2)/(2 q_i e^{a s2}) + sum_i V_i(x2)/(2 q_i e^{a_i s1})).
    // alpha_reading switches the first exponent between alpha_i and alpha_0.
    const double a_for_0 = model.alpha0;
    const double a_for_1 =
        model.alpha_reading == AlphaReading::per_index ? model.alpha1 : model.alpha0;
    const double ds = std::abs(s2 - s1);
    const double term_s =
        std::sqrt(ds) * std::exp(model.alpha0 * gamma * ds) *
        std::pow(std::abs(p * gamma + v0_x2), gamma) * (std::sqrt(ds) + p) *
        std::exp(shared_int +
                 0.5 * v0_x2 * ext_inv(model.q0) / std::exp(a_for_0 * s2) +
                 0.5 * v1_x2 * ext_inv(model.q1) / std::exp(a_for_1 * s2) +
                 0.5 * v0_x2 * ext_inv(model.q0) / std::exp(model.alpha0 * s1) +
                 0.5 * v1_x2 * ext_inv(model.q1) / std::exp(model.alpha1 * s1));

    r.rhs = term_t + term_x + term_s;
    r.satisfied = r.lhs_ci.hi <= r.rhs;
    echo(r, "s1", s1);
    echo(r, "t1", t1);
    echo_point(r, "x1", x1);
    echo(r, "s2", s2);
    echo(r, "t2", t2);
    echo_point(r, "x2", x2);
    echo(r, "p", p);
    echo(r, "q", q);
    echo(r, "exponent", kappa);
    echo(r, "term_t", term_t);
    echo(r, "term_x", term_x);
    echo(r, "term_s", term_s);
    out.push_back(std::move(r));
  }
  return out;
}

BoundReport check_derivative_moment_bound(const ModelSpec& model,
                                          const DerivativeEnsemble& derivative,
                                          long record_index) {
  const long n_rec = static_cast<long>(derivative.record_times.size());
  long rec = record_index < 0 ? n_rec - 1 : record_index;
  if (rec < 0 || rec >= n_rec) throw ConfigError("check_derivative_moment_bound: record index");
  const double s = derivative.start_time;
  const double t = derivative.record_times[static_cast<size_t>(rec)];
  const double kappa = model.lp_exponent();

  BoundReport r;
  r.bound_id = "derivative_moment";
  r.n_effective = derivative.n_paths;
  r.lhs = empirical_norm(derivative.state(rec), kappa);
  {
    std::vector<double> powers(static_cast<size_t>(derivative.n_paths));
    const Mat& st = derivative.state(rec);
    for (long p = 0; p < derivative.n_paths; ++p) {
      powers[static_cast<size_t>(p)] = std::pow(st.col(p).norm(), kappa);
    }
    const ConfidenceInterval ci = clt_mean_ci(powers);
    r.lhs_ci = {std::pow(std::max(ci.lo, 0.0), 1.0 / kappa), std::pow(ci.hi, 1.0 / kappa), 0.99};
  }

  const double integral =
      integral_phi(model, s, t) +
      integral_exp_decay(model.beta0, model.alpha0, s, t) * ext_inv(model.q0) +
      integral_exp_decay(model.beta1, model.alpha1, s, t) * ext_inv(model.q1);
  const double start_terms =
      model.lyapunov_v0.value(derivative.x0) * ext_inv(model.q0) / std::exp(model.alpha0 * s) +
      model.lyapunov_v1.value(derivative.x0) * ext_inv(model.q1) / std::exp(model.alpha1 * s);
  r.rhs = derivative.v.norm() * std::exp(integral + start_terms);
  r.satisfied = r.lhs_ci.hi <= r.rhs;
  echo(r, "s", s);
  echo(r, "t", t);
  echo(r, "exponent", kappa);
  echo(r, "y", derivative.y);
  echo_point(r, "v", derivative.v);
  echo_point(r, "x0", derivative.x0);
  r.inputs["mode"] =
      derivative.mode == DerivativeEnsemble::Mode::variational ? "variational" : "quotient";
  return r;
}

KolmogorovTable kolmogorov_table(const PathEnsemble& ensemble, double p, double alpha_time,
                                 double alpha_space, const std::vector<double>& radii) {
  struct Node {
    int anchor;
    long record;
    double s, t;
    const Vec* x;
    double norm3;  // |(s, t, x)| in R^{2+d}
  };
  std::vector<Node> nodes;
  std::vector<Vec> x_store;
  x_store.reserve(ensemble.sim_anchors.size());
  for (const auto& sa : ensemble.sim_anchors) x_store.push_back(sa.x0);
  for (int a = 0; a < static_cast<int>(ensemble.sim_anchors.size()); ++a) {
    const auto& sa = ensemble.sim_anchors[static_cast<size_t>(a)];
    for (long rec = 0; rec < ensemble.n_records(); ++rec) {
      const double t = ensemble.grid.record_times[static_cast<size_t>(rec)];
      Node nd{a, rec, sa.s, t, &x_store[static_cast<size_t>(a)], 0.0};
      nd.norm3 = std::sqrt(sa.s * sa.s + t * t + sa.x0.squaredNorm());
      nodes.push_back(nd);
    }
  }

  KolmogorovTable table;
  table.exponent = p;
  table.alpha_time = alpha_time;
  table.alpha_space = alpha_space;

  const double max_radius = *std::max_element(radii.begin(), radii.end());
  const long n_nodes = static_cast<long>(nodes.size());
  std::vector<KolmogorovRow> rows;
  std::vector<double> pair_norm3(0);

  for (long i = 0; i < n_nodes; ++i) {
    for (long j = i + 1; j < n_nodes; ++j) {
      const Node& a = nodes[static_cast<size_t>(i)];
      const Node& b = nodes[static_cast<size_t>(j)];
      if (a.norm3 > max_radius || b.norm3 > max_radius) continue;
      const double dist = std::pow(std::abs(a.s - b.s), alpha_time) +
                          std::pow(std::abs(a.t - b.t), alpha_time) +
                          std::pow((*a.x - *b.x).norm(), alpha_space);
      if (dist == 0.0) continue;
      const Mat diff =
          ensemble.state(a.anchor, a.record) - ensemble.state(b.anchor, b.record);
      const double lp = empirical_norm(diff, p);
      rows.push_back({dist, lp, lp / dist});
      pair_norm3.push_back(std::max(a.norm3, b.norm3));
    }
  }

  for (double radius : radii) {
    KolmogorovEntry entry;
    entry.radius = radius;
    double acc = 0;
    for (size_t k = 0; k < rows.size(); ++k) {
      if (pair_norm3[k] > radius) continue;
      ++entry.n_pairs;
      entry.sup_quotient = std::max(entry.sup_quotient, rows[k].quotient);
      acc += rows[k].quotient;
    }
    entry.mean_quotient = entry.n_pairs > 0 ? acc / static_cast<double>(entry.n_pairs) : 0.0;
    table.balls.push_back(entry);
  }
  table.rows = std::move(rows);
  return table;
}

GradientAssemblyReport gradient_assembly_check(const ModelSpec& model, double s, const Vec& x,
                                               const Vec& v_unit,
                                               const std::vector<double>& scales,
                                               double time_step, long n_paths, uint64_t seed,
                                               Scheme scheme, double t_end, double order_tol) {
  if (scales.empty()) throw ConfigError("gradient_assembly_check: scale ladder is empty");
  const int d = model.dim_state;

  FlowGrid grid;
  grid.anchors = {{s, x}};
  grid.directions = {{v_unit, scales}};
  grid.time_step = time_step;
  grid.scheme = scheme;
  grid.n_paths = n_paths;
  grid.record_times = {t_end};
  const PathEnsemble ens = simulate_flow(model, grid, seed);
  const int base = ens.find_anchor(0);

  std::vector<DerivativeEnsemble> basis;
  basis.reserve(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = 1.0;
    basis.push_back(simulate_variational(model, ens, base, e));
  }

  GradientAssemblyReport rep;
  rep.scales = scales;
  for (size_t yi = 0; yi < scales.size(); ++yi) {
    const double sc = scales[yi];
    const int pert = ens.find_anchor(0, 0, static_cast<int>(yi));
    Mat resid = ens.state(pert, 0) - ens.state(base, 0);
    for (int i = 0; i < d; ++i) {
      resid.noalias() -= (sc * v_unit[i]) * basis[static_cast<size_t>(i)].state(0);
    }
    // L2(P) residual
    double acc = 0;
    for (long pth = 0; pth < n_paths; ++pth) acc += resid.col(pth).squaredNorm();
    rep.residual_l2.push_back(std::sqrt(acc / static_cast<double>(n_paths)));
  }

  // log-log least squares slope of residual vs scale
  const size_t k = scales.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < k; ++i) {
    const double lx = std::log(scales[i]);
    const double ly = std::log(std::max(rep.residual_l2[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = k * sxx - sx * sx;
  rep.fitted_order = denom != 0.0 ? (k * sxy - sx * sy) / denom : 0.0;
  rep.pass = rep.fitted_order >= order_tol;
  return rep;
}

}  // namespace flowlab
