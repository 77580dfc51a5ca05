#include "flowlab/sim.hpp"

#include <cmath>

#include "flowlab/rng.hpp"

namespace flowlab {

namespace {

long aligned_step(double t, double dt, const char* what) {
  const double ratio = t / dt;
  const long k = std::llround(ratio);
  if (std::abs(static_cast<double>(k) * dt - t) > 1e-9 * std::max(1.0, std::abs(t))) {
    throw ConfigError(std::string(what) + " = " + format_g17(t) +
                      " is not aligned to the time step " + format_g17(dt));
  }
  return k;
}

struct StepWorkspace {
  Vec mu, dw, x_next;
  Mat sigma;
  // variational extras
  Mat jac, sdir;
  Vec jd, d_next;

  StepWorkspace(int d, int m)
      : mu(d), dw(m), x_next(d), sigma(d, m), jac(d, d), sdir(d, m), jd(d), d_next(d) {}
};

void fill_increment(const ModelSpec& model, double sqrt_dt, uint64_t seed, long path, long step,
                    Vec& dw) {
  const int m = model.dim_noise;
  for (int j = 0; j < m; ++j) {
    dw[j] = rng::normal(seed, static_cast<uint64_t>(path),
                        static_cast<uint64_t>(step) * static_cast<uint64_t>(m) +
                            static_cast<uint64_t>(j)) *
            sqrt_dt;
  }
}

/// One scheme step x -> x_next given the increment already in ws.dw.
/// Returns the drift taming factor dt/(1 + dt |mu|) actually used (dt for
/// plain Euler), which the variational propagation reuses.
double flow_step(const ModelSpec& model, Scheme scheme, double dt, const Vec& x,
                 StepWorkspace& ws) {
  model.drift(x, ws.mu);
  model.diffusion(x, ws.sigma);
  double drift_dt = dt;
  if (scheme == Scheme::tamed_euler) drift_dt = dt / (1.0 + dt * ws.mu.norm());
  ws.x_next = x + drift_dt * ws.mu;
  ws.x_next.noalias() += ws.sigma * ws.dw;
  return drift_dt;
}

/// Derivative of the one-step map applied to d_vec, written into ws.d_next.
/// Euler-Maruyama: D + mu'(x) D dt + (sigma'(x) D) dW.
/// Tamed: the increment g(x) = mu(x) tau(x), tau = dt/(1 + dt|mu|), has
/// Dg h = tau mu' h - tau^2 mu <mu, mu' h>/|mu|.
void variational_step(const ModelSpec& model, Scheme scheme, double drift_dt, const Vec& x,
                      const Vec& d_vec, StepWorkspace& ws) {
  model.drift_jacobian(x, ws.jac);
  ws.jd.noalias() = ws.jac * d_vec;
  ws.d_next = d_vec + drift_dt * ws.jd;
  if (scheme == Scheme::tamed_euler) {
    const double mu_norm = ws.mu.norm();
    if (mu_norm > 0.0) {
      const double coef = drift_dt * drift_dt * ws.mu.dot(ws.jd) / mu_norm;
      ws.d_next.noalias() -= coef * ws.mu;
    }
  }
  model.diffusion_jacobian(x, d_vec, ws.sdir);
  ws.d_next.noalias() += ws.sdir * ws.dw;
}

void validate_grid(const ModelSpec& model, const FlowGrid& grid) {
  if (grid.n_paths < 1) throw ConfigError("flow grid: n_paths must be >= 1");
  if (!(grid.time_step > 0)) throw ConfigError("flow grid: time_step must be positive");
  if (grid.anchors.empty()) throw ConfigError("flow grid: at least one anchor is required");
  if (grid.record_times.empty()) throw ConfigError("flow grid: record_times must be nonempty");
  double max_s = 0.0;
  for (const auto& a : grid.anchors) {
    if (a.s < 0 || a.s > model.horizon) throw ConfigError("flow grid: anchor s outside [0, T]");
    if (a.x.size() != model.dim_state) throw ConfigError("flow grid: anchor dimension mismatch");
    if (!model.domain_cal_O(a.x)) {
      throw ConfigError("flow grid: anchor start outside the state domain: " + format_vec(a.x));
    }
    max_s = std::max(max_s, a.s);
    for (const auto& dir : grid.directions) {
      if (dir.v.size() != model.dim_state) {
        throw ConfigError("flow grid: direction dimension mismatch");
      }
      for (double y : dir.y_values) {
        if (y == 0.0) throw ConfigError("flow grid: perturbation offsets must be nonzero");
        if (!model.domain_cal_O(a.x + y * dir.v)) {
          throw ConfigError("flow grid: perturbed start outside the state domain: " +
                            format_vec(a.x + y * dir.v));
        }
      }
    }
  }
  double prev = -kInf;
  for (double t : grid.record_times) {
    if (t < max_s - 1e-12 || t > model.horizon + 1e-12) {
      throw ConfigError("flow grid: record time " + format_g17(t) +
                        " outside [max anchor s, T]");
    }
    if (t <= prev) throw ConfigError("flow grid: record_times must be strictly increasing");
    prev = t;
  }
}

}  // namespace

std::string scheme_name(Scheme s) {
  return s == Scheme::euler_maruyama ? "euler_maruyama" : "tamed_euler";
}

std::string exit_policy_name(ExitPolicy p) { return p == ExitPolicy::freeze ? "freeze" : "reject"; }

int PathEnsemble::find_anchor(int base, int direction, int y_index) const {
  for (size_t i = 0; i < sim_anchors.size(); ++i) {
    const auto& a = sim_anchors[i];
    if (a.base == base && a.direction == direction && a.y_index == y_index) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

long PathEnsemble::n_exited(int sim_anchor) const {
  long n = 0;
  for (long e : exit_step[static_cast<size_t>(sim_anchor)]) n += (e >= 0);
  return n;
}

Vec brownian_increment(const ModelSpec& model, double time_step, uint64_t seed, long path,
                       long step) {
  Vec dw(model.dim_noise);
  fill_increment(model, std::sqrt(time_step), seed, path, step, dw);
  return dw;
}

PathEnsemble simulate_flow(const ModelSpec& model, const FlowGrid& grid, uint64_t seed) {
  validate_grid(model, grid);
  const int d = model.dim_state;
  const double dt = grid.time_step;
  const double sqrt_dt = std::sqrt(dt);

  PathEnsemble ens;
  ens.grid = grid;
  ens.seed = seed;
  ens.dim = d;
  for (double t : grid.record_times) ens.record_steps.push_back(aligned_step(t, dt, "record time"));

  for (size_t a = 0; a < grid.anchors.size(); ++a) {
    const auto& anchor = grid.anchors[a];
    SimAnchor sa;
    sa.base = static_cast<int>(a);
    sa.start_step = aligned_step(anchor.s, dt, "anchor start time");
    sa.s = anchor.s;
    sa.x0 = anchor.x;
    ens.sim_anchors.push_back(sa);
    for (size_t di = 0; di < grid.directions.size(); ++di) {
      const auto& dir = grid.directions[di];
      for (size_t yi = 0; yi < dir.y_values.size(); ++yi) {
        SimAnchor pa = sa;
        pa.direction = static_cast<int>(di);
        pa.y_index = static_cast<int>(yi);
        pa.x0 = anchor.x + dir.y_values[yi] * dir.v;
        ens.sim_anchors.push_back(pa);
      }
    }
  }

  const long n_rec = ens.n_records();
  const long n_anchors = static_cast<long>(ens.sim_anchors.size());
  ens.states.assign(static_cast<size_t>(n_anchors * n_rec), Mat(d, grid.n_paths));
  ens.exit_step.assign(static_cast<size_t>(n_anchors),
                       std::vector<long>(static_cast<size_t>(grid.n_paths), -1));

  const int n_threads = grid.n_threads > 0 ? grid.n_threads : default_thread_count();
  const long last_step = ens.record_steps.back();

  parallel_for(grid.n_paths, n_threads, [&](long path) {
    StepWorkspace ws(d, model.dim_noise);
    Vec x(d);
    for (long a = 0; a < n_anchors; ++a) {
      const SimAnchor& sa = ens.sim_anchors[static_cast<size_t>(a)];
      x = sa.x0;
      bool exited = false;
      long rec = 0;
      while (rec < n_rec && ens.record_steps[static_cast<size_t>(rec)] < sa.start_step) ++rec;
      for (long k = sa.start_step; k <= last_step; ++k) {
        if (rec < n_rec && ens.record_steps[static_cast<size_t>(rec)] == k) {
          ens.states[static_cast<size_t>(a * n_rec + rec)].col(path) = x;
          ++rec;
        }
        if (k == last_step) break;
        if (!exited) {
          fill_increment(model, sqrt_dt, seed, path, k, ws.dw);
          flow_step(model, grid.scheme, dt, x, ws);
          if (!ws.x_next.allFinite()) {
            throw SimulationError("non-finite state at anchor " + std::to_string(a) + ", path " +
                                  std::to_string(path) + ", step " + std::to_string(k));
          }
          if (!model.domain_cal_O(ws.x_next)) {
            exited = true;  // freeze at the last inside state
            ens.exit_step[static_cast<size_t>(a)][static_cast<size_t>(path)] = k + 1;
          } else {
            x = ws.x_next;
          }
        }
      }
    }
  });
  return ens;
}

DerivativeEnsemble simulate_variational(const ModelSpec& model, const PathEnsemble& ensemble,
                                        int sim_anchor, const Vec& v) {
  if (sim_anchor < 0 || sim_anchor >= static_cast<int>(ensemble.sim_anchors.size())) {
    throw ConfigError("simulate_variational: anchor index out of range");
  }
  if (v.size() != model.dim_state) throw ConfigError("simulate_variational: direction dimension");
  const SimAnchor& sa = ensemble.sim_anchors[static_cast<size_t>(sim_anchor)];
  const FlowGrid& grid = ensemble.grid;
  const int d = model.dim_state;
  const double dt = grid.time_step;
  const double sqrt_dt = std::sqrt(dt);
  const long n_rec = ensemble.n_records();

  DerivativeEnsemble der;
  der.mode = DerivativeEnsemble::Mode::variational;
  der.base_anchor = sim_anchor;
  der.v = v;
  der.y = 0;
  der.x0 = sa.x0;
  der.record_steps = ensemble.record_steps;
  der.record_times = grid.record_times;
  der.start_time = sa.s;
  der.n_paths = grid.n_paths;
  der.states.assign(static_cast<size_t>(n_rec), Mat(d, grid.n_paths));
  der.exit_step = ensemble.exit_step[static_cast<size_t>(sim_anchor)];

  const int n_threads = grid.n_threads > 0 ? grid.n_threads : default_thread_count();
  const long last_step = ensemble.record_steps.back();

  parallel_for(grid.n_paths, n_threads, [&](long path) {
    StepWorkspace ws(d, model.dim_noise);
    Vec x = sa.x0;
    Vec dvec = v;
    bool exited = false;
    long rec = 0;
    while (rec < n_rec && der.record_steps[static_cast<size_t>(rec)] < sa.start_step) ++rec;
    for (long k = sa.start_step; k <= last_step; ++k) {
      if (rec < n_rec && der.record_steps[static_cast<size_t>(rec)] == k) {
        der.states[static_cast<size_t>(rec)].col(path) = dvec;
        ++rec;
      }
      if (k == last_step) break;
      if (!exited) {
        fill_increment(model, sqrt_dt, ensemble.seed, path, k, ws.dw);
        const double drift_dt = flow_step(model, grid.scheme, dt, x, ws);
        variational_step(model, grid.scheme, drift_dt, x, dvec, ws);
        if (!ws.x_next.allFinite() || !ws.d_next.allFinite()) {
          throw SimulationError("non-finite variational state at path " + std::to_string(path) +
                                ", step " + std::to_string(k));
        }
        if (!model.domain_cal_O(ws.x_next)) {
          exited = true;  // flow froze here, so the derivative freezes too
        } else {
          x = ws.x_next;
          dvec = ws.d_next;
        }
      }
    }
  });
  return der;
}

DerivativeEnsemble difference_quotient(const PathEnsemble& ensemble, int base_anchor,
                                       int direction, int y_index) {
  const int base_idx = ensemble.find_anchor(base_anchor);
  const int pert_idx = ensemble.find_anchor(base_anchor, direction, y_index);
  if (base_idx < 0 || pert_idx < 0) {
    throw ConfigError(
        "difference_quotient: perturbed anchor not simulated (base, direction, y_index) = (" +
        std::to_string(base_anchor) + ", " + std::to_string(direction) + ", " +
        std::to_string(y_index) + ")");
  }
  const auto& dir = ensemble.grid.directions[static_cast<size_t>(direction)];
  const double y = dir.y_values[static_cast<size_t>(y_index)];
  const long n_rec = ensemble.n_records();

  DerivativeEnsemble der;
  der.mode = DerivativeEnsemble::Mode::quotient;
  der.base_anchor = base_idx;
  der.v = dir.v;
  der.y = y;
  der.x0 = ensemble.sim_anchors[static_cast<size_t>(base_idx)].x0;
  der.record_steps = ensemble.record_steps;
  der.record_times = ensemble.grid.record_times;
  der.start_time = ensemble.sim_anchors[static_cast<size_t>(base_idx)].s;
  der.n_paths = ensemble.grid.n_paths;
  der.states.reserve(static_cast<size_t>(n_rec));
  for (long r = 0; r < n_rec; ++r) {
    der.states.push_back((ensemble.state(pert_idx, r) - ensemble.state(base_idx, r)) / y);
  }
  der.exit_step.assign(static_cast<size_t>(der.n_paths), -1);
  for (long p = 0; p < der.n_paths; ++p) {
    const long e0 = ensemble.exit_step[static_cast<size_t>(base_idx)][static_cast<size_t>(p)];
    const long e1 = ensemble.exit_step[static_cast<size_t>(pert_idx)][static_cast<size_t>(p)];
    if (e0 >= 0 && e1 >= 0) {
      der.exit_step[static_cast<size_t>(p)] = std::min(e0, e1);
    } else if (e0 >= 0 || e1 >= 0) {
      der.exit_step[static_cast<size_t>(p)] = std::max(e0, e1);
    }
  }
  return der;
}

SinglePathResult simulate_one_path(const ModelSpec& model, Scheme scheme, double time_step,
                                   uint64_t seed, long path, double s, const Vec& x0,
                                   const std::vector<double>& record_times) {
  const int d = model.dim_state;
  const double dt = time_step;
  const double sqrt_dt = std::sqrt(dt);
  std::vector<long> record_steps;
  for (double t : record_times) record_steps.push_back(aligned_step(t, dt, "record time"));
  const long start = aligned_step(s, dt, "start time");
  const long last_step = record_steps.back();

  SinglePathResult out;
  StepWorkspace ws(d, model.dim_noise);
  Vec x = x0;
  bool exited = false;
  size_t rec = 0;
  while (rec < record_steps.size() && record_steps[rec] < start) ++rec;
  for (long k = start; k <= last_step; ++k) {
    if (rec < record_steps.size() && record_steps[rec] == k) {
      out.states.push_back(x);
      ++rec;
    }
    if (k == last_step) break;
    if (!exited) {
      fill_increment(model, sqrt_dt, seed, path, k, ws.dw);
      flow_step(model, scheme, dt, x, ws);
      if (!ws.x_next.allFinite()) {
        throw SimulationError("non-finite state at path " + std::to_string(path) + ", step " +
                              std::to_string(k));
      }
      if (!model.domain_cal_O(ws.x_next)) {
        exited = true;
        out.exit_step = k + 1;
      } else {
        x = ws.x_next;
      }
    }
  }
  return out;
}

}  // namespace flowlab
