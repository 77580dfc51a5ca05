#include <doctest.h>

#include <cmath>

#include "flowlab/rng.hpp"
#include "flowlab/sim.hpp"
#include "flowlab/zoo.hpp"

using namespace flowlab;

namespace {

Vec scalar(double x) { return Vec::Constant(1, x); }

ModelSpec frozen_model() {
  ModelSpec m = model_by_name("ou").spec;
  m.drift = [](const Vec& x, Vec& out) { out = Vec::Zero(x.size()); };
  m.drift_jacobian = [](const Vec&, Mat& out) { out = Mat::Zero(1, 1); };
  m.diffusion = [](const Vec& x, Mat& out) { out = Mat::Zero(x.size(), x.size()); };
  m.diffusion_jacobian = [](const Vec&, const Vec&, Mat& out) { out = Mat::Zero(1, 1); };
  return m;
}

ModelSpec pure_diffusion_gbm() {
  // dX = X dW: martingale with E X_t = x0
  ModelSpec m = model_by_name("gbm").spec;
  m.drift = [](const Vec& x, Vec& out) { out = Vec::Zero(x.size()); };
  m.drift_jacobian = [](const Vec&, Mat& out) { out = Mat::Zero(1, 1); };
  m.diffusion = [](const Vec& x, Mat& out) { out = x.asDiagonal().toDenseMatrix(); };
  m.diffusion_jacobian = [](const Vec&, const Vec& h, Mat& out) {
    out = h.asDiagonal().toDenseMatrix();
  };
  return m;
}

FlowGrid basic_grid(double x0, long n_paths, double dt = 1.0 / 256) {
  FlowGrid g;
  g.anchors = {{0.0, scalar(x0)}};
  g.time_step = dt;
  g.n_paths = n_paths;
  g.record_times = {0.5, 1.0};
  return g;
}

}  // namespace

TEST_CASE("zero coefficients: the flow stays put") {
  const ModelSpec m = frozen_model();
  const PathEnsemble ens = simulate_flow(m, basic_grid(1.25, 64), 7);
  for (long r = 0; r < ens.n_records(); ++r) {
    CHECK((ens.state(0, r).array() == 1.25).all());
  }
}

TEST_CASE("OU mean matches the closed form within 3 standard errors") {
  const NamedModel& nm = model_by_name("ou");
  FlowGrid g = basic_grid(1.0, 20000, 1.0 / 1024);
  const PathEnsemble ens = simulate_flow(nm.spec, g, 2024);
  const auto row = ens.state(0, 1).row(0);
  const double mean = row.mean();
  const double sd = std::sqrt((row.array() - mean).square().sum() / (row.cols() - 1));
  const double se = sd / std::sqrt(static_cast<double>(row.cols()));
  CHECK(std::abs(mean - std::exp(-1.0)) < 3 * se + 2e-3 /* O(dt) scheme bias */);
}

TEST_CASE("pure-diffusion GBM is a martingale within 3 standard errors") {
  const ModelSpec m = pure_diffusion_gbm();
  const PathEnsemble ens = simulate_flow(m, basic_grid(1.0, 20000, 1.0 / 512), 5);
  const auto row = ens.state(0, 1).row(0);
  const double mean = row.mean();
  const double sd = std::sqrt((row.array() - mean).square().sum() / (row.cols() - 1));
  CHECK(std::abs(mean - 1.0) < 3 * sd / std::sqrt(static_cast<double>(row.cols())));
}

TEST_CASE("coupling: anchors share Brownian increments bitwise") {
  const NamedModel& nm = model_by_name("ou");
  FlowGrid g = basic_grid(1.0, 4);
  g.anchors.push_back({0.0, scalar(-2.0)});
  const PathEnsemble ens = simulate_flow(nm.spec, g, 11);
  // replaying the keyed increments gives the same values independent of anchor
  for (long p = 0; p < 4; ++p) {
    for (long k : {0L, 7L, 100L}) {
      const Vec a = brownian_increment(nm.spec, g.time_step, ens.seed, p, k);
      const Vec b = brownian_increment(nm.spec, g.time_step, ens.seed, p, k);
      CHECK(a[0] == b[0]);
    }
  }
  // and the linear OU flow difference is deterministic: X^x - X^y = (x-y)(1-dt)^k
  const double factor = std::pow(1.0 - g.time_step, 1.0 / g.time_step);
  const Mat diff = ens.state(0, 1) - ens.state(1, 1);
  for (long p = 0; p < 4; ++p) {
    CHECK(diff(0, p) == doctest::Approx(3.0 * factor).epsilon(1e-12));
  }
}

TEST_CASE("flow property: restart at a grid point reproduces the path bitwise") {
  const NamedModel& nm = model_by_name("ginzburg_landau");
  const double dt = 1.0 / 128;
  const std::vector<double> records = {0.5, 1.0};
  for (long path : {0L, 3L}) {
    const SinglePathResult full =
        simulate_one_path(nm.spec, Scheme::tamed_euler, dt, 77, path, 0.0, scalar(0.3), records);
    const SinglePathResult tail = simulate_one_path(nm.spec, Scheme::tamed_euler, dt, 77, path,
                                                    0.5, full.states[0], {1.0});
    CHECK(full.states[1][0] == tail.states[0][0]);
  }
}

TEST_CASE("determinism: thread count does not change the ensemble") {
  const NamedModel& nm = model_by_name("double_well");
  FlowGrid g;
  g.anchors = {{0.0, (Vec(2) << 0.5, -0.5).finished()}};
  g.time_step = 1.0 / 128;
  g.n_paths = 2000;
  g.record_times = {1.0};
  g.scheme = Scheme::tamed_euler;
  g.n_threads = 1;
  const PathEnsemble a = simulate_flow(nm.spec, g, 31);
  g.n_threads = 4;
  const PathEnsemble b = simulate_flow(nm.spec, g, 31);
  CHECK((a.state(0, 0) - b.state(0, 0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("variational process: OU is deterministic with the closed-form factor") {
  const NamedModel& nm = model_by_name("ou");
  FlowGrid g = basic_grid(1.0, 16, 1.0 / 1024);
  const PathEnsemble ens = simulate_flow(nm.spec, g, 3);
  const DerivativeEnsemble der = simulate_variational(nm.spec, ens, 0, scalar(1.0));
  const double want = std::pow(1.0 - g.time_step, 1024.0);
  for (long p = 0; p < 16; ++p) {
    CHECK(der.state(1)(0, p) == doctest::Approx(want).epsilon(1e-13));
  }
  // deterministic across paths
  CHECK(der.state(1).row(0).maxCoeff() == der.state(1).row(0).minCoeff());
}

TEST_CASE("variational process: constant coefficients give D = v") {
  ModelSpec m = frozen_model();
  m.diffusion = [](const Vec& x, Mat& out) { out = Mat::Identity(x.size(), x.size()); };
  const PathEnsemble ens = simulate_flow(m, basic_grid(0.0, 8), 9);
  const DerivativeEnsemble der = simulate_variational(m, ens, 0, scalar(0.7));
  CHECK((der.state(1).array() == 0.7).all());
}

TEST_CASE("linear flow: difference quotient equals the variational process pathwise") {
  const ModelSpec m = model_by_name("gbm").spec;  // a x dt + b x dW, linear
  FlowGrid g = basic_grid(1.0, 500, 1.0 / 256);
  g.directions = {{scalar(1.0), {1.0, 1e-3}}};
  const PathEnsemble ens = simulate_flow(m, g, 17);
  const DerivativeEnsemble var = simulate_variational(m, ens, 0, scalar(1.0));
  const DerivativeEnsemble q1 = difference_quotient(ens, 0, 0, 0);
  const DerivativeEnsemble q2 = difference_quotient(ens, 0, 0, 1);
  for (long rec = 0; rec < 2; ++rec) {
    const double rel_qq =
        ((q1.state(rec) - q2.state(rec)).cwiseAbs().maxCoeff()) /
        q1.state(rec).cwiseAbs().maxCoeff();
    const double rel_qv =
        ((q1.state(rec) - var.state(rec)).cwiseAbs().maxCoeff()) /
        var.state(rec).cwiseAbs().maxCoeff();
    CHECK(rel_qq <= 1e-9);  // quotient independent of y for a linear flow
    CHECK(rel_qv <= 1e-9);  // quotient equals the variational ensemble
  }
}

TEST_CASE("difference quotient is the exact arithmetic identity") {
  const NamedModel& nm = model_by_name("ginzburg_landau");
  FlowGrid g = basic_grid(0.5, 32, 1.0 / 128);
  g.scheme = Scheme::tamed_euler;
  g.directions = {{scalar(1.0), {0.25}}};
  const PathEnsemble ens = simulate_flow(nm.spec, g, 23);
  const DerivativeEnsemble q = difference_quotient(ens, 0, 0, 0);
  const int pert = ens.find_anchor(0, 0, 0);
  const Mat expect = (ens.state(pert, 1) - ens.state(0, 1)) / 0.25;
  CHECK((q.state(1) - expect).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(difference_quotient(ens, 0, 0, 3), ConfigError);
}

TEST_CASE("quotient converges to the variational process as y shrinks") {
  const NamedModel& nm = model_by_name("ginzburg_landau");
  FlowGrid g = basic_grid(0.5, 2000, 1.0 / 256);
  g.scheme = Scheme::tamed_euler;
  g.directions = {{scalar(1.0), {1e-1, 1e-2, 1e-3}}};
  const PathEnsemble ens = simulate_flow(nm.spec, g, 29);
  const DerivativeEnsemble var = simulate_variational(nm.spec, ens, 0, scalar(1.0));
  std::vector<double> dist;
  for (int yi = 0; yi < 3; ++yi) {
    const DerivativeEnsemble q = difference_quotient(ens, 0, 0, yi);
    const Mat diff = q.state(1) - var.state(1);
    dist.push_back(std::sqrt(diff.array().square().rowwise().sum().mean()));
  }
  // L2 distance decreasing, empirical order about 1 in y
  CHECK(dist[1] < dist[0]);
  CHECK(dist[2] < dist[1]);
  const double order = std::log10(dist[0] / dist[2]) / 2.0;
  CHECK(order >= 0.9);
}

TEST_CASE("discrete difference-quotient recursion matches the averaged-jacobian form") {
  // For plain Euler with a polynomial drift the lambda-averaged identity is
  // exact (fundamental theorem of calculus along the chord, quadrature exact
  // for quadratics), so the residual is pure rounding.
  const NamedModel& nm = model_by_name("ginzburg_landau");
  const ModelSpec& m = nm.spec;

  auto residual = [&](Scheme scheme, double dt, double y) {
    double worst = 0;
    const long path = 4;
    const uint64_t seed = 123;
    Vec x = scalar(0.4), xp = scalar(0.4 + y);
    const long n_steps = std::lround(0.5 / dt);
    for (long k = 0; k < n_steps; ++k) {
      const Vec dw = brownian_increment(m, dt, seed, path, k);
      Vec mu(1), mup(1);
      Mat sig(1, 1), sigp(1, 1);
      m.drift(x, mu);
      m.drift(xp, mup);
      m.diffusion(x, sig);
      m.diffusion(xp, sigp);
      double tame = dt, tamep = dt;
      if (scheme == Scheme::tamed_euler) {
        tame = dt / (1.0 + dt * mu.norm());
        tamep = dt / (1.0 + dt * mup.norm());
      }
      const Vec x_next = x + tame * mu + sig * dw;
      const Vec xp_next = xp + tamep * mup + sigp * dw;
      const double d_now = (xp[0] - x[0]) / y;
      const double d_next = (xp_next[0] - x_next[0]) / y;
      // lambda-averaged Jacobian along the chord between the coupled states
      const Mat jmu = averaged_drift_jacobian(m, xp, x);
      const double d_pred = d_now + dt * jmu(0, 0) * d_now;  // sigma' = 0 for this model
      worst = std::max(worst, std::abs(d_next - d_pred));
      x = x_next;
      xp = xp_next;
    }
    return worst;
  };

  CHECK(residual(Scheme::euler_maruyama, 1.0 / 128, 0.2) < 1e-12);

  // The tamed scheme's drift correction is the one-step Taylor remainder the
  // identity gives away; halving dt (and y) shrinks it.
  const double r0 = residual(Scheme::tamed_euler, 1.0 / 128, 0.2);
  const double r1 = residual(Scheme::tamed_euler, 1.0 / 256, 0.1);
  const double r2 = residual(Scheme::tamed_euler, 1.0 / 512, 0.05);
  CHECK(r0 > 1e-10);  // genuinely nonzero remainder
  CHECK(r1 < 0.6 * r0);
  CHECK(r2 < 0.6 * r1);
}

TEST_CASE("exit policy: CIR paths freeze at the last inside state") {
  const NamedModel& nm = model_by_name("cir");
  FlowGrid g;
  g.anchors = {{0.0, scalar(0.02)}};  // start near the boundary
  g.time_step = 1.0 / 16;             // coarse steps exit with high probability
  g.n_paths = 4000;
  g.record_times = {1.0};
  const PathEnsemble ens = simulate_flow(nm.spec, g, 13);
  const long exited = ens.n_exited(0);
  CHECK(exited > 0);
  // frozen states remain inside the domain
  for (long p = 0; p < g.n_paths; ++p) {
    CHECK(ens.state(0, 0)(0, p) > 0.0);
  }
}

TEST_CASE("non-finite states raise a simulation error") {
  ModelSpec m = model_by_name("ou").spec;
  m.drift = [](const Vec& x, Vec& out) {
    out.resize(1);
    out[0] = std::exp(x[0] * x[0]) * 1e300;  // overflows immediately
  };
  CHECK_THROWS_AS(simulate_flow(m, basic_grid(3.0, 2), 1), SimulationError);
}

TEST_CASE("grid validation rejects misaligned and out-of-domain inputs") {
  const NamedModel& nm = model_by_name("ou");
  FlowGrid g = basic_grid(1.0, 4);
  g.record_times = {0.5, 1.0 / 3.0};  // unsorted and unaligned
  CHECK_THROWS_AS(simulate_flow(nm.spec, g, 1), ConfigError);

  FlowGrid g2 = basic_grid(1.0, 4);
  g2.anchors[0].s = 0.1234567;  // not a multiple of dt
  CHECK_THROWS_AS(simulate_flow(nm.spec, g2, 1), ConfigError);

  const NamedModel& cir = model_by_name("cir");
  FlowGrid g3 = basic_grid(-1.0, 4);
  CHECK_THROWS_AS(simulate_flow(cir.spec, g3, 1), ConfigError);

  FlowGrid g4 = basic_grid(1.0, 4);
  g4.directions = {{scalar(1.0), {0.0}}};  // zero offset
  CHECK_THROWS_AS(simulate_flow(nm.spec, g4, 1), ConfigError);
}
