#include <doctest.h>

#include <cmath>

#include "flowlab/checker.hpp"
#include "flowlab/sim.hpp"
#include "flowlab/zoo.hpp"

using namespace flowlab;

TEST_CASE("all built-in names resolve and validate") {
  const auto names = model_names();
  CHECK(names.size() == 6);
  for (const auto& name : names) {
    const NamedModel& nm = model_by_name(name);
    CHECK(nm.name == name);
    CHECK_NOTHROW(nm.spec.validate());
    CHECK(nm.box_lo.size() == nm.spec.dim_state);
    CHECK(nm.box_hi.size() == nm.spec.dim_state);
  }
}

TEST_CASE("unknown model names raise a lookup error listing the registry") {
  try {
    model_by_name("ornstein");
    CHECK(false);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("ou") != std::string::npos);
    CHECK(msg.find("cir") != std::string::npos);
  }
}

TEST_CASE("every certified model passes certify on its documented box") {
  for (const auto& name : model_names()) {
    const NamedModel& nm = model_by_name(name);
    if (!nm.certified) continue;
    SampleRegion region;
    region.box_lo = nm.box_lo;
    region.box_hi = nm.box_hi;
    region.n_points = 192;
    region.n_directions = 3;
    region.n_times = 3;
    const ConditionReport rep = certify(nm.spec, region, 20240801);
    CAPTURE(name);
    for (const auto& c : rep.conditions) {
      CAPTURE(c.condition_id);
      CAPTURE(c.min_margin);
      CHECK(c.passed);
    }
    CHECK(rep.all_passed);
  }
}

TEST_CASE("noise dimension matches the documented convention") {
  for (const auto& name : model_names()) {
    const NamedModel& nm = model_by_name(name);
    if (name == "cir") {
      CHECK(nm.spec.dim_noise == 1);
      CHECK(nm.spec.dim_state == 1);
    } else {
      CHECK(nm.spec.dim_noise == nm.spec.dim_state);
    }
  }
}

TEST_CASE("oracle sanity: OU and CIR mean/variance against a quick simulation") {
  for (const std::string name : {"ou", "cir"}) {
    const NamedModel& nm = model_by_name(name);
    FlowGrid g;
    g.anchors = {{0.0, Vec::Constant(1, 1.0)}};
    g.time_step = 1.0 / 512;
    g.n_paths = 20000;
    g.record_times = {1.0};
    const PathEnsemble ens = simulate_flow(nm.spec, g, 91);
    const auto row = ens.state(0, 0).row(0);
    const double mean = row.mean();
    const double var = (row.array() - mean).square().sum() / (row.cols() - 1);
    const double want_mean = nm.oracle.flow_mean(0.0, 1.0, Vec::Constant(1, 1.0))[0];
    const double want_var = nm.oracle.flow_variance(0.0, 1.0, Vec::Constant(1, 1.0))[0];
    CAPTURE(name);
    CHECK(mean == doctest::Approx(want_mean).epsilon(0.02));
    CHECK(var == doctest::Approx(want_var).epsilon(0.08));
  }
}

TEST_CASE("GBM derivative process equals the flow ratio") {
  const NamedModel& nm = model_by_name("gbm");
  CHECK(nm.oracle.derivative_equals_flow_ratio);
  FlowGrid g;
  g.anchors = {{0.0, Vec::Constant(1, 2.0)}};
  g.time_step = 1.0 / 128;
  g.n_paths = 64;
  g.record_times = {1.0};
  const PathEnsemble ens = simulate_flow(nm.spec, g, 8);
  const DerivativeEnsemble der = simulate_variational(nm.spec, ens, 0, Vec::Constant(1, 1.0));
  const Mat ratio = ens.state(0, 0) / 2.0;
  CHECK((der.state(0) - ratio).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("CIR is shipped as an uncertified boundary stressor") {
  const NamedModel& nm = model_by_name("cir");
  CHECK(!nm.certified);
  CHECK(describe(nm).find("NOT certified") != std::string::npos);
}

TEST_CASE("describe prints constants and oracle availability") {
  const std::string text = describe(model_by_name("ou"));
  CHECK(text.find("flow_mean yes") != std::string::npos);
  CHECK(text.find("c1 = 2") != std::string::npos);
  const std::string gl = describe(model_by_name("ginzburg_landau"));
  CHECK(gl.find("fit_constants regression") != std::string::npos);
}

TEST_CASE("frozen fit regression values reproduce bit-exactly") {
  const NamedModel& nm = model_by_name("ginzburg_landau");
  REQUIRE(!nm.fit_regression.empty());
  SampleRegion region;
  region.box_lo = nm.box_lo;
  region.box_hi = nm.box_hi;
  region.n_points = 256;
  region.n_directions = 4;
  region.n_times = 4;
  const FitResult fit = fit_constants(nm.spec, region, 20240801);
  CHECK(fit.c1_min == nm.fit_regression.at("c1_min"));
  CHECK(fit.c2_min == nm.fit_regression.at("c2_min"));
  CHECK(fit.c3_min == nm.fit_regression.at("c3_min"));
  CHECK(fit.beta0_min == nm.fit_regression.at("beta0_min"));
  CHECK(fit.phi_c1_min == nm.fit_regression.at("phi_c1_min"));
  CHECK(fit.phi_c0_min == nm.fit_regression.at("phi_c0_min"));
  // fitted constants never exceed the shipped ones (the shipped model passes)
  CHECK(fit.c1_min <= nm.spec.c1);
  CHECK(fit.c2_min <= nm.spec.c2);
  CHECK(fit.c3_min <= nm.spec.c3);
}
