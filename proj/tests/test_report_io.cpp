#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "flowlab/report_io.hpp"
#include "flowlab/rng.hpp"
#include "flowlab/zoo.hpp"

using namespace flowlab;

TEST_CASE("format_g17 round-trips doubles exactly") {
  std::vector<double> values = {0.0, 1.0, -1.0, 0.1, 1e300, 1e-300, M_PI, std::exp(-1.0)};
  for (int i = 0; i < 200; ++i) {
    values.push_back(rng::normal(3, 7, static_cast<uint64_t>(i)) * std::pow(10.0, i % 40 - 20));
  }
  for (double v : values) {
    CHECK(std::stod(format_g17(v)) == v);
  }
  CHECK(format_g17(kInf) == "inf");
}

TEST_CASE("condition report JSON carries witnesses that re-evaluate") {
  const NamedModel& nm = model_by_name("ou");
  SampleRegion region;
  region.box_lo = Vec::Constant(1, -5.0);
  region.box_hi = Vec::Constant(1, 5.0);
  region.n_points = 32;
  ConditionReport rep = certify(nm.spec, region, 17);
  rep.model_name = "ou";
  const std::string text = condition_report_json(rep);
  const auto j = nlohmann::json::parse(text);
  CHECK(j["type"] == "condition_report");
  CHECK(j["model"] == "ou");
  CHECK(j["conditions"].size() == 7);
  for (const auto& jc : j["conditions"]) {
    ConditionRecord rec;
    rec.condition_id = jc["condition_id"].get<std::string>();
    rec.min_margin = std::stod(jc["min_margin"].get<std::string>());
    for (const auto& w : jc["witness"]) rec.witness.push_back(std::stod(w.get<std::string>()));
    const double again = reevaluate_witness(nm.spec, rec);
    CHECK(std::abs(again - rec.min_margin) <= 1e-12 * std::max(1.0, std::abs(rec.min_margin)));
  }
}

TEST_CASE("bound reports serialize to JSON and CSV with the documented header") {
  BoundReport r;
  r.bound_id = "lyapunov";
  r.lhs = 0.5;
  r.lhs_ci = {0.4, 0.6, 0.99};
  r.rhs = 1.0;
  r.satisfied = true;
  r.n_effective = 100;
  r.inputs["alpha"] = format_g17(0.25);

  const std::string text = bound_reports_json({r});
  const auto j = nlohmann::json::parse(text);
  CHECK(j["reports"][0]["bound_id"] == "lyapunov");
  CHECK(std::stod(j["reports"][0]["lhs"].get<std::string>()) == 0.5);

  std::ostringstream csv;
  write_bound_table_csv(csv, {r});
  CHECK(csv.str().rfind("bound_id,lhs,ci_lo,ci_hi,rhs,satisfied\r\n", 0) == 0);
  CHECK(csv.str().find("lyapunov,0.5,0.40000000000000002,0.59999999999999998,1,true") !=
        std::string::npos);
}

TEST_CASE("binary ensemble dump round-trips") {
  const NamedModel& nm = model_by_name("double_well");
  FlowGrid g;
  g.anchors = {{0.0, (Vec(2) << 0.5, -0.25).finished()}};
  g.directions = {{(Vec(2) << 1.0, 0.0).finished(), {0.5}}};
  g.time_step = 1.0 / 32;
  g.n_paths = 7;
  g.record_times = {0.5, 1.0};
  g.scheme = Scheme::tamed_euler;
  const PathEnsemble ens = simulate_flow(nm.spec, g, 123);

  std::stringstream buf;
  write_ensemble_binary(buf, ens);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == "FLOWLAB1");

  std::stringstream in(bytes);
  const BinaryEnsemble back = read_ensemble_binary(in);
  CHECK(back.dim == 2);
  CHECK(back.n_anchors == 2);
  CHECK(back.n_records == 2);
  CHECK(back.n_paths == 7);
  CHECK(back.record_times[1] == 1.0);
  for (size_t a = 0; a < 2; ++a) {
    for (size_t r = 0; r < 2; ++r) {
      const Mat& want = ens.states[a * 2 + r];
      const Mat& got = back.states[a * 2 + r];
      CHECK((want - got).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  std::stringstream bad("NOTMAGIC rest");
  CHECK_THROWS_AS(read_ensemble_binary(bad), ConfigError);
}

TEST_CASE("ensemble CSV has the documented columns") {
  const NamedModel& nm = model_by_name("ou");
  FlowGrid g;
  g.anchors = {{0.0, Vec::Constant(1, 1.0)}};
  g.time_step = 1.0 / 16;
  g.n_paths = 2;
  g.record_times = {1.0};
  const PathEnsemble ens = simulate_flow(nm.spec, g, 5);
  std::ostringstream os;
  write_ensemble_csv(os, ens);
  CHECK(os.str().rfind("path,anchor_s,anchor_x_0,t,state_0\r\n", 0) == 0);
}
