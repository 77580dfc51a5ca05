#include "flowlab/report_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace flowlab {

namespace {

using nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "binary ensemble dump assumes a little-endian host");

ordered_json num_array(const std::vector<double>& values) {
  ordered_json arr = ordered_json::array();
  for (double v : values) arr.push_back(format_g17(v));
  return arr;
}

ordered_json vec_array(const Vec& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(format_g17(v[i]));
  return arr;
}

void write_raw(std::ostream& os, const void* data, size_t bytes) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

template <typename T>
void write_pod(std::ostream& os, T value) {
  write_raw(os, &value, sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ConfigError("binary ensemble: truncated stream");
  return value;
}

}  // namespace

std::string condition_report_json(const ConditionReport& report) {
  ordered_json j;
  j["type"] = "condition_report";
  j["model"] = report.model_name;
  j["seed"] = report.seed;
  j["region"] = {
      {"box_lo", vec_array(report.region.box_lo)},
      {"box_hi", vec_array(report.region.box_hi)},
      {"n_points", report.region.n_points},
      {"n_directions", report.region.n_directions},
      {"n_times", report.region.n_times},
      {"sampler", sampler_name(report.region.sampler)},
  };
  j["tol_cert"] = format_g17(report.tol_cert);
  j["n_rejected"] = report.n_rejected;
  j["model_flags"] = report.model_flags;
  j["flags"] = report.flags;
  j["all_passed"] = report.all_passed;
  ordered_json conds = ordered_json::array();
  for (const auto& c : report.conditions) {
    ordered_json jc;
    jc["condition_id"] = c.condition_id;
    jc["n_evaluated"] = c.n_evaluated;
    jc["min_margin"] = format_g17(c.min_margin);
    jc["witness"] = num_array(c.witness);
    jc["passed"] = c.passed;
    conds.push_back(std::move(jc));
  }
  j["conditions"] = std::move(conds);
  return j.dump(2) + "\n";
}

std::string bound_reports_json(const std::vector<BoundReport>& reports) {
  ordered_json j;
  j["type"] = "bound_reports";
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json jr;
    jr["bound_id"] = r.bound_id;
    jr["lhs"] = format_g17(r.lhs);
    jr["lhs_ci"] = {{"lo", format_g17(r.lhs_ci.lo)},
                    {"hi", format_g17(r.lhs_ci.hi)},
                    {"level", format_g17(r.lhs_ci.level)}};
    jr["rhs"] = format_g17(r.rhs);
    jr["satisfied"] = r.satisfied;
    jr["overflow"] = r.overflow;
    if (r.overflow || std::isfinite(r.log_lhs)) jr["log_lhs"] = format_g17(r.log_lhs);
    jr["n_effective"] = r.n_effective;
    jr["inputs"] = r.inputs;
    arr.push_back(std::move(jr));
  }
  j["reports"] = std::move(arr);
  return j.dump(2) + "\n";
}

void write_bound_table_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
  os << "bound_id,lhs,ci_lo,ci_hi,rhs,satisfied\r\n";
  for (const auto& r : reports) {
    os << r.bound_id << ',' << format_g17(r.lhs) << ',' << format_g17(r.lhs_ci.lo) << ','
       << format_g17(r.lhs_ci.hi) << ',' << format_g17(r.rhs) << ','
       << (r.satisfied ? "true" : "false") << "\r\n";
  }
}

void write_kolmogorov_balls_csv(std::ostream& os, const KolmogorovTable& table) {
  os << "radius,n_pairs,sup_quotient,mean_quotient\r\n";
  for (const auto& b : table.balls) {
    os << format_g17(b.radius) << ',' << b.n_pairs << ',' << format_g17(b.sup_quotient) << ','
       << format_g17(b.mean_quotient) << "\r\n";
  }
}

void write_kolmogorov_pairs_csv(std::ostream& os, const KolmogorovTable& table) {
  os << "distance,lp_norm,quotient\r\n";
  for (const auto& row : table.rows) {
    os << format_g17(row.distance) << ',' << format_g17(row.lp_norm) << ','
       << format_g17(row.quotient) << "\r\n";
  }
}

void write_ensemble_csv(std::ostream& os, const PathEnsemble& ensemble) {
  const int d = ensemble.dim;
  os << "path,anchor_s";
  for (int c = 0; c < d; ++c) os << ",anchor_x_" << c;
  os << ",t";
  for (int c = 0; c < d; ++c) os << ",state_" << c;
  os << "\r\n";
  for (size_t a = 0; a < ensemble.sim_anchors.size(); ++a) {
    const auto& sa = ensemble.sim_anchors[a];
    for (long rec = 0; rec < ensemble.n_records(); ++rec) {
      const Mat& st = ensemble.state(static_cast<int>(a), rec);
      const double t = ensemble.grid.record_times[static_cast<size_t>(rec)];
      for (long p = 0; p < ensemble.grid.n_paths; ++p) {
        os << p << ',' << format_g17(sa.s);
        for (int c = 0; c < d; ++c) os << ',' << format_g17(sa.x0[c]);
        os << ',' << format_g17(t);
        for (int c = 0; c < d; ++c) os << ',' << format_g17(st(c, p));
        os << "\r\n";
      }
    }
  }
}

void write_ensemble_binary(std::ostream& os, const PathEnsemble& ensemble) {
  write_raw(os, "FLOWLAB1", 8);
  write_pod<uint32_t>(os, static_cast<uint32_t>(ensemble.dim));
  write_pod<uint32_t>(os, static_cast<uint32_t>(ensemble.sim_anchors.size()));
  write_pod<uint32_t>(os, static_cast<uint32_t>(ensemble.n_records()));
  write_pod<uint64_t>(os, static_cast<uint64_t>(ensemble.grid.n_paths));
  for (double t : ensemble.grid.record_times) write_pod<double>(os, t);
  for (const auto& sa : ensemble.sim_anchors) {
    write_pod<double>(os, sa.s);
    write_raw(os, sa.x0.data(), sizeof(double) * static_cast<size_t>(ensemble.dim));
  }
  for (const auto& st : ensemble.states) {
    write_raw(os, st.data(), sizeof(double) * static_cast<size_t>(st.size()));
  }
  for (const auto& exits : ensemble.exit_step) {
    for (long e : exits) write_pod<int64_t>(os, static_cast<int64_t>(e));
  }
}

BinaryEnsemble read_ensemble_binary(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "FLOWLAB1", 8) != 0) {
    throw ConfigError("binary ensemble: bad magic (expected FLOWLAB1)");
  }
  BinaryEnsemble e;
  e.dim = read_pod<uint32_t>(is);
  e.n_anchors = read_pod<uint32_t>(is);
  e.n_records = read_pod<uint32_t>(is);
  e.n_paths = read_pod<uint64_t>(is);
  e.record_times.resize(e.n_records);
  for (auto& t : e.record_times) t = read_pod<double>(is);
  e.anchor_s.resize(e.n_anchors);
  e.anchor_x0.resize(e.n_anchors, Vec(e.dim));
  for (uint32_t a = 0; a < e.n_anchors; ++a) {
    e.anchor_s[a] = read_pod<double>(is);
    for (uint32_t c = 0; c < e.dim; ++c) e.anchor_x0[a][c] = read_pod<double>(is);
  }
  e.states.assign(static_cast<size_t>(e.n_anchors) * e.n_records,
                  Mat(e.dim, static_cast<Eigen::Index>(e.n_paths)));
  for (auto& st : e.states) {
    is.read(reinterpret_cast<char*>(st.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(st.size())));
    if (!is) throw ConfigError("binary ensemble: truncated states");
  }
  e.exit_step.assign(e.n_anchors, std::vector<int64_t>(e.n_paths));
  for (auto& exits : e.exit_step) {
    for (auto& x : exits) x = read_pod<int64_t>(is);
  }
  return e;
}

}  // namespace flowlab
