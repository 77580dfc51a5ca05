#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "flowlab/checker.hpp"
#include "flowlab/estimate.hpp"
#include "flowlab/sim.hpp"

namespace flowlab {

// All floating-point payload values are serialized as decimal strings with 17
// significant digits, so reports round-trip bit-exactly and byte-compare
// across reruns.

std::string condition_report_json(const ConditionReport& report);
std::string bound_reports_json(const std::vector<BoundReport>& reports);

/// RFC-4180 CSV, '.' decimal: bound_id,lhs,ci_lo,ci_hi,rhs,satisfied.
void write_bound_table_csv(std::ostream& os, const std::vector<BoundReport>& reports);

void write_kolmogorov_balls_csv(std::ostream& os, const KolmogorovTable& table);
void write_kolmogorov_pairs_csv(std::ostream& os, const KolmogorovTable& table);

/// Columnar trajectory export: path,anchor_s,anchor_x_*,t,state_*.
void write_ensemble_csv(std::ostream& os, const PathEnsemble& ensemble);

// Compact binary dump: magic "FLOWLAB1", little-endian IEEE-754 doubles.
// Layout: magic, u32 dim, u32 n_anchors, u32 n_records, u64 n_paths,
// record_times, per anchor (s, x0), states (anchor-major, then record,
// column-major d x n_paths), exit steps (i64 per anchor x path).
void write_ensemble_binary(std::ostream& os, const PathEnsemble& ensemble);

struct BinaryEnsemble {
  uint32_t dim = 0, n_anchors = 0, n_records = 0;
  uint64_t n_paths = 0;
  std::vector<double> record_times;
  std::vector<double> anchor_s;
  std::vector<Vec> anchor_x0;
  std::vector<Mat> states;  // [anchor * n_records + record]
  std::vector<std::vector<int64_t>> exit_step;
};

BinaryEnsemble read_ensemble_binary(std::istream& is);

}  // namespace flowlab
