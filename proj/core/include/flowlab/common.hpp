#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flowlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Argument outside the admissible set (x not in the state domain, t >= T, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user-supplied coefficient returned a non-finite value; message carries the point.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration (grids, regions, constants, config files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside a path simulation; message carries (anchor, path, step).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Extended-real conventions: 1/inf = 0, inf treated as IEEE infinity throughout.
inline double ext_inv(double x) {
  if (x == kInf) return 0.0;
  return 1.0 / x;
}

/// pq/(p+q), the joint integrability exponent; q may be infinite (limit: p).
inline double lp_combine(double p, double q) {
  if (q == kInf) return p;
  if (p == kInf) return q;
  return p * q / (p + q);
}

/// Shortest decimal string with 17 significant digits (round-trip exact, locale-free).
std::string format_g17(double x);

std::string format_vec(const Vec& v);

/// Runs fn(i) for i in [0, n). Partition into fixed-size chunks whose results the
/// caller may index by i; chunking is independent of the thread count, so any
/// reduction over a preallocated output array is bitwise thread-count invariant.
void parallel_for(long n, int n_threads, const std::function<void(long)>& fn);

/// Process-wide default thread count used by sim/checker/estimate (default 1).
int default_thread_count();
void set_default_thread_count(int n);

}  // namespace flowlab
