#include "flowlab/checker.hpp"

#include <cmath>
#include <optional>

#include "flowlab/rng.hpp"
#include "flowlab/sobol.hpp"

namespace flowlab {

namespace {

enum Family : uint64_t {
  kFamMonoC1 = 0,
  kFamMonoC0,
  kFamExpV0,
  kFamExpV1,
  kFamGrowthCoeff,
  kFamGrowthJac,
  kFamJacLip,
  kFamConvexity,
};

enum Substream : uint64_t { kSubSpatial = 0, kSubTime, kSubDirection };

uint64_t stream_id(uint64_t family, uint64_t sub) {
  return rng::kStreamTagSampler | (family << 4) | sub;
}

constexpr double kLambdaGrid[5] = {0.0, 0.25, 0.5, 0.75, 1.0};

/// Unit-cube point source for one (family, substream). Sobol points carry a
/// seed-derived digital shift so distinct seeds explore distinct nets.
class StreamSampler {
 public:
  StreamSampler(Sampler kind, int dim, uint64_t seed, uint64_t stream, long n_expected)
      : kind_(kind), dim_(dim), seed_(seed), stream_(stream) {
    if (kind_ == Sampler::sobol) {
      sobol_.emplace(dim, seed, stream, /*digital_shift=*/true);
    } else if (kind_ == Sampler::grid) {
      per_axis_ = 1;
      while (std::pow(static_cast<double>(per_axis_), dim_) < static_cast<double>(n_expected)) {
        ++per_axis_;
      }
    }
  }

  void next(double* out) {
    switch (kind_) {
      case Sampler::sobol:
        sobol_->next(out);
        break;
      case Sampler::uniform_random:
        for (int c = 0; c < dim_; ++c) {
          out[c] = rng::uniform01(seed_, stream_, pos_ * static_cast<uint64_t>(dim_) +
                                                      static_cast<uint64_t>(c));
        }
        break;
      case Sampler::grid: {
        uint64_t idx = pos_;
        for (int c = 0; c < dim_; ++c) {
          out[c] = (static_cast<double>(idx % static_cast<uint64_t>(per_axis_)) + 0.5) /
                   static_cast<double>(per_axis_);
          idx /= static_cast<uint64_t>(per_axis_);
        }
        break;
      }
    }
    ++pos_;
  }

 private:
  Sampler kind_;
  int dim_;
  uint64_t seed_, stream_;
  uint64_t pos_ = 0;
  std::optional<SobolSequence> sobol_;
  long per_axis_ = 1;
};

struct TupleSet {
  std::vector<Vec> points;  // n_tuples blocks of k points each
  long n_rejected = 0;
};

TupleSet draw_point_tuples(const ModelSpec& model, const SampleRegion& region, uint64_t seed,
                           uint64_t family, int k_points, long n_tuples,
                           bool require_distinct01) {
  const int d = model.dim_state;
  StreamSampler stream(region.sampler, k_points * d, seed, stream_id(family, kSubSpatial),
                       n_tuples);
  TupleSet out;
  out.points.reserve(static_cast<size_t>(n_tuples) * static_cast<size_t>(k_points));
  std::vector<double> u(static_cast<size_t>(k_points * d));
  std::vector<Vec> tuple(static_cast<size_t>(k_points), Vec(d));
  long accepted = 0, draws = 0;
  // The 50% rule counts individual points, so multi-point tuples do not
  // inflate the rejection rate.
  long points_checked = 0, points_bad = 0;
  while (accepted < n_tuples) {
    stream.next(u.data());
    ++draws;
    bool ok = true;
    for (int p = 0; p < k_points && ok; ++p) {
      Vec& x = tuple[static_cast<size_t>(p)];
      for (int c = 0; c < d; ++c) {
        x[c] = region.box_lo[c] + u[static_cast<size_t>(p * d + c)] *
                                      (region.box_hi[c] - region.box_lo[c]);
      }
      ++points_checked;
      ok = model.domain_cal_O(x);
      if (!ok) ++points_bad;
    }
    if (ok && require_distinct01 && tuple[0] == tuple[1]) ok = false;
    if (!ok) {
      ++out.n_rejected;
      if (points_checked >= 64 && 2 * points_bad > points_checked) {
        throw ConfigError(
            "sample region invalid: more than 50% of draws left the state domain");
      }
      if (draws > 200 * n_tuples + 4000) {
        throw ConfigError("sample region invalid: rejection loop did not terminate");
      }
      continue;
    }
    for (int p = 0; p < k_points; ++p) out.points.push_back(tuple[static_cast<size_t>(p)]);
    ++accepted;
  }
  return out;
}

std::vector<double> draw_times(const SampleRegion& region, uint64_t seed, uint64_t family,
                               long n, double horizon) {
  std::vector<double> out(static_cast<size_t>(n));
  if (region.sampler == Sampler::grid) {
    const int nt = std::max(1, region.n_times);
    for (long i = 0; i < n; ++i) {
      out[static_cast<size_t>(i)] =
          horizon * (static_cast<double>(i % nt) + 0.5) / static_cast<double>(nt);
    }
    return out;
  }
  StreamSampler stream(region.sampler, 1, seed, stream_id(family, kSubTime), n);
  double u;
  for (long i = 0; i < n; ++i) {
    stream.next(&u);
    out[static_cast<size_t>(i)] = u * horizon;  // u < 1, so t < T
  }
  return out;
}

std::vector<Vec> draw_directions(const ModelSpec& model, const SampleRegion& region,
                                 uint64_t seed, uint64_t family, long n) {
  const int d = model.dim_state;
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(n));
  if (region.sampler == Sampler::grid) {
    for (long i = 0; i < n; ++i) {
      Vec h = Vec::Zero(d);
      h[static_cast<Eigen::Index>((i / 2) % d)] = (i % 2 == 0) ? 1.0 : -1.0;
      out.push_back(std::move(h));
    }
    return out;
  }
  StreamSampler stream(region.sampler, d, seed, stream_id(family, kSubDirection), n);
  std::vector<double> u(static_cast<size_t>(d));
  for (long i = 0; i < n; ++i) {
    stream.next(u.data());
    Vec h(d);
    for (int c = 0; c < d; ++c) h[c] = rng::inverse_normal_cdf(u[static_cast<size_t>(c)]);
    const double norm = h.norm();
    if (norm == 0.0) {
      h.setZero();
      h[0] = 1.0;  // the midpoint draw maps to the zero vector
    } else {
      h /= norm;
    }
    out.push_back(std::move(h));
  }
  return out;
}

// All sampled inputs, generated identically for certify and fit_constants so
// that fitting on a region certifies on the same tuples.
struct FamilyInputs {
  TupleSet mono_c1, mono_c0, exp_v0, exp_v1, growth_coeff, growth_jac, quad;
  std::vector<double> t_mono_c1, t_mono_c0, t_exp_v0, t_exp_v1;
  std::vector<Vec> dirs;
  long n_rejected = 0;
};

FamilyInputs generate_inputs(const ModelSpec& model, const SampleRegion& region, uint64_t seed) {
  FamilyInputs in;
  const long n = region.n_points;
  in.mono_c1 = draw_point_tuples(model, region, seed, kFamMonoC1, 2, n, false);
  in.mono_c0 = draw_point_tuples(model, region, seed, kFamMonoC0, 2, n, true);
  in.exp_v0 = draw_point_tuples(model, region, seed, kFamExpV0, 1, n, false);
  in.exp_v1 = draw_point_tuples(model, region, seed, kFamExpV1, 1, n, false);
  in.growth_coeff = draw_point_tuples(model, region, seed, kFamGrowthCoeff, 1, n, false);
  in.growth_jac = draw_point_tuples(model, region, seed, kFamGrowthJac, 2, n, false);
  in.quad = draw_point_tuples(model, region, seed, kFamJacLip, 4, n, false);
  in.t_mono_c1 = draw_times(region, seed, kFamMonoC1, n * region.n_times, model.horizon);
  in.t_mono_c0 = draw_times(region, seed, kFamMonoC0, n * region.n_times, model.horizon);
  in.t_exp_v0 = draw_times(region, seed, kFamExpV0, n * region.n_times, model.horizon);
  in.t_exp_v1 = draw_times(region, seed, kFamExpV1, n * region.n_times, model.horizon);
  in.dirs = draw_directions(model, region, seed, kFamMonoC1, n * region.n_directions);
  in.n_rejected = in.mono_c1.n_rejected + in.mono_c0.n_rejected + in.exp_v0.n_rejected +
                  in.exp_v1.n_rejected + in.growth_coeff.n_rejected + in.growth_jac.n_rejected +
                  in.quad.n_rejected;
  return in;
}

void validate_region(const ModelSpec& model, const SampleRegion& region) {
  const int d = model.dim_state;
  if (region.box_lo.size() != d || region.box_hi.size() != d) {
    throw ConfigError("sample region: box dimension does not match the model");
  }
  for (int c = 0; c < d; ++c) {
    if (!(region.box_lo[c] <= region.box_hi[c])) {
      throw ConfigError("sample region: box_lo must be <= box_hi componentwise");
    }
  }
  if (region.n_points < 1) throw ConfigError("sample region: n_points must be >= 1");
  if (region.n_directions < 1) throw ConfigError("sample region: n_directions must be >= 1");
  if (region.n_times < 1) throw ConfigError("sample region: n_times must be >= 1");

  const int corner_axes = std::min(d, 10);
  Vec corner(d);
  for (long mask = 0; mask < (1L << corner_axes); ++mask) {
    for (int c = 0; c < d; ++c) {
      const bool hi = c < corner_axes && ((mask >> c) & 1L);
      corner[c] = hi ? region.box_hi[c] : region.box_lo[c];
    }
    if (!model.domain_cal_O(corner)) {
      throw ConfigError("sample region: box corner outside the state domain: " +
                        format_vec(corner));
    }
  }
}

struct FamilyResult {
  double min_margin = kInf;
  long argmin = -1;
  long n_evaluated = 0;
};

FamilyResult reduce_margins(const std::vector<double>& margins) {
  FamilyResult r;
  r.n_evaluated = static_cast<long>(margins.size());
  for (long i = 0; i < r.n_evaluated; ++i) {
    const double m = margins[static_cast<size_t>(i)];
    if (m < r.min_margin) {
      r.min_margin = m;
      r.argmin = i;
    }
  }
  return r;
}

void append_vec(std::vector<double>& out, const Vec& v) {
  out.insert(out.end(), v.data(), v.data() + v.size());
}

Vec read_vec(const std::vector<double>& w, size_t offset, int d) {
  Vec v(d);
  for (int c = 0; c < d; ++c) v[c] = w[offset + static_cast<size_t>(c)];
  return v;
}

}  // namespace

std::string sampler_name(Sampler s) {
  switch (s) {
    case Sampler::sobol: return "sobol";
    case Sampler::uniform_random: return "uniform-random";
    case Sampler::grid: return "grid";
  }
  return "?";
}

ConditionReport certify(const ModelSpec& model, const SampleRegion& region, uint64_t seed,
                        const CertifyOptions& options) {
  ConditionReport report;
  report.model_flags = model.validate();
  validate_region(model, region);
  report.seed = seed;
  report.region = region;
  report.tol_cert = options.tol_cert;
  report.flags["sampler"] = sampler_name(region.sampler);
  report.flags["T_minus_t_variant"] =
      model.time_weighting == TimeWeighting::horizon ? "false" : "true";
  report.flags["alpha_unsubscripted"] =
      model.alpha_reading == AlphaReading::per_index ? "per_index" : "alpha0";
  report.flags["note"] = "certification is a statement about the sampled tuples only";

  const int n_threads = options.n_threads > 0 ? options.n_threads : default_thread_count();
  const FamilyInputs in = generate_inputs(model, region, seed);
  report.n_rejected = in.n_rejected;

  const long n = region.n_points;
  const long nt = region.n_times;
  const long nd = region.n_directions;

  auto add_record = [&](const std::string& id, const std::vector<double>& margins,
                        const std::function<std::vector<double>(long)>& witness_of) {
    const FamilyResult r = reduce_margins(margins);
    ConditionRecord rec;
    rec.condition_id = id;
    rec.n_evaluated = r.n_evaluated;
    rec.min_margin = r.min_margin;
    if (r.argmin >= 0) rec.witness = witness_of(r.argmin);
    rec.passed = rec.min_margin >= -options.tol_cert;
    report.conditions.push_back(std::move(rec));
  };

  {  // C^1 local monotonicity over (t, x, y, h)
    std::vector<double> margins(static_cast<size_t>(n * nt * nd));
    parallel_for(n * nt * nd, n_threads, [&](long e) {
      const long i = e / (nt * nd), j = (e / nd) % nt, k = e % nd;
      margins[static_cast<size_t>(e)] = monotonicity_margin_c1(
          model, in.t_mono_c1[static_cast<size_t>(i * nt + j)],
          in.mono_c1.points[static_cast<size_t>(2 * i)],
          in.mono_c1.points[static_cast<size_t>(2 * i + 1)],
          in.dirs[static_cast<size_t>(i * nd + k)]);
    });
    add_record("mono_c1", margins, [&](long e) {
      const long i = e / (nt * nd), j = (e / nd) % nt, k = e % nd;
      std::vector<double> w{in.t_mono_c1[static_cast<size_t>(i * nt + j)]};
      append_vec(w, in.mono_c1.points[static_cast<size_t>(2 * i)]);
      append_vec(w, in.mono_c1.points[static_cast<size_t>(2 * i + 1)]);
      append_vec(w, in.dirs[static_cast<size_t>(i * nd + k)]);
      return w;
    });
  }

  {  // C^0 monotonicity over (t, x, y)
    std::vector<double> margins(static_cast<size_t>(n * nt));
    parallel_for(n * nt, n_threads, [&](long e) {
      const long i = e / nt, j = e % nt;
      margins[static_cast<size_t>(e)] = monotonicity_margin_c0(
          model, in.t_mono_c0[static_cast<size_t>(i * nt + j)],
          in.mono_c0.points[static_cast<size_t>(2 * i)],
          in.mono_c0.points[static_cast<size_t>(2 * i + 1)]);
    });
    add_record("mono_c0", margins, [&](long e) {
      const long i = e / nt, j = e % nt;
      std::vector<double> w{in.t_mono_c0[static_cast<size_t>(i * nt + j)]};
      append_vec(w, in.mono_c0.points[static_cast<size_t>(2 * i)]);
      append_vec(w, in.mono_c0.points[static_cast<size_t>(2 * i + 1)]);
      return w;
    });
  }

  for (int which = 0; which < 2; ++which) {  // Lyapunov exponential-moment margins
    const TupleSet& pts = which == 0 ? in.exp_v0 : in.exp_v1;
    const std::vector<double>& times = which == 0 ? in.t_exp_v0 : in.t_exp_v1;
    std::vector<double> margins(static_cast<size_t>(n * nt));
    parallel_for(n * nt, n_threads, [&](long e) {
      const long i = e / nt, j = e % nt;
      margins[static_cast<size_t>(e)] =
          exp_moment_margin(model, which, times[static_cast<size_t>(i * nt + j)],
                            pts.points[static_cast<size_t>(i)]);
    });
    add_record(which == 0 ? "exp_moment_v0" : "exp_moment_v1", margins, [&](long e) {
      const long i = e / nt, j = e % nt;
      std::vector<double> w{times[static_cast<size_t>(i * nt + j)]};
      append_vec(w, pts.points[static_cast<size_t>(i)]);
      return w;
    });
  }

  {  // coefficient growth
    std::vector<double> margins(static_cast<size_t>(n));
    parallel_for(n, n_threads, [&](long i) {
      const Vec& x = in.growth_coeff.points[static_cast<size_t>(i)];
      margins[static_cast<size_t>(i)] = growth_margins(model, x, x).coeff_growth;
    });
    add_record("growth_coeff", margins, [&](long i) {
      std::vector<double> w;
      append_vec(w, in.growth_coeff.points[static_cast<size_t>(i)]);
      return w;
    });
  }

  {  // averaged-Jacobian growth
    std::vector<double> margins(static_cast<size_t>(n));
    parallel_for(n, n_threads, [&](long i) {
      margins[static_cast<size_t>(i)] =
          growth_margins(model, in.growth_jac.points[static_cast<size_t>(2 * i)],
                         in.growth_jac.points[static_cast<size_t>(2 * i + 1)])
              .jacobian_growth;
    });
    add_record("growth_jacobian", margins, [&](long i) {
      std::vector<double> w;
      append_vec(w, in.growth_jac.points[static_cast<size_t>(2 * i)]);
      append_vec(w, in.growth_jac.points[static_cast<size_t>(2 * i + 1)]);
      return w;
    });
  }

  {  // quadruple Jacobian-Lipschitz condition, lambda on the 5-point grid
    std::vector<double> margins(static_cast<size_t>(n * 5));
    parallel_for(n * 5, n_threads, [&](long e) {
      const long i = e / 5, l = e % 5;
      margins[static_cast<size_t>(e)] = jacobian_lipschitz_margin(
          model, in.quad.points[static_cast<size_t>(4 * i)],
          in.quad.points[static_cast<size_t>(4 * i + 1)],
          in.quad.points[static_cast<size_t>(4 * i + 2)],
          in.quad.points[static_cast<size_t>(4 * i + 3)], kLambdaGrid[l]);
    });
    add_record("jacobian_lipschitz", margins, [&](long e) {
      const long i = e / 5, l = e % 5;
      std::vector<double> w{kLambdaGrid[l]};
      for (int p = 0; p < 4; ++p) {
        append_vec(w, in.quad.points[static_cast<size_t>(4 * i + p)]);
      }
      return w;
    });
  }

  report.all_passed = true;
  for (const auto& rec : report.conditions) report.all_passed = report.all_passed && rec.passed;
  return report;
}

double reevaluate_witness(const ModelSpec& model, const ConditionRecord& record) {
  const int d = model.dim_state;
  const auto& w = record.witness;
  const std::string& id = record.condition_id;
  if (id == "mono_c1") {
    return monotonicity_margin_c1(model, w[0], read_vec(w, 1, d),
                                  read_vec(w, 1 + static_cast<size_t>(d), d),
                                  read_vec(w, 1 + 2 * static_cast<size_t>(d), d));
  }
  if (id == "mono_c0") {
    return monotonicity_margin_c0(model, w[0], read_vec(w, 1, d),
                                  read_vec(w, 1 + static_cast<size_t>(d), d));
  }
  if (id == "exp_moment_v0") return exp_moment_margin(model, 0, w[0], read_vec(w, 1, d));
  if (id == "exp_moment_v1") return exp_moment_margin(model, 1, w[0], read_vec(w, 1, d));
  if (id == "growth_coeff") {
    const Vec x = read_vec(w, 0, d);
    return growth_margins(model, x, x).coeff_growth;
  }
  if (id == "growth_jacobian") {
    return growth_margins(model, read_vec(w, 0, d), read_vec(w, static_cast<size_t>(d), d))
        .jacobian_growth;
  }
  if (id == "jacobian_lipschitz") {
    return jacobian_lipschitz_margin(model, read_vec(w, 1, d),
                                     read_vec(w, 1 + static_cast<size_t>(d), d),
                                     read_vec(w, 1 + 2 * static_cast<size_t>(d), d),
                                     read_vec(w, 1 + 3 * static_cast<size_t>(d), d), w[0]);
  }
  throw ConfigError("unknown condition_id: " + id);
}

namespace {

// Round a fitted supremum up by 4 ulps so substituting it back keeps the
// sampled margins nonnegative in floating point. An exact zero stays zero.
double bump_up(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  return x + 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
}

}  // namespace

FitResult fit_constants(const ModelSpec& model, const SampleRegion& region, uint64_t seed) {
  model.validate();
  validate_region(model, region);
  const FamilyInputs in = generate_inputs(model, region, seed);
  const long n = region.n_points;
  const long nt = region.n_times;
  const long nd = region.n_directions;
  const int d = model.dim_state, m = model.dim_noise;

  FitResult fit;
  double c1 = 0, c2 = 0, c3 = 0;
  double beta_req[2] = {-kInf, -kInf};
  double alpha_req[2] = {0, 0};
  double phi_c1 = -kInf, phi_c0 = -kInf;

  {  // c1 over the coefficient-growth points
    Vec mu(d);
    Mat sigma(d, m);
    for (long i = 0; i < n; ++i) {
      const Vec& x = in.growth_coeff.points[static_cast<size_t>(i)];
      model.drift(x, mu);
      model.diffusion(x, sigma);
      const double num = std::max(mu.norm(), sigma.norm());
      c1 = std::max(c1, num / std::pow(1.0 + model.lyapunov_v0.value(x), model.gamma));
    }
  }

  for (long i = 0; i < n; ++i) {  // c2 over the averaged-Jacobian pairs
    const Vec& x = in.growth_jac.points[static_cast<size_t>(2 * i)];
    const Vec& y = in.growth_jac.points[static_cast<size_t>(2 * i + 1)];
    const double num = std::max(operator_norm(averaged_drift_jacobian(model, x, y)),
                                operator_norm(averaged_diffusion_jacobian(model, x, y)));
    const double den = std::pow(
        2.0 + model.lyapunov_v0.value(x) + model.lyapunov_v0.value(y), model.gamma);
    c2 = std::max(c2, num / den);
  }

  {  // c3 over quadruples and the lambda grid
    Mat ju(d, d), jw(d, d);
    for (long i = 0; i < n; ++i) {
      const Vec& x1 = in.quad.points[static_cast<size_t>(4 * i)];
      const Vec& x2 = in.quad.points[static_cast<size_t>(4 * i + 1)];
      const Vec& x3 = in.quad.points[static_cast<size_t>(4 * i + 2)];
      const Vec& x4 = in.quad.points[static_cast<size_t>(4 * i + 3)];
      const double vsum = model.lyapunov_v0.value(x1) + model.lyapunov_v0.value(x2) +
                          model.lyapunov_v0.value(x3) + model.lyapunov_v0.value(x4);
      for (double lambda : kLambdaGrid) {
        const Vec u = lambda * x1 + (1.0 - lambda) * x2;
        const Vec w = lambda * x3 + (1.0 - lambda) * x4;
        model.drift_jacobian(u, ju);
        model.drift_jacobian(w, jw);
        const double num = operator_norm(ju - jw);
        const double den = (lambda * (x1 - x3) + (1.0 - lambda) * (x2 - x4)).norm() *
                           std::pow(4.0 + vsum, model.gamma);
        if (den == 0.0) {
          if (num > 0.0) c3 = kInf;
        } else {
          c3 = std::max(c3, num / den);
        }
      }
    }
  }

  for (int which = 0; which < 2; ++which) {
    // Conservative Lyapunov fit: the time weight e^{-alpha t} is replaced by
    // its supremum 1, so the fitted pair works for every t in [0, T].
    const TupleSet& pts = which == 0 ? in.exp_v0 : in.exp_v1;
    const std::vector<double>& times = which == 0 ? in.t_exp_v0 : in.t_exp_v1;
    const auto& triple = which == 0 ? model.lyapunov_v0 : model.lyapunov_v1;
    const double alpha_model = which == 0 ? model.alpha0 : model.alpha1;
    const double beta_model = which == 0 ? model.beta0 : model.beta1;
    Vec grad(d);
    Mat sigma(d, m);
    for (long i = 0; i < n; ++i) {
      const Vec& x = pts.points[static_cast<size_t>(i)];
      const double gen = generator_apply(model, which == 0 ? WhichV::V0 : WhichV::V1, x);
      triple.gradient(x, grad);
      model.diffusion(x, sigma);
      const double grad_term = 0.5 * (sigma.transpose() * grad).squaredNorm();
      const double v = triple.value(x);
      for (long j = 0; j < nt; ++j) {
        const double vbar_term =
            which == 1 ? model.vbar(times[static_cast<size_t>(i * nt + j)], x) : 0.0;
        const double lhs = gen + grad_term + vbar_term;
        beta_req[which] = std::max(beta_req[which], lhs - alpha_model * v);
        const double need = lhs - beta_model;
        if (need > 0.0) {
          alpha_req[which] = v > 0.0 ? std::max(alpha_req[which], need / v) : kInf;
        }
      }
    }
  }

  {  // phi offsets required by the two monotonicity families
    for (long i = 0; i < n; ++i) {
      const Vec& x = in.mono_c1.points[static_cast<size_t>(2 * i)];
      const Vec& y = in.mono_c1.points[static_cast<size_t>(2 * i + 1)];
      for (long j = 0; j < nt; ++j) {
        const double t = in.t_mono_c1[static_cast<size_t>(i * nt + j)];
        for (long k = 0; k < nd; ++k) {
          const Vec& h = in.dirs[static_cast<size_t>(i * nd + k)];
          const double margin = monotonicity_margin_c1(model, t, x, y, h);
          phi_c1 = std::max(phi_c1, model.phi(t) - margin / h.squaredNorm());
        }
      }
    }
    for (long i = 0; i < n; ++i) {
      const Vec& x = in.mono_c0.points[static_cast<size_t>(2 * i)];
      const Vec& y = in.mono_c0.points[static_cast<size_t>(2 * i + 1)];
      for (long j = 0; j < nt; ++j) {
        const double t = in.t_mono_c0[static_cast<size_t>(i * nt + j)];
        const double margin = monotonicity_margin_c0(model, t, x, y);
        phi_c0 = std::max(phi_c0, model.phi(t) - margin / (x - y).squaredNorm());
      }
    }
  }

  fit.c1_min = bump_up(c1);
  fit.c2_min = bump_up(c2);
  fit.c3_min = bump_up(c3);
  fit.beta0_min = bump_up(beta_req[0]);
  fit.beta1_min = bump_up(beta_req[1]);
  fit.alpha0_min = bump_up(alpha_req[0]);
  fit.alpha1_min = bump_up(alpha_req[1]);
  fit.phi_c1_min = bump_up(phi_c1);
  fit.phi_c0_min = bump_up(phi_c0);
  fit.bounded = std::isfinite(fit.c1_min) && std::isfinite(fit.c2_min) &&
                std::isfinite(fit.c3_min) && std::isfinite(fit.alpha0_min) &&
                std::isfinite(fit.beta0_min) && std::isfinite(fit.alpha1_min) &&
                std::isfinite(fit.beta1_min);
  return fit;
}

ModelSpec apply_fit(const ModelSpec& model, const FitResult& fit) {
  ModelSpec out = model;
  out.c1 = fit.c1_min;
  out.c2 = fit.c2_min;
  out.c3 = fit.c3_min;
  out.beta0 = std::max(model.beta0, fit.beta0_min);
  out.beta1 = std::max(model.beta1, fit.beta1_min);
  const double phi_floor = std::max(fit.phi_c1_min, fit.phi_c0_min);
  const TimeFunction old_phi = model.phi;
  out.phi = [old_phi, phi_floor](double t) { return std::max(old_phi(t), phi_floor); };
  if (model.phi_constant) out.phi_constant = std::max(*model.phi_constant, phi_floor);
  return out;
}

bool sampled_convexity_ok(const ModelSpec& model, const SampleRegion& region, uint64_t seed,
                          long n_pairs) {
  SampleRegion r = region;
  r.n_points = n_pairs;
  const TupleSet pairs = draw_point_tuples(model, r, seed, kFamConvexity, 2, n_pairs, false);
  for (long i = 0; i < n_pairs; ++i) {
    const Vec& x = pairs.points[static_cast<size_t>(2 * i)];
    const Vec& y = pairs.points[static_cast<size_t>(2 * i + 1)];
    for (double lambda : {0.25, 0.5, 0.75}) {
      if (!model.domain_cal_O(lambda * x + (1.0 - lambda) * y)) return false;
    }
  }
  return true;
}

}  // namespace flowlab
