#include "modeuler/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "modeuler/measure.hpp"
#include "modeuler/parallel.hpp"

namespace modeuler {

double eval_observable(const Observable& f, const StateVec& x) {
  switch (f.kind) {
    case ObservableKind::coordinate:
      if (f.index < 0 || f.index >= x.size())
        throw std::invalid_argument("observable: coordinate index out of range");
      return x[f.index];
    case ObservableKind::radial_power:
      return std::pow(x.norm(), f.power);
    case ObservableKind::polynomial: {
      const double s = x.squaredNorm();
      double acc = 0.0;
      double sp = s;
      for (double c : f.coeffs) {
        acc += c * sp;
        sp *= s;
      }
      return acc;
    }
  }
  throw std::logic_error("observable: unreachable");
}

double estimate_observable_norm(const Observable& f, int d, long pairs, double radius,
                                const RngStream& stream) {
  if (pairs < 1) throw std::invalid_argument("estimate_observable_norm: pairs >= 1");
  std::vector<double> vals(static_cast<std::size_t>(pairs), 0.0);
  parallel_for(static_cast<std::size_t>(pairs), [&](std::size_t i) {
    auto [x, y] = sample_pair(d, radius, stream, static_cast<std::uint64_t>(i));
    const double dn = (x - y).norm();
    if (dn == 0.0) return;
    const double w =
        1.0 + std::pow(x.norm(), f.growth_exponent) + std::pow(y.norm(), f.growth_exponent);
    vals[i] = std::fabs(eval_observable(f, x) - eval_observable(f, y)) / (w * dn);
  });
  double sup = 0.0;
  for (double v : vals) sup = std::max(sup, v);
  return sup;
}

SampleCloud sample_invariant(const SchemeSpec& spec, const StateVec& x0, long burn_in,
                             long n_samples, long thinning, const RngStream& stream,
                             std::uint64_t trajectory) {
  if (burn_in < 0) throw std::invalid_argument("sample_invariant: burn_in >= 0");
  if (n_samples < 1) throw std::invalid_argument("sample_invariant: n_samples >= 1");
  if (thinning < 1) throw std::invalid_argument("sample_invariant: thinning >= 1");
  const int d = static_cast<int>(x0.size());
  SampleCloud cloud;
  cloud.samples.resize(n_samples, d);
  cloud.meta.scheme = to_string(spec.kind);
  cloud.meta.delta = spec.delta;
  cloud.meta.sigma = spec.sigma;
  cloud.meta.burn_in = burn_in;
  cloud.meta.thinning = thinning;
  cloud.meta.seed = stream.seed;
  StateVec x = x0;
  long step_index = 0;
  const StepKernel kernel(spec);
  StateVec w(d);
  auto advance = [&](long steps) {
    for (long k = 0; k < steps; ++k) {
      fill_gaussian_increment(stream, static_cast<std::uint64_t>(step_index), trajectory,
                              spec.delta, w);
      try {
        kernel.advance(x, w);
      } catch (const TrajectoryDiverged&) {
        throw TrajectoryDiverged(step_index);
      }
      ++step_index;
    }
  };
  advance(burn_in);
  for (long i = 0; i < n_samples; ++i) {
    advance(thinning);
    cloud.samples.row(i) = x.transpose();
  }
  return cloud;
}

namespace {

long thinning_for(double delta, double thin_time) {
  return std::max<long>(1, std::lround(thin_time / delta));
}

double bootstrap_se_w2_1d(const SampleCloud& cloud, const SampleCloud& ref, long B,
                          const RngStream& stream) {
  const long n = cloud.n();
  std::vector<double> vals(static_cast<std::size_t>(B), 0.0);
  std::vector<double> ref_sorted(ref.samples.col(0).data(), ref.samples.col(0).data() + ref.n());
  std::sort(ref_sorted.begin(), ref_sorted.end());
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      const double u = stream.uniform(static_cast<std::uint64_t>(b),
                                      static_cast<std::uint64_t>(i), 0);
      const long idx = std::min<long>(n - 1, static_cast<long>(u * static_cast<double>(n)));
      xs[static_cast<std::size_t>(i)] = cloud.samples(idx, 0);
    }
    std::sort(xs.begin(), xs.end());
    double acc = 0.0;
    // ref may have a different size; match by quantile position
    for (long i = 0; i < n; ++i) {
      const long j = (ref.n() == n) ? i : std::min<long>(ref.n() - 1, i * ref.n() / n);
      const double t = xs[static_cast<std::size_t>(i)] - ref_sorted[static_cast<std::size_t>(j)];
      acc += t * t;
    }
    vals[b] = std::sqrt(acc / static_cast<double>(n));
  });
  double m = 0, m2 = 0;
  for (double v : vals) {
    m += v;
    m2 += v * v;
  }
  m /= static_cast<double>(B);
  return std::sqrt(std::max(0.0, m2 / static_cast<double>(B) - m * m));
}

double exact_w2(const SampleCloud& a, const SampleCloud& b, const RngStream& stream) {
  if (a.d() == 1) return w2_sorted_1d(a, b).value;
  if (a.n() <= 4096) return w2_assignment(a, b).value;
  return w2_sliced(a, b, 64, stream).value;
}

}  // namespace

LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& w) {
  if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
    throw std::invalid_argument("weighted_line_fit: bad input");
  double sw = 0, swx = 0, swy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
  }
  const double xbar = swx / sw, ybar = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
  }
  if (sxx == 0.0) throw std::invalid_argument("weighted_line_fit: degenerate abscissa");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  fit.slope_halfwidth = 1.96 / std::sqrt(sxx);  // weights = 1/se^2
  return fit;
}

RateScanResult rate_scan_invariant(const SchemeSpec& base, const RateScanParams& params,
                                   const RngStream& stream) {
  const auto& grid = params.delta_grid;
  if (grid.size() < 2) throw std::invalid_argument("rate_scan: need at least 2 grid deltas");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1]))
      throw std::invalid_argument("rate_scan: delta grid must be strictly decreasing");
  const double dmin = grid.back();
  if (!(params.delta_ref <= dmin / 8.0))
    throw std::invalid_argument("rate_scan: delta_ref must be at least 8x below min(grid)");

  RateScanResult result;
  result.delta_ref = params.delta_ref;

  // Burn-in policy shared by every run: 10/lambda time units, lambda fitted
  // from a synchronous-coupling probe at the same sigma.
  double burn_time = params.burn_time;
  if (burn_time <= 0.0) {
    SchemeSpec probe = base;
    probe.delta = dmin;
    const int d =
        1;  // probe in the first coordinate; the rate is radial for built-ins
    StateVec x0 = StateVec::Constant(d, 1.0);
    StateVec y0 = -x0;
    const long steps = static_cast<long>(std::ceil(3.0 / probe.delta));
    double rate = 0.5;
    try {
      const CouplingTrace tr =
          run_coupling(probe, x0, y0, steps, 64, stream.substream("burn-probe"));
      rate = std::max(0.05, fit_decay_rate(tr).rate);
    } catch (const std::exception&) {
      rate = 0.5;
    }
    burn_time = std::clamp(10.0 / rate, 2.0, 200.0);
  }
  result.burn_time = burn_time;

  const int d = 1;
  const StateVec x0 = StateVec::Zero(d);
  auto run_cloud = [&](double delta, double thin_time, std::uint64_t label) {
    SchemeSpec spec = base;
    spec.delta = delta;
    const long thin = thinning_for(delta, thin_time);
    const long burn = static_cast<long>(std::ceil(burn_time / delta));
    return sample_invariant(spec, x0, burn, params.n_samples, thin,
                            stream.substream(label), 0);
  };

  const SampleCloud ref = run_cloud(params.delta_ref, params.ref_thin_time, 1000);

  std::vector<double> lx, ly, lw;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    RateScanPoint pt;
    pt.delta = grid[i];
    try {
      const SampleCloud cloud = run_cloud(grid[i], params.thin_time, 2000 + i);
      pt.w2 = exact_w2(cloud, ref, stream.substream("slices"));
      pt.se = bootstrap_se_w2_1d(cloud, ref, params.bootstrap,
                                 stream.substream(3000 + i));
    } catch (const TrajectoryDiverged&) {
      pt.excluded = true;
    }
    result.points.push_back(pt);
    if (!pt.excluded && pt.w2 > 0.0) {
      lx.push_back(std::log(pt.delta));
      ly.push_back(std::log(pt.w2));
      const double se_log = std::max(1e-6, pt.se / pt.w2);
      lw.push_back(1.0 / (se_log * se_log));
    }
  }
  if (lx.size() < 3) throw InsufficientData("rate_scan: fewer than 3 surviving grid points");
  const LineFit fit = weighted_line_fit(lx, ly, lw);
  result.slope = fit.slope;
  result.slope_halfwidth = fit.slope_halfwidth;
  const RateConstants rc =
      rate_exponents(base.kind, base.gamma, base.model.ell0, base.model.ell0_star);
  result.expected_slope = rc.gamma_star;
  result.pass = result.slope > 0.0 &&
                std::fabs(result.slope - result.expected_slope) <= params.slope_tolerance;
  return result;
}

StrongErrorResult strong_error_finite_horizon(const SchemeSpec& base, double T,
                                              const std::vector<double>& delta_grid,
                                              double delta_ref, long paths,
                                              const RngStream& stream,
                                              double slope_tolerance) {
  if (!(T > 0.0)) throw std::invalid_argument("strong_error: T must be positive");
  if (paths < 1) throw std::invalid_argument("strong_error: paths >= 1");
  const long n_fine = std::lround(T / delta_ref);
  if (std::fabs(n_fine * delta_ref - T) > 1e-12 * T)
    throw std::invalid_argument("strong_error: delta_ref must divide T");
  std::vector<long> ratios;
  for (double dlt : delta_grid) {
    const long L = std::lround(dlt / delta_ref);
    if (std::fabs(L * delta_ref - dlt) > 1e-12 * dlt || n_fine % L != 0)
      throw std::invalid_argument("strong_error: grids must be nested multiples of delta_ref");
    ratios.push_back(L);
  }
  const int d = 1;
  const StateVec x0 = StateVec::Zero(d);
  const std::size_t G = delta_grid.size();
  const RngStream noise = stream.substream("strong-error");

  Eigen::MatrixXd err2(paths, static_cast<long>(G));
  std::vector<char> dead(static_cast<std::size_t>(paths), 0);
  SchemeSpec fine = base;
  fine.delta = delta_ref;
  const StepKernel fine_kernel(fine);
  std::vector<SchemeSpec> coarse_specs;
  std::vector<StepKernel> coarse_kernels;
  for (double dlt : delta_grid) {
    SchemeSpec c = base;
    c.delta = dlt;
    coarse_specs.push_back(c);
    coarse_kernels.emplace_back(coarse_specs.back());
  }
  parallel_for(static_cast<std::size_t>(paths), [&](std::size_t m) {
    // shared fine Brownian increments for this path
    Eigen::MatrixXd dw(d, n_fine);
    StateVec wbuf(d);
    for (long j = 0; j < n_fine; ++j) {
      fill_gaussian_increment(noise, static_cast<std::uint64_t>(j),
                              static_cast<std::uint64_t>(m), delta_ref, wbuf);
      dw.col(j) = wbuf;
    }
    try {
      StateVec xr = x0;
      for (long j = 0; j < n_fine; ++j) fine_kernel.advance(xr, dw.col(j));
      for (std::size_t g = 0; g < G; ++g) {
        const long L = ratios[g];
        StateVec xc = x0;
        StateVec acc(d);
        for (long j = 0; j < n_fine; j += L) {
          acc.setZero();
          for (long k = 0; k < L; ++k) acc += dw.col(j + k);
          coarse_kernels[g].advance(xc, acc);
        }
        err2(static_cast<long>(m), static_cast<long>(g)) = (xc - xr).squaredNorm();
      }
    } catch (const TrajectoryDiverged&) {
      dead[m] = 1;
    }
  });

  StrongErrorResult result;
  result.delta_ref = delta_ref;
  std::vector<double> lx, ly, lw;
  long alive = 0;
  for (long m = 0; m < paths; ++m)
    if (!dead[static_cast<std::size_t>(m)]) ++alive;
  for (std::size_t g = 0; g < G; ++g) {
    StrongErrorPoint pt;
    pt.delta = delta_grid[g];
    if (alive == 0) {
      pt.excluded = true;
      result.points.push_back(pt);
      continue;
    }
    double m1 = 0, m2 = 0;
    for (long m = 0; m < paths; ++m) {
      if (dead[static_cast<std::size_t>(m)]) continue;
      const double v = err2(m, static_cast<long>(g));
      m1 += v;
      m2 += v * v;
    }
    const double na = static_cast<double>(alive);
    m1 /= na;
    pt.mse = m1;
    pt.se = std::sqrt(std::max(0.0, m2 / na - m1 * m1) / na);
    result.points.push_back(pt);
    if (pt.mse > 0.0) {
      lx.push_back(std::log(pt.delta));
      ly.push_back(0.5 * std::log(pt.mse));
      const double se_log = std::max(1e-8, 0.5 * pt.se / pt.mse);
      lw.push_back(1.0 / (se_log * se_log));
    }
  }
  if (lx.size() < 3) throw InsufficientData("strong_error: fewer than 3 usable grid points");
  const LineFit fit = weighted_line_fit(lx, ly, lw);
  result.slope = fit.slope;
  result.slope_halfwidth = fit.slope_halfwidth;
  double beta = 1.0;
  if (base.kind == SchemeKind::tem_gamma) beta = base.gamma;
  result.expected_slope = std::min(1.0, beta);
  result.pass = std::fabs(result.slope - result.expected_slope) <= slope_tolerance;
  return result;
}

LlnResult lln_run(const SchemeSpec& spec, const Observable& f, const StateVec& x0, long n,
                  double reference_value, double envelope_C, double envelope_eps,
                  const RngStream& stream, std::uint64_t trajectory) {
  if (n < 1) throw std::invalid_argument("lln_run: n >= 1");
  const int d = static_cast<int>(x0.size());
  // log-spaced checkpoints plus every decade, always including n
  std::vector<long> ks;
  for (long k = 1; k < n; k = std::max(k + 1, static_cast<long>(std::llround(k * 1.25))))
    ks.push_back(k);
  for (long k = 10; k < n; k *= 10) ks.push_back(k);
  ks.push_back(n);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  RateConstants rc;
  bool have_rates = true;
  try {
    rc = rate_exponents(spec.kind, spec.gamma, spec.model.ell0, spec.model.ell0_star);
  } catch (const std::exception&) {
    have_rates = false;
  }
  const double bias_term =
      have_rates ? std::pow(spec.delta, rc.gamma_star) *
                       std::pow(static_cast<double>(d),
                                (rc.ell_star + f.growth_exponent) / 2.0)
                 : 0.0;

  LlnResult result;
  result.reference = reference_value;
  StateVec x = x0;
  double acc = 0.0;
  std::size_t next = 0;
  const StepKernel kernel(spec);
  StateVec w(d);
  for (long j = 0; j < n; ++j) {
    acc += eval_observable(f, x);
    const long k = j + 1;
    if (next < ks.size() && k == ks[next]) {
      LlnCheckpoint cp;
      cp.k = k;
      cp.average = acc / static_cast<double>(k);
      cp.error = std::fabs(cp.average - reference_value);
      cp.envelope = envelope_C * (std::pow(static_cast<double>(k), -0.5 + envelope_eps) /
                                      std::sqrt(spec.delta) +
                                  bias_term);
      result.checkpoints.push_back(cp);
      ++next;
    }
    fill_gaussian_increment(stream, static_cast<std::uint64_t>(j), trajectory, spec.delta, w);
    try {
      kernel.advance(x, w);
    } catch (const TrajectoryDiverged&) {
      throw TrajectoryDiverged(j);
    }
  }
  return result;
}

MomentAuditResult moment_audit(const SchemeSpec& spec, const StateVec& x0, long horizon_steps,
                               long paths, double c_star, double c_upper,
                               long checkpoint_every, const RngStream& stream) {
  if (paths < 1) throw std::invalid_argument("moment_audit: paths >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("moment_audit: checkpoint_every >= 1");
  const int d = static_cast<int>(x0.size());
  std::vector<long> cps;
  for (long n = 0; n <= horizon_steps; n += checkpoint_every) cps.push_back(n);
  if (cps.back() != horizon_steps) cps.push_back(horizon_steps);
  const long C = static_cast<long>(cps.size());

  Eigen::MatrixXd p2(paths, C), p4(paths, C);
  std::vector<long> died(static_cast<std::size_t>(paths), -1);
  const StepKernel kernel(spec);
  parallel_for(static_cast<std::size_t>(paths), [&](std::size_t m) {
    StateVec x = x0;
    StateVec w(d);
    long ci = 0;
    for (long n = 0; n <= horizon_steps; ++n) {
      if (ci < C && n == cps[static_cast<std::size_t>(ci)]) {
        const double s = x.squaredNorm();
        p2(static_cast<long>(m), ci) = s;
        p4(static_cast<long>(m), ci) = s * s;
        ++ci;
      }
      if (n == horizon_steps) break;
      fill_gaussian_increment(stream, static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(m), spec.delta, w);
      try {
        kernel.advance(x, w);
      } catch (const TrajectoryDiverged&) {
        died[m] = n;
        for (long k = ci; k < C; ++k) {
          p2(static_cast<long>(m), k) = 0.0;
          p4(static_cast<long>(m), k) = 0.0;
        }
        return;
      }
    }
  });

  MomentAuditResult result;
  for (long m = 0; m < paths; ++m) {
    if (died[static_cast<std::size_t>(m)] >= 0) {
      result.diverged = true;
      result.diverged_step = died[static_cast<std::size_t>(m)];
      break;
    }
  }
  result.all_pass = !result.diverged;
  if (result.diverged) return result;

  for (long c = 0; c < C; ++c) {
    MomentCheckpoint cp;
    cp.n = cps[static_cast<std::size_t>(c)];
    cp.t = cp.n * spec.delta;
    double s2 = 0, s2sq = 0, s4 = 0, s4sq = 0;
    for (long m = 0; m < paths; ++m) {
      s2 += p2(m, c);
      s2sq += p2(m, c) * p2(m, c);
      s4 += p4(m, c);
      s4sq += p4(m, c) * p4(m, c);
    }
    const double np = static_cast<double>(paths);
    cp.m2 = s2 / np;
    cp.se2 = std::sqrt(std::max(0.0, s2sq / np - cp.m2 * cp.m2) / np);
    cp.m4 = s4 / np;
    cp.se4 = std::sqrt(std::max(0.0, s4sq / np - cp.m4 * cp.m4) / np);
    cp.bound2 = moment_bound_et_star(x0, cp.n, spec.delta, spec.sigma, d, c_star, c_upper);
    cp.margin = cp.bound2 + 3.0 * cp.se2 - cp.m2;
    cp.pass = cp.margin >= 0.0;
    result.all_pass = result.all_pass && cp.pass;
    result.checkpoints.push_back(cp);
  }
  return result;
}

}  // namespace modeuler
