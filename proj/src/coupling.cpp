#include "modeuler/coupling.hpp"

#include <cmath>

#include "modeuler/measure.hpp"
#include "modeuler/parallel.hpp"

namespace modeuler {

std::pair<StateVec, StateVec> couple_step(const SchemeSpec& spec, const StateVec& x,
                                          const StateVec& y, const StateVec& noise) {
  return {step(spec, x, noise), step(spec, y, noise)};
}

CouplingTrace run_coupling(const SchemeSpec& spec, const StateVec& x0, const StateVec& y0,
                           long n_steps, long pairs, const RngStream& stream,
                           const ContractionConstants* cc) {
  if (pairs < 1) throw std::invalid_argument("run_coupling: pairs must be >= 1");
  if (n_steps < 0) throw std::invalid_argument("run_coupling: n_steps must be >= 0");
  const int d = static_cast<int>(x0.size());
  const long len = n_steps + 1;
  // per-pair rows, reduced in pair order afterwards
  Eigen::MatrixXd sq(pairs, len), rho(pairs, len);
  std::vector<char> dead(static_cast<std::size_t>(pairs), 0);
  const double s2 = spec.sigma * spec.sigma;
  auto rho_of = [&](const StateVec& x, const StateVec& dxv) {
    if (!cc) return std::numeric_limits<double>::quiet_NaN();
    const double vsum = lyapunov_V(x.norm(), *cc, cc->R) + lyapunov_V((x + dxv).norm(), *cc, cc->R);
    return dxv.squaredNorm() * (s2 + vsum);
  };
  parallel_for(static_cast<std::size_t>(pairs), [&](std::size_t m) {
    StateVec x = x0;
    StateVec dx = y0 - x0;
    sq(static_cast<long>(m), 0) = dx.squaredNorm();
    rho(static_cast<long>(m), 0) = rho_of(x, dx);
    for (long n = 0; n < n_steps; ++n) {
      const StateVec w = gaussian_increment(stream, static_cast<std::uint64_t>(n),
                                            static_cast<std::uint64_t>(m), d, spec.delta);
      try {
        step_coupled_diff(spec, x, dx, w);
      } catch (const TrajectoryDiverged&) {
        dead[m] = 1;
        for (long k = n + 1; k < len; ++k) {
          sq(static_cast<long>(m), k) = 0.0;
          rho(static_cast<long>(m), k) = 0.0;
        }
        return;
      }
      sq(static_cast<long>(m), n + 1) = dx.squaredNorm();
      rho(static_cast<long>(m), n + 1) = rho_of(x, dx);
    }
  });

  CouplingTrace tr;
  tr.delta = spec.delta;
  tr.sigma = spec.sigma;
  tr.pairs = pairs;
  tr.scheme = to_string(spec.kind);
  long alive = 0;
  for (long m = 0; m < pairs; ++m)
    if (!dead[static_cast<std::size_t>(m)]) ++alive;
  tr.divergence_fraction = 1.0 - static_cast<double>(alive) / static_cast<double>(pairs);
  if (tr.divergence_fraction > 0.01)
    throw std::runtime_error("run_coupling: more than 1% of pairs diverged");
  tr.mean_sq_dist.resize(static_cast<std::size_t>(len));
  tr.se_sq_dist.resize(static_cast<std::size_t>(len));
  tr.mean_rho.resize(static_cast<std::size_t>(len));
  tr.se_rho.resize(static_cast<std::size_t>(len));
  tr.envelope.resize(static_cast<std::size_t>(len));
  for (long k = 0; k < len; ++k) {
    double m1 = 0, r1 = 0;
    const double na = static_cast<double>(alive);
    for (long m = 0; m < pairs; ++m) {
      if (dead[static_cast<std::size_t>(m)]) continue;
      m1 += sq(m, k);
      r1 += rho(m, k);
    }
    m1 /= na;
    r1 /= na;
    // centered second pass keeps the variance exact for degenerate samples
    double vs = 0, vr = 0;
    for (long m = 0; m < pairs; ++m) {
      if (dead[static_cast<std::size_t>(m)]) continue;
      vs += (sq(m, k) - m1) * (sq(m, k) - m1);
      vr += (rho(m, k) - r1) * (rho(m, k) - r1);
    }
    tr.mean_sq_dist[static_cast<std::size_t>(k)] = m1;
    tr.se_sq_dist[static_cast<std::size_t>(k)] = std::sqrt(vs / na / na);
    tr.mean_rho[static_cast<std::size_t>(k)] = r1;
    tr.se_rho[static_cast<std::size_t>(k)] = std::sqrt(vr / na / na);
  }
  if (cc) {
    const double rho0 = quasi_metric_rho(x0, y0, spec.sigma, *cc, cc->R);
    const double q = 1.0 - std::min(cc->lambda1, cc->lambda2) * spec.delta;
    double e = rho0;
    for (long k = 0; k < len; ++k) {
      tr.envelope[static_cast<std::size_t>(k)] = e;
      e *= q;
    }
  } else {
    std::fill(tr.envelope.begin(), tr.envelope.end(),
              std::numeric_limits<double>::quiet_NaN());
  }
  return tr;
}

namespace {

// Lambda(z1, z2) = |pi(z1)-pi(z2) + (b_d(pi(z1)) - b_d(pi(z2))) delta|^2,
// evaluated through the stable difference path.
double lambda_value(const SchemeSpec& spec, const StateVec& z1, const StateVec& z2) {
  const StateVec p1 = apply_projection(spec, z1);
  const StateVec pd = projection_diff(spec, z1, z2 - z1);
  const StateVec bd = modified_drift_diff(spec, p1, pd);
  return (pd + bd * spec.delta).squaredNorm();
}

}  // namespace

CheckResult lambda_bound_check(const SchemeConstants& sc, const SchemeSpec& spec,
                               const StateVec& z1, const StateVec& z2) {
  const double lam = lambda_value(spec, z1, z2);
  const double dn2 = (z1 - z2).squaredNorm();
  const bool inside = z1.norm() <= sc.R && z2.norm() <= sc.R;
  const double bound = inside
                           ? std::pow(1.0 + sc.C_R * spec.delta, 2.0) * dn2
                           : (1.0 - sc.K_R_star * spec.delta) * dn2;
  return CheckResult{lam <= bound, bound - lam};
}

CheckResult lyapunov_drift_check(const SchemeSpec& spec, const SchemeConstants& sc,
                                 const ContractionConstants& cc, const StateVec& x, int nodes) {
  const int d = static_cast<int>(x.size());
  if (d > 2) throw std::invalid_argument("lyapunov_drift_check: d <= 2 only");
  const StateVec px = apply_projection(spec, x);
  const StateVec xhat = px + modified_drift(spec, px) * spec.delta;
  const double std_dev = std::fabs(spec.sigma) * std::sqrt(spec.delta);
  const double ev = gauss_hermite_expectation(
      [&](const StateVec& z) { return lyapunov_V(z.norm(), cc, sc.R); }, xhat, std_dev, nodes);
  const double s2d = spec.sigma * spec.sigma * spec.delta;
  const double drop = (x.norm() <= sc.R) ? 3.0 * sc.C_R * s2d : -(3.0 / 8.0) * sc.K_R_star * s2d;
  const double bound = lyapunov_V(x.norm(), cc, sc.R) - drop;
  return CheckResult{ev <= bound, bound - ev};
}

CheckResult gamma_bound_check(const SchemeSpec& spec, const SchemeConstants& sc,
                              const ContractionConstants& cc, const StateVec& z1,
                              const StateVec& z2) {
  if (z1.size() > 2) throw std::invalid_argument("gamma_bound_check: d <= 2 only");
  const double lam = lambda_value(spec, z1, z2);
  const double s2 = spec.sigma * spec.sigma;
  const double in1 = z1.norm() <= sc.R ? 1.0 : 0.0;
  const double in2 = z2.norm() <= sc.R ? 1.0 : 0.0;
  const double gamma_val =
      lam * (s2 + lyapunov_V(z1.norm(), cc, sc.R) + lyapunov_V(z2.norm(), cc, sc.R) -
             3.0 * sc.C_R * s2 * spec.delta * (in1 + in2) +
             (3.0 / 8.0) * s2 * sc.K_R_star * spec.delta * (2.0 - in1 - in2));
  const double bound = (1.0 - std::min(cc.lambda1, cc.lambda2) * spec.delta) *
                       quasi_metric_rho(z1, z2, spec.sigma, cc, sc.R);
  return CheckResult{gamma_val <= bound, bound - gamma_val};
}

DecayFit fit_decay_rate(const CouplingTrace& trace, bool use_rho) {
  const auto& mean = use_rho ? trace.mean_rho : trace.mean_sq_dist;
  const auto& se = use_rho ? trace.se_rho : trace.se_sq_dist;
  std::vector<double> ts, logs;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    if (!(mean[k] > 0.0)) continue;
    if (mean[k] < 10.0 * se[k]) continue;
    ts.push_back(static_cast<double>(k) * trace.delta);
    logs.push_back(std::log(mean[k]));
  }
  const long n = static_cast<long>(ts.size());
  if (n < 3) throw InsufficientData("fit_decay_rate: fewer than 3 usable points");
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  for (long i = 0; i < n; ++i) {
    st += ts[static_cast<std::size_t>(i)];
    sy += logs[static_cast<std::size_t>(i)];
  }
  const double tbar = st / n, ybar = sy / n;
  for (long i = 0; i < n; ++i) {
    const double dt = ts[static_cast<std::size_t>(i)] - tbar;
    const double dy = logs[static_cast<std::size_t>(i)] - ybar;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (stt == 0.0) throw InsufficientData("fit_decay_rate: degenerate time grid");
  const double slope = sty / stt;
  DecayFit fit;
  fit.rate = -slope;
  fit.intercept = ybar - slope * tbar;
  fit.r2 = (syy == 0.0) ? 1.0 : (sty * sty) / (stt * syy);
  fit.points_used = n;
  return fit;
}

}  // namespace modeuler
