#include "modeuler/scheme.hpp"

#include <cmath>

namespace modeuler {

namespace {

constexpr double kDivergenceThreshold = 1e150;

bool diverged(const StateVec& x) {
  for (long i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::fabs(x[i]) > kDivergenceThreshold) return true;
  }
  return false;
}

// |x+dx|^p - |x|^p without cancellation. Routes through squared norms:
// s2 - s1 = 2<x,dx> + |dx|^2 is exact in the leading order of dx.
double norm_pow_diff(const StateVec& x, const StateVec& dx, double p, double s1, double s2,
                     double ds) {
  if (p == 0.0) return 0.0;
  const long m2 = static_cast<long>(p);
  if (static_cast<double>(m2) == p && m2 % 2 == 0) {
    // even integer p: difference of s^{p/2}
    const long m = m2 / 2;
    double h = 0.0;
    for (long i = 0; i < m; ++i) {
      double t = 1.0;
      for (long j = 0; j < i; ++j) t *= s2;
      for (long j = 0; j < m - 1 - i; ++j) t *= s1;
      h += t;
    }
    return ds * h;
  }
  const double n1 = std::sqrt(s1);
  const double n2 = std::sqrt(s2);
  if (n1 == 0.0 || n2 == 0.0) return std::pow(n2, p) - std::pow(n1, p);
  // a^p - b^p = b^p expm1(p log(a/b)); log(a/b) via log1p of the stable ratio
  const double dn = ds / (n1 + n2);  // n2 - n1
  return std::pow(n1, p) * std::expm1(p * std::log1p(dn / n1));
}

}  // namespace

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::em: return "em";
    case SchemeKind::tem_gamma: return "tem_gamma";
    case SchemeKind::pem: return "pem";
    case SchemeKind::tem_sqrt: return "tem_sqrt";
    case SchemeKind::custom: return "custom";
  }
  return "?";
}

SchemeKind scheme_kind_from_string(const std::string& s) {
  if (s == "em") return SchemeKind::em;
  if (s == "tem_gamma") return SchemeKind::tem_gamma;
  if (s == "pem") return SchemeKind::pem;
  if (s == "tem_sqrt") return SchemeKind::tem_sqrt;
  if (s == "custom") return SchemeKind::custom;
  throw std::invalid_argument("unknown scheme kind: " + s);
}

void validate(const SchemeSpec& spec) {
  if (!(spec.delta > 0.0 && spec.delta <= 1.0))
    throw std::invalid_argument("scheme: delta must lie in (0, 1]");
  const bool uses_gamma = spec.kind == SchemeKind::tem_gamma || spec.kind == SchemeKind::pem;
  if (uses_gamma && !(spec.gamma > 0.0 && spec.gamma < 0.5))
    throw std::invalid_argument("scheme: gamma must lie in (0, 1/2)");
  if (!std::isfinite(spec.sigma)) throw std::invalid_argument("scheme: sigma must be finite");
  if (spec.kind == SchemeKind::custom &&
      (!spec.custom.projection || !spec.custom.modified_drift))
    throw std::invalid_argument("scheme: custom kind needs both maps");
}

double phi_inverse(double s, double ell0) {
  if (!(ell0 > 0.0))
    throw std::invalid_argument("phi_inverse: ell0 = 0 makes phi constant (unsupported)");
  if (!(s >= 1.0)) throw std::invalid_argument("phi_inverse: s must be >= 1");
  return std::pow(s - 1.0, 1.0 / ell0);
}

StateVec project(const StateVec& x, double delta, double gamma, double ell0) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("project: delta outside (0, 1]");
  if (ell0 == 0.0) return x;  // degenerate PEM = EM
  const double cap = phi_inverse(std::pow(delta, -gamma), ell0);
  const double nrm = x.norm();
  if (nrm <= cap || nrm == 0.0) return x;
  return (cap / nrm) * x;
}

StateVec tame_gamma(const DriftModel& model, const StateVec& x, double delta, double gamma) {
  const double w = 1.0 + std::pow(delta, gamma) * std::pow(x.norm(), model.ell0);
  return eval_drift(model, x) / w;
}

StateVec tame_sqrt(const DriftModel& model, const StateVec& x, double delta) {
  const double w = std::sqrt(1.0 + delta * std::pow(x.norm(), 2.0 * model.ell0));
  return eval_drift(model, x) / w;
}

StateVec apply_projection(const SchemeSpec& spec, const StateVec& x) {
  switch (spec.kind) {
    case SchemeKind::pem:
      return project(x, spec.delta, spec.gamma, spec.model.ell0);
    case SchemeKind::custom:
      return spec.custom.projection(x);
    default:
      return x;
  }
}

StateVec modified_drift(const SchemeSpec& spec, const StateVec& x) {
  switch (spec.kind) {
    case SchemeKind::em:
    case SchemeKind::pem:
      return eval_drift(spec.model, x);
    case SchemeKind::tem_gamma:
      return tame_gamma(spec.model, x, spec.delta, spec.gamma);
    case SchemeKind::tem_sqrt:
      return tame_sqrt(spec.model, x, spec.delta);
    case SchemeKind::custom:
      return spec.custom.modified_drift(x);
  }
  throw std::logic_error("modified_drift: unreachable");
}

StateVec step(const SchemeSpec& spec, const StateVec& x, const StateVec& noise) {
  if (x.size() != noise.size()) throw std::invalid_argument("step: dimension mismatch");
  StateVec out = x;
  StepKernel(spec).advance(out, noise);
  return out;
}

StateVec projection_diff(const SchemeSpec& spec, const StateVec& x, const StateVec& dx) {
  if (spec.kind == SchemeKind::custom)
    return spec.custom.projection(x + dx) - spec.custom.projection(x);
  if (spec.kind != SchemeKind::pem || spec.model.ell0 == 0.0) return dx;
  const double cap = phi_inverse(std::pow(spec.delta, -spec.gamma), spec.model.ell0);
  const double s1 = x.squaredNorm();
  const double ds = 2.0 * x.dot(dx) + dx.squaredNorm();
  const double s2 = s1 + ds;
  const double n1 = std::sqrt(s1);
  const double n2 = std::sqrt(s2);
  if (n1 <= cap && n2 <= cap) return dx;
  if (n1 > cap && n2 > cap) {
    // cap*( (x+dx)/n2 - x/n1 ) = cap*( dx*n1 + x*(n1-n2) ) / (n1*n2)
    const double dn = ds / (n1 + n2);  // n2 - n1
    return (cap / (n1 * n2)) * (dx * n1 - x * dn);
  }
  if (n1 <= cap) {
    // x stays, x+dx is truncated
    return dx * (cap / n2) + x * (cap - n2) / n2;
  }
  // x truncated, x+dx stays
  return dx + x * (n1 - cap) / n1;
}

StateVec modified_drift_diff(const SchemeSpec& spec, const StateVec& z, const StateVec& dz) {
  const DriftModel& model = spec.model;
  switch (spec.kind) {
    case SchemeKind::em:
    case SchemeKind::pem:
      return drift_diff(model, z, dz);
    case SchemeKind::custom:
      return spec.custom.modified_drift(z + dz) - spec.custom.modified_drift(z);
    default:
      break;
  }
  const double s1 = z.squaredNorm();
  const double ds = 2.0 * z.dot(dz) + dz.squaredNorm();
  const double s2 = s1 + ds;
  const StateVec bd = drift_diff(model, z, dz);
  const StateVec b1 = eval_drift(model, z);
  if (spec.kind == SchemeKind::tem_gamma) {
    const double dg = std::pow(spec.delta, spec.gamma);
    const double r1 = std::pow(z.norm(), model.ell0);
    const double dr = norm_pow_diff(z, dz, model.ell0, s1, s2, ds);
    const double q1 = 1.0 + dg * r1;
    const double q2 = 1.0 + dg * (r1 + dr);
    // b2/q2 - b1/q1 = bd/q2 - b1 * dg * dr / (q1 q2)
    return bd / q2 - b1 * (dg * dr / (q1 * q2));
  }
  // tem_sqrt
  const double r1 = std::pow(z.norm(), 2.0 * model.ell0);
  const double dr = norm_pow_diff(z, dz, 2.0 * model.ell0, s1, s2, ds);
  const double q1 = std::sqrt(1.0 + spec.delta * r1);
  const double q2 = std::sqrt(1.0 + spec.delta * (r1 + dr));
  // 1/q2 - 1/q1 = (q1^2 - q2^2) / (q1 q2 (q1 + q2))
  return bd / q2 - b1 * (spec.delta * dr / (q1 * q2 * (q1 + q2)));
}

void step_coupled_diff(const SchemeSpec& spec, StateVec& x, StateVec& dx,
                       const StateVec& noise) {
  const StateVec px = apply_projection(spec, x);
  const StateVec pdx = projection_diff(spec, x, dx);
  const StateVec bdx = modified_drift_diff(spec, px, pdx);
  StateVec xn = px + modified_drift(spec, px) * spec.delta + spec.sigma * noise;
  if (diverged(xn)) throw TrajectoryDiverged(-1);
  dx = pdx + bdx * spec.delta;
  if (diverged(dx)) throw TrajectoryDiverged(-1);
  x = std::move(xn);
}

StepKernel::StepKernel(const SchemeSpec& spec) : spec_(spec) {
  const double ell0 = spec.model.ell0;
  if (spec.kind == SchemeKind::tem_gamma || spec.kind == SchemeKind::pem)
    dgamma_ = std::pow(spec.delta, spec.gamma);
  if (spec.kind == SchemeKind::pem && ell0 > 0.0)
    cap_ = phi_inverse(std::pow(spec.delta, -spec.gamma), ell0);
  radial_ = spec.kind != SchemeKind::custom;
  const long half = static_cast<long>(ell0 / 2.0);
  ell0_even_ = (2.0 * static_cast<double>(half) == ell0) && half <= 8;
  ell0_half_ = half;
}

double StepKernel::norm_pow_ell0(double s_squared) const {
  if (ell0_even_) {
    double p = 1.0;
    for (long i = 0; i < ell0_half_; ++i) p *= s_squared;
    return p;
  }
  return std::pow(std::sqrt(s_squared), spec_.model.ell0);
}

void StepKernel::advance(StateVec& x, const Eigen::Ref<const Eigen::VectorXd>& noise) const {
  if (!radial_) {
    const StateVec px = spec_.custom.projection(x);
    x = px + spec_.custom.modified_drift(px) * spec_.delta + spec_.sigma * noise;
    if (diverged(x)) throw TrajectoryDiverged(-1);
    return;
  }
  double s = x.squaredNorm();
  switch (spec_.kind) {
    case SchemeKind::pem: {
      if (cap_ > 0.0 && s > cap_ * cap_) {
        x *= cap_ / std::sqrt(s);
        s = cap_ * cap_;
      }
      x *= 1.0 + radial_drift_factor(spec_.model, s) * spec_.delta;
      break;
    }
    case SchemeKind::tem_gamma: {
      const double den = 1.0 + dgamma_ * norm_pow_ell0(s);
      x *= 1.0 + radial_drift_factor(spec_.model, s) * spec_.delta / den;
      break;
    }
    case SchemeKind::tem_sqrt: {
      const double p = norm_pow_ell0(s);
      const double den = std::sqrt(1.0 + spec_.delta * p * p);
      x *= 1.0 + radial_drift_factor(spec_.model, s) * spec_.delta / den;
      break;
    }
    default:
      x *= 1.0 + radial_drift_factor(spec_.model, s) * spec_.delta;
      break;
  }
  x += spec_.sigma * noise;
  if (diverged(x)) throw TrajectoryDiverged(-1);
}

std::vector<StateVec> simulate(const SchemeSpec& spec, const StateVec& x0, long n_steps,
                               const RngStream& stream, std::uint64_t trajectory,
                               long thinning) {
  if (n_steps < 0) throw std::invalid_argument("simulate: n_steps must be >= 0");
  if (thinning < 1) throw std::invalid_argument("simulate: thinning must be >= 1");
  std::vector<StateVec> out;
  out.reserve(static_cast<std::size_t>(n_steps / thinning) + 1);
  StateVec x = x0;
  out.push_back(x);
  const StepKernel kernel(spec);
  StateVec w(x0.size());
  for (long n = 0; n < n_steps; ++n) {
    fill_gaussian_increment(stream, static_cast<std::uint64_t>(n), trajectory, spec.delta, w);
    try {
      kernel.advance(x, w);
    } catch (const TrajectoryDiverged&) {
      throw TrajectoryDiverged(n);
    }
    if ((n + 1) % thinning == 0) out.push_back(x);
  }
  return out;
}

}  // namespace modeuler
