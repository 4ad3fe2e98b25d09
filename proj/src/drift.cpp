#include "modeuler/drift.hpp"

#include <algorithm>
#include <stdexcept>

#include "modeuler/parallel.hpp"

namespace modeuler {

namespace {

// Radial drifts are b(x) = g(|x|^2) x with g(s) = -sum_k 2 k c_k s^{k-1}.
double radial_g(const std::vector<double>& coeffs, double s) {
  double g = 0.0;
  double sp = 1.0;  // s^{k-1}
  for (std::size_t k = 1; k <= coeffs.size(); ++k) {
    g -= 2.0 * static_cast<double>(k) * coeffs[k - 1] * sp;
    sp *= s;
  }
  return g;
}

double radial_g_prime(const std::vector<double>& coeffs, double s) {
  double g = 0.0;
  double sp = 1.0;  // s^{k-2}
  for (std::size_t k = 2; k <= coeffs.size(); ++k) {
    g -= 2.0 * static_cast<double>(k) * static_cast<double>(k - 1) * coeffs[k - 1] * sp;
    sp *= s;
  }
  return g;
}

// (g(s2) - g(s1)) / (s2 - s1) via divided differences of the monomials; no
// cancellation even when s2 ~ s1.
double radial_g_divdiff(const std::vector<double>& coeffs, double s1, double s2) {
  double acc = 0.0;
  const long K = static_cast<long>(coeffs.size());
  for (long k = 2; k <= K; ++k) {
    // (s2^{k-1} - s1^{k-1})/(s2 - s1) = sum_{i=0}^{k-2} s2^i s1^{k-2-i}
    double h = 0.0;
    double s2p = 1.0;
    for (long i = 0; i <= k - 2; ++i) {
      double s1p = 1.0;
      for (long j = 0; j < k - 2 - i; ++j) s1p *= s1;
      h += s2p * s1p;
      s2p *= s2;
    }
    acc -= 2.0 * static_cast<double>(k) * coeffs[k - 1] * h;
  }
  return acc;
}

const std::vector<double>& model_coeffs(const DriftModel& model) {
  static const std::vector<double> dw = {-0.5, 0.25};
  if (model.kind == DriftKind::double_well) return dw;
  return model.coeffs;
}

}  // namespace

std::string to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::ou: return "ou";
    case DriftKind::double_well: return "double_well";
    case DriftKind::radial_polynomial: return "radial_polynomial";
  }
  return "?";
}

DriftKind drift_kind_from_string(const std::string& s) {
  if (s == "ou") return DriftKind::ou;
  if (s == "double_well") return DriftKind::double_well;
  if (s == "radial_polynomial" || s == "custom") return DriftKind::radial_polynomial;
  throw std::invalid_argument("unknown drift kind: " + s);
}

DriftModel make_ou(double kappa) {
  DriftModel m;
  m.kind = DriftKind::ou;
  m.kappa = kappa;
  m.ell0 = 0.0;
  m.ell0_star = 0.0;
  return m;
}

DriftModel make_double_well() {
  DriftModel m;
  m.kind = DriftKind::double_well;
  m.ell0 = 2.0;
  m.ell0_star = 1.0;
  return m;
}

DriftModel make_radial_polynomial(std::vector<double> coeffs) {
  if (coeffs.empty() || coeffs.back() <= 0.0)
    throw std::invalid_argument("radial polynomial needs a positive leading coefficient");
  DriftModel m;
  m.kind = DriftKind::radial_polynomial;
  m.coeffs = std::move(coeffs);
  const double K = static_cast<double>(m.coeffs.size());
  m.ell0 = std::max(0.0, 2.0 * K - 2.0);
  m.ell0_star = std::max(0.0, 2.0 * K - 3.0);
  return m;
}

StateVec eval_drift(const DriftModel& model, const StateVec& x) {
  if (model.kind == DriftKind::ou) return -model.kappa * x;
  const double s = x.squaredNorm();
  return radial_g(model_coeffs(model), s) * x;
}

double radial_drift_factor(const DriftModel& model, double s_squared) {
  if (model.kind == DriftKind::ou) return -model.kappa;
  return radial_g(model_coeffs(model), s_squared);
}

StateVec drift_diff(const DriftModel& model, const StateVec& x, const StateVec& dx) {
  if (x.size() != dx.size()) throw std::invalid_argument("drift_diff: dimension mismatch");
  if (model.kind == DriftKind::ou) return -model.kappa * dx;
  const auto& c = model_coeffs(model);
  const double s1 = x.squaredNorm();
  const double ds = 2.0 * x.dot(dx) + dx.squaredNorm();
  const double s2 = s1 + ds;
  // b(x+dx) - b(x) = g(s2) dx + (g(s2) - g(s1)) x, second factor via the
  // divided difference so every term is O(dx).
  return radial_g(c, s2) * dx + (ds * radial_g_divdiff(c, s1, s2)) * x;
}

Eigen::MatrixXd drift_jacobian(const DriftModel& model, const StateVec& x) {
  const long d = x.size();
  if (model.kind == DriftKind::ou)
    return -model.kappa * Eigen::MatrixXd::Identity(d, d);
  const auto& c = model_coeffs(model);
  const double s = x.squaredNorm();
  return radial_g(c, s) * Eigen::MatrixXd::Identity(d, d) +
         2.0 * radial_g_prime(c, s) * (x * x.transpose());
}

Eigen::MatrixXd drift_jacobian_fd(const DriftModel& model, const StateVec& x, double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("drift_jacobian_fd: fd_step must be positive");
  const long d = x.size();
  Eigen::MatrixXd J(d, d);
  for (long j = 0; j < d; ++j) {
    StateVec xp = x, xm = x;
    xp[j] += fd_step;
    xm[j] -= fd_step;
    J.col(j) = (eval_drift(model, xp) - eval_drift(model, xm)) / (2.0 * fd_step);
  }
  return J;
}

// b(x) = g(|x|^2) x for every built-in, so b(0) vanishes identically.
double drift_b0_norm(const DriftModel&) { return 0.0; }

AssumptionCertificate analytic_certificate(const DriftModel& model) {
  AssumptionCertificate cert;
  cert.ell0 = model.ell0;
  cert.ell0_star = model.ell0_star;
  if (model.kind == DriftKind::ou) {
    cert.L0 = model.kappa;
    cert.prov_L0 = Provenance::analytic;
    cert.L5 = model.kappa;
    cert.prov_L5 = Provenance::analytic;
    cert.R_star = 0.0;
    cert.L6 = 0.0;
    cert.prov_L6 = Provenance::analytic;
  } else if (model.kind == DriftKind::double_well) {
    // <x-y, x|x|^2 - y|y|^2> >= (|x|^2+|y|^2)|x-y|^2 / 2 in any dimension,
    // and |x|^2 + |y|^2 >= 4 outside the R* = 2 ball, so L5 = 1.
    cert.R_star = 2.0;
    cert.L5 = 1.0;
    cert.prov_L5 = Provenance::analytic;
  }
  return cert;
}

std::pair<StateVec, StateVec> sample_pair(int d, double radius, const RngStream& stream,
                                          std::uint64_t index) {
  auto ball_point = [&](std::uint64_t step, std::uint64_t base) {
    StateVec v(d);
    for (int i = 0; i < d; ++i)
      v[i] = stream.normal(index, step, base + static_cast<std::uint64_t>(i));
    const double nrm = v.norm();
    const double u = stream.uniform(index, step, base + static_cast<std::uint64_t>(d));
    const double r = radius * std::pow(u, 1.0 / static_cast<double>(d));
    if (nrm == 0.0) return StateVec(StateVec::Zero(d));
    return StateVec((r / nrm) * v);
  };
  StateVec x = ball_point(0, 0);
  const bool near = stream.uniform(index, 2, 0) < 0.2;
  StateVec y;
  if (near) {
    StateVec dir(d);
    for (int i = 0; i < d; ++i)
      dir[i] = stream.normal(index, 3, static_cast<std::uint64_t>(i));
    const double nrm = dir.norm();
    const double u = stream.uniform(index, 3, static_cast<std::uint64_t>(d));
    y = x;
    if (nrm > 0.0) y += (1e-3 * radius * u / nrm) * dir;
  } else {
    y = ball_point(1, 0);
  }
  return {std::move(x), std::move(y)};
}

namespace {

template <class Ratio>
double sampled_supremum(int d, long pairs, double radius, const RngStream& stream,
                        Ratio&& ratio, const char* what) {
  if (pairs < 1) throw std::invalid_argument("pair count must be >= 1");
  std::vector<double> vals(static_cast<std::size_t>(pairs),
                           -std::numeric_limits<double>::infinity());
  parallel_for(static_cast<std::size_t>(pairs), [&](std::size_t i) {
    auto [x, y] = sample_pair(d, radius, stream, static_cast<std::uint64_t>(i));
    const double dn = (x - y).norm();
    if (dn == 0.0) return;  // coincident pairs are skipped
    vals[i] = ratio(x, y, dn);
  });
  double sup = -std::numeric_limits<double>::infinity();
  for (double v : vals) sup = std::max(sup, v);
  if (!std::isfinite(sup)) throw EstimationDegenerate(std::string(what) + ": all pairs coincident");
  return sup;
}

}  // namespace

double estimate_A0(const DriftModel& model, int d, long pairs, double radius,
                   const RngStream& stream) {
  const double l0 = model.ell0;
  return sampled_supremum(d, pairs, radius, stream,
                          [&](const StateVec& x, const StateVec& y, double dn) {
                            const double w = 1.0 + std::pow(x.norm(), l0) + std::pow(y.norm(), l0);
                            return (eval_drift(model, x) - eval_drift(model, y)).norm() / (w * dn);
                          },
                          "estimate_A0");
}

double estimate_A2(const DriftModel& model, int d, long pairs, double radius,
                   const RngStream& stream) {
  const double l0 = model.ell0;
  return sampled_supremum(
      d, pairs, radius, stream,
      [&](const StateVec& x, const StateVec& y, double dn) {
        const double xl = std::pow(x.norm(), l0);
        const double yl = std::pow(y.norm(), l0);
        const double w = 1.0 + xl + yl + xl * yl;
        return (eval_drift(model, x) * yl - eval_drift(model, y) * xl).norm() / (w * dn);
      },
      "estimate_A2");
}

std::vector<A3Violation> check_A3(const DriftModel& model, int d, double R_star,
                                  double L2, double L3, double L4, long pairs,
                                  double radius, const RngStream& stream) {
  if (!(radius > R_star)) throw std::invalid_argument("check_A3: radius must exceed R_star");
  if (pairs < 1) throw std::invalid_argument("check_A3: pairs must be >= 1");
  const double l0 = model.ell0;
  std::vector<A3Violation> report;
  std::vector<char> qualified(static_cast<std::size_t>(pairs), 0);
  std::vector<A3Violation> slots1(static_cast<std::size_t>(pairs));
  std::vector<A3Violation> slots2(static_cast<std::size_t>(pairs));
  std::vector<char> bad1(static_cast<std::size_t>(pairs), 0), bad2(static_cast<std::size_t>(pairs), 0);
  parallel_for(static_cast<std::size_t>(pairs), [&](std::size_t i) {
    auto [x, y] = sample_pair(d, radius, stream, static_cast<std::uint64_t>(i));
    if (x.norm() <= R_star && y.norm() <= R_star) return;
    const double dn2 = (x - y).squaredNorm();
    if (dn2 == 0.0) return;
    qualified[i] = 1;
    const double xl = std::pow(x.norm(), l0);
    const double yl = std::pow(y.norm(), l0);
    const StateVec diff = x - y;
    const double inner1 = diff.dot(eval_drift(model, x) - eval_drift(model, y));
    const double bound1 = -L2 * (1.0 + xl + yl) * dn2;
    if (inner1 > bound1) {
      bad1[i] = 1;
      slots1[i] = A3Violation{x, y, 1, bound1 - inner1};
    }
    const double inner2 = diff.dot(eval_drift(model, x) * yl - eval_drift(model, y) * xl);
    const double bound2 = (L3 * (1.0 + xl + yl) - L4 * xl * yl) * dn2;
    if (inner2 > bound2) {
      bad2[i] = 1;
      slots2[i] = A3Violation{x, y, 2, bound2 - inner2};
    }
  });
  bool any = false;
  for (char q : qualified) any = any || q;
  if (!any) throw EstimationDegenerate("check_A3: no sampled pair in the qualifying region");
  for (std::size_t i = 0; i < static_cast<std::size_t>(pairs); ++i) {
    if (bad1[i]) report.push_back(std::move(slots1[i]));
    if (bad2[i]) report.push_back(std::move(slots2[i]));
  }
  return report;
}

double estimate_A4_L5(const DriftModel& model, int d, double R_star, long pairs,
                      double radius, const RngStream& stream) {
  if (!(radius > R_star)) throw std::invalid_argument("estimate_A4_L5: radius must exceed R_star");
  if (pairs < 1) throw std::invalid_argument("estimate_A4_L5: pairs must be >= 1");
  std::vector<double> vals(static_cast<std::size_t>(pairs),
                           std::numeric_limits<double>::infinity());
  parallel_for(static_cast<std::size_t>(pairs), [&](std::size_t i) {
    auto [x, y] = sample_pair(d, radius, stream, static_cast<std::uint64_t>(i));
    if (x.norm() <= R_star && y.norm() <= R_star) return;
    const double dn2 = (x - y).squaredNorm();
    if (dn2 == 0.0) return;
    vals[i] = -(x - y).dot(eval_drift(model, x) - eval_drift(model, y)) / dn2;
  });
  double inf = std::numeric_limits<double>::infinity();
  for (double v : vals) inf = std::min(inf, v);
  if (!std::isfinite(inf))
    throw EstimationDegenerate("estimate_A4_L5: no sampled pair in the qualifying region");
  return inf;
}

double estimate_A5_L6(const DriftModel& model, int d, double ell0_star, long pairs,
                      double radius, double fd_step, const RngStream& stream) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("estimate_A5_L6: fd_step must be positive");
  const bool analytic = true;  // all built-ins carry analytic Jacobians
  return sampled_supremum(
      d, pairs, radius, stream,
      [&](const StateVec& x, const StateVec& y, double dn) {
        const Eigen::MatrixXd Jx =
            analytic ? drift_jacobian(model, x) : drift_jacobian_fd(model, x, fd_step);
        const Eigen::MatrixXd Jy =
            analytic ? drift_jacobian(model, y) : drift_jacobian_fd(model, y, fd_step);
        const double opnorm = (Jx - Jy).jacobiSvd().singularValues()(0);
        const double w =
            1.0 + std::pow(x.norm(), ell0_star) + std::pow(y.norm(), ell0_star);
        return opnorm / (w * dn);
      },
      "estimate_A5_L6");
}

}  // namespace modeuler
