#include "modeuler/constants.hpp"

#include <algorithm>
#include <cmath>

namespace modeuler {

namespace {

double phi(double r, double ell0) { return 1.0 + std::pow(r, ell0); }

void require(bool ok, const char* what) {
  if (!ok) throw IncompleteCertificate(what);
}

}  // namespace

double SchemeConstants::psi1(double r) const {
  if (em_psi_form) return b0 + 2.0 * L0 * r;
  return L0 * (std::pow(r, ell0) + 1.0) * r + b0;
}

double SchemeConstants::delta_r_star(double r) const {
  if (kind == SchemeKind::pem && ell0 > 0.0)
    return std::min(1.0, std::pow(phi(r, ell0), -1.0 / gamma));
  return 1.0;
}

SchemeConstants derive_scheme_constants(const AssumptionCertificate& cert, SchemeKind kind,
                                        double gamma, double ell0) {
  SchemeConstants sc;
  sc.kind = kind;
  sc.gamma = gamma;
  sc.ell0 = ell0;
  sc.L0 = cert.L0;
  sc.b0 = 0.0;  // built-ins have b(0) = 0; carried for the psi1 closed form
  switch (kind) {
    case SchemeKind::tem_gamma: {
      require(cert.prov_L0 != Provenance::unset, "tem_gamma needs L0");
      require(cert.prov_L1 != Provenance::unset, "tem_gamma needs L1");
      require(cert.prov_L2 != Provenance::unset, "tem_gamma needs L2");
      require(cert.prov_L3 != Provenance::unset, "tem_gamma needs L3");
      require(cert.prov_L4 != Provenance::unset, "tem_gamma needs L4");
      sc.R = cert.R_star;
      sc.C_R = (cert.L0 + cert.L1) * std::pow(1.0 + std::pow(sc.R, ell0), 2.0);
      sc.K_R = cert.L0 + cert.L1;
      sc.K_R_star = std::min(cert.L2 / 2.0, cert.L4);
      sc.theta = gamma;
      sc.delta_R = std::min(std::pow(cert.L2 / (2.0 * cert.L3), 1.0 / gamma), 1.0);
      sc.psi2 = cert.L0;
      break;
    }
    case SchemeKind::pem: {
      require(cert.prov_L0 != Provenance::unset, "pem needs L0");
      require(cert.prov_L5 != Provenance::unset, "pem needs L5");
      sc.R = cert.R_star;
      sc.C_R = 2.0 * cert.L0 * phi(sc.R, ell0);
      sc.K_R = 2.0 * cert.L0;
      sc.K_R_star = cert.L5;
      sc.theta = gamma;
      sc.delta_R = std::pow(phi(sc.R, ell0), -1.0 / gamma);
      sc.psi2 = cert.L0;
      break;
    }
    case SchemeKind::em: {
      require(cert.prov_L0 != Provenance::unset, "em needs L0");
      require(cert.prov_L5 != Provenance::unset, "em needs L5");
      sc.R = cert.R_star;
      sc.C_R = 3.0 * cert.L0;
      sc.K_R = 3.0 * cert.L0;
      sc.K_R_star = cert.L5;
      sc.theta = 0.0;
      sc.delta_R = 1.0;
      sc.psi2 = 2.0 * cert.L0;
      sc.em_psi_form = true;
      break;
    }
    default:
      throw IncompleteCertificate("scheme constants are defined for em, tem_gamma and pem only");
  }
  return sc;
}

ContractionConstants contraction_constants(const SchemeConstants& sc, int d, double sigma) {
  if (d < 1) throw std::invalid_argument("contraction_constants: d must be >= 1");
  if (sigma == 0.0) throw std::invalid_argument("contraction_constants: sigma must be nonzero");
  ContractionConstants cc;
  cc.d = d;
  cc.sigma = sigma;
  cc.R = sc.R;
  const double s2 = sigma * sigma;
  cc.alpha0 = sc.K_R_star / (8.0 * d);
  cc.beta0 = 96.0 * sc.C_R / sc.K_R_star;
  cc.R0 = 2.0 * ((1.0 + sc.R) * (1.0 + cc.beta0) + sc.psi1(1.0));
  cc.V_sup = cc.alpha0 * cc.beta0 * (1.0 + cc.beta0) * (1.0 + sc.R) * (1.0 + sc.R);

  const double mix = 24.0 * sc.C_R * (sc.K_R_star + 96.0 * sc.C_R) * (1.0 + sc.R) * (1.0 + sc.R) /
                     (d * sc.K_R_star);
  cc.lambda1 = 6.0 * sc.C_R * s2 / (s2 + mix) - 3.0 * sc.C_R;
  cc.lambda2 = sc.K_R_star / 4.0;
  cc.C0 = std::sqrt(1.0 + mix / s2);
  const double sigma0_sq =
      (8.0 * (1.0 + sc.R) / (d * sc.K_R_star)) *
      std::max({3.0 * sc.C_R * (sc.K_R_star + 96.0 * sc.C_R) * (1.0 + sc.R),
                sc.psi1(sc.R) * sc.K_R_star, 12.0 * sc.C_R * sc.psi1(cc.R0)});
  cc.sigma0 = std::sqrt(sigma0_sq);
  cc.sigma_certified = std::fabs(sigma) >= cc.sigma0;
  cc.lambda1_positive = cc.lambda1 > 0.0;
  if (cc.sigma_certified && !cc.lambda1_positive)
    throw std::logic_error(
        "contraction_constants: lambda1 <= 0 with |sigma| >= sigma0 (inconsistent inputs)");

  if (cc.lambda1_positive) {
    cc.delta1_star = std::min(
        {sc.delta_R, 1.0 / (2.0 * sc.K_R_star),
         std::pow(sc.K_R_star / (sc.K_R * sc.K_R), 1.0 / (1.0 - 2.0 * sc.theta)), 1.0 / sc.C_R,
         1.0 / cc.lambda1, 1.0 / cc.lambda2, sc.delta_r_star(cc.R0),
         std::pow(2.0 * sc.psi2, 1.0 / (sc.theta - 1.0)),
         1.0 / (4.0 * (2.0 + d) * (1.0 + sc.R * sc.R) * s2)});
  } else {
    cc.delta1_star = std::numeric_limits<double>::quiet_NaN();
  }

  // Monte Carlo feasibility of the certified regime: per-step displacement at
  // the stationary scale s ~ |sigma| sqrt(d / (2 lambda2)), evaluated at the
  // certified noise level.
  const double sig_eff = std::max(std::fabs(sigma), cc.sigma0);
  const double sc_eff2 = sig_eff * sig_eff;
  const double lam1_eff = 6.0 * sc.C_R * sc_eff2 / (sc_eff2 + mix) - 3.0 * sc.C_R;
  double d1_eff = std::numeric_limits<double>::quiet_NaN();
  if (lam1_eff > 0.0) {
    d1_eff = std::min({sc.delta_R, 1.0 / (2.0 * sc.K_R_star),
                       std::pow(sc.K_R_star / (sc.K_R * sc.K_R), 1.0 / (1.0 - 2.0 * sc.theta)),
                       1.0 / sc.C_R, 1.0 / lam1_eff, 1.0 / cc.lambda2, sc.delta_r_star(cc.R0),
                       std::pow(2.0 * sc.psi2, 1.0 / (sc.theta - 1.0)),
                       1.0 / (4.0 * (2.0 + d) * (1.0 + sc.R * sc.R) * sc_eff2)});
  }
  if (std::isfinite(d1_eff) && d1_eff > 0.0) {
    const double scale = sig_eff * std::sqrt(d / (2.0 * cc.lambda2));
    const double displacement = sc.psi1(std::max(scale, cc.R0)) * d1_eff +
                                sig_eff * std::sqrt(d1_eff * d);
    cc.regime_reachable = displacement < 1e6;
  } else {
    cc.regime_reachable = false;
  }
  return cc;
}

double lyapunov_V(double r, const ContractionConstants& cc, double R) {
  if (r < 0.0) throw std::invalid_argument("lyapunov_V: r must be nonnegative");
  const double edge = 1.0 + R;
  const double outer = (1.0 + cc.beta0) * edge;
  if (r <= edge) return cc.alpha0 * cc.beta0 * (1.0 + cc.beta0) * edge * edge - cc.alpha0 * cc.beta0 * r * r;
  if (r <= outer) {
    const double t = r - outer;
    return cc.alpha0 * t * t;
  }
  return 0.0;
}

double quasi_metric_rho(const StateVec& x, const StateVec& y, double sigma,
                        const ContractionConstants& cc, double R) {
  const double d2 = (x - y).squaredNorm();
  return d2 * (sigma * sigma + lyapunov_V(x.norm(), cc, R) + lyapunov_V(y.norm(), cc, R));
}

RateConstants rate_exponents(SchemeKind kind, double gamma, double ell0, double ell0_star,
                             const AssumptionCertificate* cert, const SchemeConstants* sc,
                             const ContractionConstants* cc) {
  RateConstants rc;
  switch (kind) {
    case SchemeKind::em:
      rc.gamma_star = 1.0;
      rc.ell_star = 0.5;
      break;
    case SchemeKind::tem_gamma:
      rc.gamma_star = gamma;
      rc.ell_star = ell0 + 0.5;
      break;
    case SchemeKind::pem:
      rc.gamma_star = 1.0;
      rc.ell_star = std::max(ell0 + 1.0 + ell0_star / 2.0, (ell0 + 1.0) / 2.0 + ell0 / gamma);
      break;
    case SchemeKind::tem_sqrt: {
      // delta3* is the only entry needing certificate constants; the rate
      // exponents themselves depend on ell0 and ell0* alone
      if (cert && cert->prov_L0 != Provenance::unset && cert->prov_L2 != Provenance::unset) {
        const double L0 = cert->L0, L2 = cert->L2;
        rc.delta3_star = std::min({L2 * L2 / (32.0 * std::pow(L0, 4.0)),
                                   2.0 * std::sqrt(2.0) / L2, 0.5});
      }
      rc.p_star = 2.0 * std::max({4.0, 2.0 * ell0_star, 3.0 * ell0 + 1.0});
      rc.ell_star_star = std::max(1.0 + 3.0 * ell0, ell0_star + 2.0);
      rc.gamma_star = 1.0;
      rc.ell_star = rc.ell_star_star;
      break;
    }
    default:
      throw IncompleteCertificate("rate exponents undefined for custom schemes");
  }
  if (sc && cc && std::isfinite(cc->delta1_star)) {
    rc.delta2_star_star =
        std::min(cc->delta1_star, std::pow(sc->K_R_star / (4.0 * sc->psi2 * sc->psi2),
                                           1.0 / (1.0 - 2.0 * sc->theta)));
  }
  return rc;
}

double moment_bound_et_star(const StateVec& x, long n, double delta, double sigma, int d,
                            double c_star, double c_upper) {
  if (!(c_star > 0.0) || !(c_upper > 0.0))
    throw std::invalid_argument("moment_bound_et_star: constants must be positive");
  const double add = (2.0 * c_star * (1.0 + c_star) + sigma * sigma * d) /
                     (2.0 * c_upper * (1.0 + c_upper));
  return (x.squaredNorm() + add) *
         std::exp(2.0 * c_upper * (1.0 + c_upper) * static_cast<double>(n) * delta);
}

std::pair<double, double> derive_h0_constants(const SchemeConstants& sc) {
  const double c_star =
      std::max(sc.psi1(1.0), (sc.C_R + sc.K_R_star) * sc.R * sc.R + sc.b0 * sc.b0 / 2.0);
  const double c_upper = std::max(sc.psi2, 0.5);
  return {c_star, c_upper};
}

}  // namespace modeuler
