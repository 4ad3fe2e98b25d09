#pragma once

#include <optional>

#include "modeuler/drift.hpp"
#include "modeuler/scheme.hpp"

namespace modeuler {

/// Scheme-level constants: Lipschitz/dissipativity data for the composed map
/// b_delta(pi(.)) plus the growth envelope |b_delta(pi(x))| <= psi1(r) +
/// psi2 * delta^-theta |pi(x)| outside the r-ball.
struct SchemeConstants {
  SchemeKind kind = SchemeKind::em;
  double R = 0;
  double C_R = 0;
  double K_R = 0;
  double K_R_star = 0;
  double theta = 0;        // in [0, 1/2)
  double delta_R = 1;      // in (0, 1]
  double gamma = 0;        // retained for the projection-based delta_r^* rule
  double ell0 = 0;
  double L0 = 0;
  double b0 = 0;           // |b(0)|
  double psi2 = 0;         // psi2 is constant for every supported scheme
  bool em_psi_form = false;

  double psi1(double r) const;
  /// Largest delta for which |pi(x)| = |x| on the r-ball (H2): 1 for the
  /// identity projection, phi(r)^(-1/gamma) for the truncation.
  double delta_r_star(double r) const;
};

/// Contraction-level constants of the quasi-metric argument.
struct ContractionConstants {
  double alpha0 = 0;
  double beta0 = 0;
  double R0 = 0;
  double lambda1 = 0;
  double lambda2 = 0;
  double C0 = 1;
  double sigma0 = 0;
  double delta1_star = 0;  // NaN when lambda1 <= 0 (sigma below threshold)
  double V_sup = 0;
  double R = 0;            // copied from the scheme constants
  double sigma = 0;
  int d = 1;
  bool sigma_certified = false;   // |sigma| >= sigma0
  bool lambda1_positive = false;
  bool regime_reachable = false;  // certified regime runnable by Monte Carlo
};

struct IncompleteCertificate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Maps an assumption certificate to (H1)/(H2) constants for the given kind.
/// tem_gamma consumes L0, L1, L2, L3, L4, R*; em and pem consume L0, L5, R*.
SchemeConstants derive_scheme_constants(const AssumptionCertificate& cert, SchemeKind kind,
                                        double gamma, double ell0);

ContractionConstants contraction_constants(const SchemeConstants& sc, int d, double sigma);

/// The bounded C^1 radial Lyapunov function: quadratic cap on [0, 1+R],
/// downward parabola on (1+R, (1+beta0)(1+R)], zero beyond.
double lyapunov_V(double r, const ContractionConstants& cc, double R);

/// rho(x, y) = |x-y|^2 (sigma^2 + V(|x|) + V(|y|)).
double quasi_metric_rho(const StateVec& x, const StateVec& y, double sigma,
                        const ContractionConstants& cc, double R);

/// Rate exponents of the non-asymptotic Wasserstein bounds. Values that need
/// certificate or contraction data are NaN when those inputs are absent.
struct RateConstants {
  double gamma_star = std::numeric_limits<double>::quiet_NaN();
  double ell_star = std::numeric_limits<double>::quiet_NaN();
  double delta2_star_star = std::numeric_limits<double>::quiet_NaN();
  double delta3_star = std::numeric_limits<double>::quiet_NaN();
  double p_star = std::numeric_limits<double>::quiet_NaN();
  double ell_star_star = std::numeric_limits<double>::quiet_NaN();
};

RateConstants rate_exponents(SchemeKind kind, double gamma, double ell0, double ell0_star,
                             const AssumptionCertificate* cert = nullptr,
                             const SchemeConstants* sc = nullptr,
                             const ContractionConstants* cc = nullptr);

/// Finite-horizon second-moment envelope:
/// (|x|^2 + (2 c*(1+c*) + sigma^2 d) / (2 c^(1+c^))) * exp(2 c^(1+c^) n delta).
double moment_bound_et_star(const StateVec& x, long n, double delta, double sigma, int d,
                            double c_star, double c_upper);

/// Default (c*, c^) pair certifying the finite-horizon moment condition,
/// assembled from psi1(1), psi2(1), C_R, K_R* (the Remark-re1 route).
std::pair<double, double> derive_h0_constants(const SchemeConstants& sc);

}  // namespace modeuler
