#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modeuler/constants.hpp"

using namespace modeuler;

namespace {

StateVec vec1(double x) {
  StateVec v(1);
  v[0] = x;
  return v;
}

AssumptionCertificate ou_cert(double kappa = 1.0) {
  return analytic_certificate(make_ou(kappa));
}

AssumptionCertificate tem_cert() {
  AssumptionCertificate c;
  c.L0 = 1.5;
  c.L1 = 1.0;
  c.L2 = 0.3;
  c.L3 = 2.0;
  c.L4 = 0.25;
  c.R_star = 2.0;
  c.ell0 = 2.0;
  c.prov_L0 = c.prov_L1 = c.prov_L2 = c.prov_L3 = c.prov_L4 = Provenance::analytic;
  return c;
}

}  // namespace

TEST_CASE("scheme constants per kind") {
  // em on ou(1): C_R = K_R = 3 L0, K_R* = L5, theta = 0
  const SchemeConstants em = derive_scheme_constants(ou_cert(), SchemeKind::em, 0.25, 0.0);
  CHECK(em.R == 0.0);
  CHECK(em.C_R == 3.0);
  CHECK(em.K_R == 3.0);
  CHECK(em.K_R_star == 1.0);
  CHECK(em.theta == 0.0);
  CHECK(em.psi2 == 2.0);
  CHECK(em.psi1(1.0) == 2.0);  // |b(0)| + 2 L0 r
  CHECK(em.delta_r_star(5.0) == 1.0);

  // tem_gamma with L2 = 2 L3 gives delta_R = 1
  AssumptionCertificate c = tem_cert();
  c.L3 = c.L2 / 2.0;
  const SchemeConstants tem = derive_scheme_constants(c, SchemeKind::tem_gamma, 0.25, 2.0);
  CHECK(tem.delta_R == 1.0);
  CHECK(tem.C_R == doctest::Approx((1.5 + 1.0) * 25.0).epsilon(1e-15));
  CHECK(tem.K_R == 2.5);
  CHECK(tem.K_R_star == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(tem.theta == 0.25);

  // pem with L0 = 1, R = 2, ell0 = 2: C_R = 2 * 1 * phi(2) = 10
  AssumptionCertificate p;
  p.L0 = 1.0;
  p.L5 = 1.0;
  p.R_star = 2.0;
  p.prov_L0 = p.prov_L5 = Provenance::analytic;
  const SchemeConstants pem = derive_scheme_constants(p, SchemeKind::pem, 0.25, 2.0);
  CHECK(pem.C_R == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(pem.K_R == 2.0);
  CHECK(pem.delta_R == doctest::Approx(std::pow(5.0, -4.0)).epsilon(1e-14));
  CHECK(pem.delta_r_star(2.0) == doctest::Approx(std::pow(5.0, -4.0)).epsilon(1e-14));

  // incomplete certificates are named
  AssumptionCertificate incomplete = ou_cert();
  CHECK_THROWS_AS(
      (void)derive_scheme_constants(incomplete, SchemeKind::tem_gamma, 0.25, 0.0),
      IncompleteCertificate);
}

TEST_CASE("contraction constants: hand-evaluated ou/em values") {
  const SchemeConstants sc = derive_scheme_constants(ou_cert(), SchemeKind::em, 0.25, 0.0);
  const ContractionConstants cc = contraction_constants(sc, 1, 600.0);
  CHECK(cc.lambda2 == 0.25);
  CHECK(cc.alpha0 == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
  CHECK(cc.beta0 == doctest::Approx(288.0).epsilon(1e-15));
  // R0 = 2((1+R)(1+beta0) + psi1(1)) = 2(289 + 2) = 582
  CHECK(cc.R0 == doctest::Approx(582.0).epsilon(1e-15));
  // sigma0^2 = 8 max{3*3*289, 0, 36*psi1(582)} = 8 * 36 * 1164 = 335232
  CHECK(cc.sigma0 * cc.sigma0 == doctest::Approx(335232.0).epsilon(1e-12));
  CHECK(cc.V_sup == doctest::Approx(10404.0).epsilon(1e-12));
  // (WQ2) closed form agrees with alpha0 beta0 (1+beta0)(1+R)^2
  CHECK(cc.V_sup ==
        doctest::Approx(12.0 * sc.C_R * (1.0 + 96.0 * sc.C_R / sc.K_R_star) *
                        (1.0 + sc.R) * (1.0 + sc.R))
            .epsilon(1e-12));
}

TEST_CASE("lambda1 behaviour in sigma") {
  const SchemeConstants sc = derive_scheme_constants(ou_cert(), SchemeKind::em, 0.25, 0.0);
  const ContractionConstants at0 = contraction_constants(sc, 1, std::sqrt(335232.0));
  CHECK(at0.sigma_certified);
  CHECK(at0.lambda1 >= 0.0);
  double prev = -1e9;
  for (double s2 : {1e4, 1e5, 1e6, 1e8, 1e12}) {
    const ContractionConstants cc = contraction_constants(sc, 1, std::sqrt(s2));
    CHECK(cc.lambda1 > prev);
    prev = cc.lambda1;
    CHECK(cc.lambda1 < 3.0 * sc.C_R);  // sigma -> inf limit
  }
  const ContractionConstants big = contraction_constants(sc, 1, 1e9);
  CHECK(big.lambda1 == doctest::Approx(3.0 * sc.C_R).epsilon(1e-4));
  // below the threshold lambda1 goes negative and delta1_star is undefined
  const ContractionConstants low = contraction_constants(sc, 1, 1.0);
  CHECK(!low.sigma_certified);
  CHECK(low.lambda1 < 0.0);
  CHECK(!std::isfinite(low.delta1_star));
}

TEST_CASE("delta1_star is the minimum of its terms") {
  const SchemeConstants sc = derive_scheme_constants(ou_cert(), SchemeKind::em, 0.25, 0.0);
  const double sigma = std::sqrt(335232.0);
  const ContractionConstants cc = contraction_constants(sc, 1, sigma);
  const double terms[] = {sc.delta_R,
                          1.0 / (2.0 * sc.K_R_star),
                          std::pow(sc.K_R_star / (sc.K_R * sc.K_R), 1.0),
                          1.0 / sc.C_R,
                          1.0 / cc.lambda1,
                          1.0 / cc.lambda2,
                          sc.delta_r_star(cc.R0),
                          std::pow(2.0 * sc.psi2, -1.0),
                          1.0 / (4.0 * 3.0 * 1.0 * sigma * sigma)};
  double expect = 1e300;
  for (double t : terms) {
    CHECK(cc.delta1_star <= t + 1e-18);
    expect = std::min(expect, t);
  }
  CHECK(cc.delta1_star == doctest::Approx(expect).epsilon(1e-14));
  // at this operating point the noise term dominates: sigma^2 delta = 1/12
  CHECK(sigma * sigma * cc.delta1_star == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(cc.regime_reachable);
}

TEST_CASE("super-linear certified regime is flagged unreachable") {
  const SchemeConstants sc =
      derive_scheme_constants(tem_cert(), SchemeKind::tem_gamma, 0.25, 2.0);
  const ContractionConstants cc = contraction_constants(sc, 1, 2.0);
  CHECK(!cc.sigma_certified);
  CHECK(cc.sigma0 > 1e9);  // astronomically large for the double well
  CHECK(!cc.regime_reachable);
}

TEST_CASE("Lyapunov function shape") {
  const SchemeConstants sc = derive_scheme_constants(ou_cert(), SchemeKind::em, 0.25, 0.0);
  const ContractionConstants cc = contraction_constants(sc, 1, 600.0);
  const double R = sc.R;
  const double edge = 1.0 + R;
  const double outer = (1.0 + cc.beta0) * edge;
  CHECK(lyapunov_V(0.0, cc, R) == doctest::Approx(cc.V_sup).epsilon(1e-15));
  CHECK(lyapunov_V(outer, cc, R) == 0.0);
  CHECK(lyapunov_V(outer + 5.0, cc, R) == 0.0);
  // junction value alpha0 beta0^2 (1+R)^2 from both branches
  const double v_edge = cc.alpha0 * cc.beta0 * cc.beta0 * edge * edge;
  CHECK(lyapunov_V(edge, cc, R) == doctest::Approx(v_edge).epsilon(1e-13));
  // C1 smoothness: one-sided difference quotients at both junctions
  const double h = 1e-8;
  for (double r : {edge, outer}) {
    const double left = (lyapunov_V(r, cc, R) - lyapunov_V(r - h, cc, R)) / h;
    const double right = (lyapunov_V(r + h, cc, R) - lyapunov_V(r, cc, R)) / h;
    CHECK(std::fabs(left - right) <= 1e-6 * std::max(1.0, std::fabs(left)));
  }
  // analytic derivative at the first junction: -2 alpha0 beta0 (1+R)
  const double d_edge = (lyapunov_V(edge + h, cc, R) - lyapunov_V(edge - h, cc, R)) / (2 * h);
  CHECK(d_edge == doctest::Approx(-2.0 * cc.alpha0 * cc.beta0 * edge).epsilon(1e-6));
  CHECK_THROWS_AS((void)lyapunov_V(-0.1, cc, R), std::invalid_argument);
}

TEST_CASE("quasi-metric sandwich") {
  const SchemeConstants sc = derive_scheme_constants(ou_cert(), SchemeKind::em, 0.25, 0.0);
  const double sigma = 600.0;
  const ContractionConstants cc = contraction_constants(sc, 1, sigma);
  RngStream s{33};
  CHECK(quasi_metric_rho(vec1(1.2), vec1(1.2), sigma, cc, sc.R) == 0.0);
  const double s2 = sigma * sigma;
  for (int i = 0; i < 2000; ++i) {
    const StateVec x = vec1(1200.0 * (s.uniform(i, 0, 0) - 0.5));
    const StateVec y = vec1(1200.0 * (s.uniform(i, 1, 0) - 0.5));
    const double rho = quasi_metric_rho(x, y, sigma, cc, sc.R);
    const double d2 = (x - y).squaredNorm();
    CHECK(rho >= s2 * d2 - 1e-9);
    CHECK(rho <= (s2 + 2.0 * cc.V_sup) * d2 + 1e-9);
  }
  // V vanishes far out, so rho reduces to sigma^2 |x-y|^2
  const double outer = (1.0 + cc.beta0) * (1.0 + sc.R);
  CHECK(quasi_metric_rho(vec1(outer + 1.0), vec1(-outer - 2.0), sigma, cc, sc.R) ==
        doctest::Approx(s2 * std::pow(2.0 * outer + 3.0, 2.0)).epsilon(1e-13));
}

TEST_CASE("rate exponents") {
  const RateConstants em = rate_exponents(SchemeKind::em, 0.25, 0.0, 0.0);
  CHECK(em.gamma_star == 1.0);
  CHECK(em.ell_star == 0.5);
  const RateConstants tem = rate_exponents(SchemeKind::tem_gamma, 0.25, 2.0, 1.0);
  CHECK(tem.gamma_star == 0.25);
  CHECK(tem.ell_star == 2.5);
  const RateConstants pem = rate_exponents(SchemeKind::pem, 0.25, 2.0, 1.0);
  CHECK(pem.gamma_star == 1.0);
  CHECK(pem.ell_star == doctest::Approx(std::max(2.0 + 1.0 + 0.5, 1.5 + 8.0)).epsilon(1e-15));
  AssumptionCertificate c = tem_cert();
  const RateConstants ts = rate_exponents(SchemeKind::tem_sqrt, 0.25, 2.0, 1.0, &c);
  CHECK(ts.ell_star_star == 7.0);  // (1+3*2) v (1+2)
  CHECK(ts.p_star == 14.0);        // 2 * (4 v 2 v 7)
  REQUIRE(std::isfinite(ts.delta3_star));
  CHECK(ts.delta3_star ==
        doctest::Approx(std::min({0.09 / (32.0 * std::pow(1.5, 4.0)),
                                  2.0 * std::sqrt(2.0) / 0.3, 0.5}))
            .epsilon(1e-14));
  // delta2** needs scheme and contraction data
  const SchemeConstants sc = derive_scheme_constants(ou_cert(), SchemeKind::em, 0.25, 0.0);
  const ContractionConstants cc = contraction_constants(sc, 1, std::sqrt(335232.0));
  const RateConstants em2 = rate_exponents(SchemeKind::em, 0.25, 0.0, 0.0, nullptr, &sc, &cc);
  CHECK(em2.delta2_star_star ==
        doctest::Approx(std::min(cc.delta1_star, sc.K_R_star / (4.0 * sc.psi2 * sc.psi2)))
            .epsilon(1e-14));
}

TEST_CASE("finite-horizon moment envelope") {
  // hand evaluation: (1 + 2.5/1.5) e^{1.5}
  const double v = moment_bound_et_star(vec1(1.0), 10, 0.1, 1.0, 1, 0.5, 0.5);
  CHECK(v == doctest::Approx((1.0 + 2.5 / 1.5) * std::exp(1.5)).epsilon(1e-14));
  CHECK(v == doctest::Approx(11.9512).epsilon(1e-4));
  // monotone in n; x = 0, n = 0 leaves only the additive term
  CHECK(moment_bound_et_star(vec1(1.0), 11, 0.1, 1.0, 1, 0.5, 0.5) > v);
  CHECK(moment_bound_et_star(StateVec::Zero(1), 0, 0.1, 1.0, 1, 0.5, 0.5) ==
        doctest::Approx(2.5 / 1.5).epsilon(1e-15));
  CHECK_THROWS_AS((void)moment_bound_et_star(vec1(0.0), 1, 0.1, 1.0, 1, 0.0, 0.5),
                  std::invalid_argument);
}

TEST_CASE("auto-derived finite-horizon constants certify ou/em") {
  const SchemeConstants sc = derive_scheme_constants(ou_cert(), SchemeKind::em, 0.25, 0.0);
  const auto [c_star, c_upper] = derive_h0_constants(sc);
  CHECK(c_star > 0.0);
  CHECK(c_upper > 0.0);
  // the pair must satisfy |b(x)| <= c* + c^ delta^{-1/2} |x| and
  // <x, b(x)> <= c* + c^ |x|^2 for the ou drift on a grid
  const DriftModel ou = make_ou(1.0);
  for (double t = -50.0; t <= 50.0; t += 0.5) {
    const double b = eval_drift(ou, vec1(t))[0];
    CHECK(std::fabs(b) <= c_star + c_upper * std::fabs(t) + 1e-12);
    CHECK(t * b <= c_star + c_upper * t * t + 1e-12);
  }
}
