#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modeuler/rng.hpp"

namespace modeuler {

enum class DriftKind { ou, double_well, radial_polynomial };

std::string to_string(DriftKind kind);
DriftKind drift_kind_from_string(const std::string& s);

/// Drift b of the SDE dX = b(X) dt + sigma dW. Built-ins are b = -grad U for
/// radial potentials U(x) = sum_k c_k |x|^{2k}; OU is b(x) = -kappa x.
struct DriftModel {
  DriftKind kind = DriftKind::ou;
  double kappa = 1.0;           // ou only
  std::vector<double> coeffs;   // radial potentials, c_1..c_K
  double ell0 = 0.0;            // growth exponent of (A0)-type bounds
  double ell0_star = 0.0;       // growth exponent of the Jacobian bound
};

DriftModel make_ou(double kappa);
DriftModel make_double_well();
DriftModel make_radial_polynomial(std::vector<double> coeffs);

StateVec eval_drift(const DriftModel& model, const StateVec& x);

/// Radial factor g with b(x) = g(|x|^2) x; defined for every built-in kind.
double radial_drift_factor(const DriftModel& model, double s_squared);

/// b(x + dx) - b(x) evaluated without forming the near-cancelling difference.
/// Exact (up to rounding of each term) for all built-in polynomial drifts;
/// this is what keeps synchronous-coupling differences meaningful down to
/// |dx| ~ 1e-40.
StateVec drift_diff(const DriftModel& model, const StateVec& x, const StateVec& dx);

Eigen::MatrixXd drift_jacobian(const DriftModel& model, const StateVec& x);
Eigen::MatrixXd drift_jacobian_fd(const DriftModel& model, const StateVec& x, double fd_step);

double drift_b0_norm(const DriftModel& model);

enum class Provenance { analytic, estimated, unset };

/// Numerically certified constants for the growth/dissipativity assumptions.
/// Estimated entries are suprema (or infima, for L5) over the sampled pair
/// set, i.e. one-sided bounds of the true constants.
struct AssumptionCertificate {
  double L0 = 0, L1 = 0, L2 = 0, L3 = 0, L4 = 0, L5 = 0, L6 = 0;
  double R_star = 0;
  double ell0 = 0;
  double ell0_star = 0;
  Provenance prov_L0 = Provenance::unset, prov_L1 = Provenance::unset,
             prov_L2 = Provenance::unset, prov_L3 = Provenance::unset,
             prov_L4 = Provenance::unset, prov_L5 = Provenance::unset,
             prov_L6 = Provenance::unset;
  long pair_count = 0;
  double sampling_radius = 0;
};

/// Pre-registered analytic constants for the built-ins. OU(kappa): L0 = kappa,
/// ell0 = 0, L5 = kappa, R* = 0, L6 = 0. double_well (any d): ell0 = 2,
/// R* = 2, L5 = 1. Everything else stays unset until estimated.
AssumptionCertificate analytic_certificate(const DriftModel& model);

/// Sampled supremum of |b(x)-b(y)| / ((1+|x|^l0+|y|^l0)|x-y|).
double estimate_A0(const DriftModel& model, int d, long pairs, double radius,
                   const RngStream& stream);

/// Sampled supremum of |b(x)|y|^l0 - b(y)|x|^l0| over the mixed weight.
double estimate_A2(const DriftModel& model, int d, long pairs, double radius,
                   const RngStream& stream);

struct A3Violation {
  StateVec x, y;
  int inequality = 0;  // 1 or 2
  double slack = 0;    // bound - value; negative here
};

/// Samples pairs with |x| > R* or |y| > R* and reports every violation of the
/// two partial-dissipativity inequalities for the candidate (L2, L3, L4).
std::vector<A3Violation> check_A3(const DriftModel& model, int d, double R_star,
                                  double L2, double L3, double L4, long pairs,
                                  double radius, const RngStream& stream);

/// Largest L5 valid on the sample: min over qualifying pairs of
/// -<x-y, b(x)-b(y)> / |x-y|^2. Negative means (A4) fails on the sample.
double estimate_A4_L5(const DriftModel& model, int d, double R_star, long pairs,
                      double radius, const RngStream& stream);

/// Sampled supremum of ||Db(x)-Db(y)||_op / ((1+|x|^l0*+|y|^l0*)|x-y|).
/// Jacobians are analytic for built-ins; fd_step only drives the
/// finite-difference fallback.
double estimate_A5_L6(const DriftModel& model, int d, double ell0_star, long pairs,
                      double radius, double fd_step, const RngStream& stream);

/// Thrown when a sampled estimate has no usable pairs.
struct EstimationDegenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pair sampler shared by the estimators: both points uniform in the ball of
/// the given radius, with a 20% share of near-coincident pairs
/// (|x - y| <= 1e-3 * radius) probing the local Lipschitz regime.
std::pair<StateVec, StateVec> sample_pair(int d, double radius, const RngStream& stream,
                                          std::uint64_t index);

}  // namespace modeuler
