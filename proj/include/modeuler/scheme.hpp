#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "modeuler/drift.hpp"
#include "modeuler/rng.hpp"

namespace modeuler {

enum class SchemeKind { em, tem_gamma, pem, tem_sqrt, custom };

std::string to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& s);

/// User-supplied (projection, modified drift) pair for SchemeKind::custom.
struct ModifiedPair {
  std::function<StateVec(const StateVec&)> projection;      // pi^(delta)
  std::function<StateVec(const StateVec&)> modified_drift;  // b^(delta)
};

/// One discretization: X <- pi(X) + b_delta(pi(X)) * delta + sigma * dW.
struct SchemeSpec {
  SchemeKind kind = SchemeKind::em;
  double delta = 0.01;   // step size, in (0, 1]
  double gamma = 0.25;   // taming/truncation exponent, in (0, 1/2); unused by em/tem_sqrt
  double sigma = 1.0;    // noise intensity
  DriftModel model;
  ModifiedPair custom;   // only consulted when kind == custom
};

void validate(const SchemeSpec& spec);

struct TrajectoryDiverged : std::runtime_error {
  explicit TrajectoryDiverged(long step_index)
      : std::runtime_error("trajectory diverged at step " + std::to_string(step_index)),
        step(step_index) {}
  long step;
};

/// Inverse of phi(r) = 1 + r^ell0 on [0, inf); needs ell0 > 0 and s >= 1.
double phi_inverse(double s, double ell0);

/// Truncation onto the ball of radius phi_inverse(delta^-gamma); identity when
/// ell0 = 0 (phi is constant there, and the projected scheme degenerates to EM).
StateVec project(const StateVec& x, double delta, double gamma, double ell0);

/// b(x) / (1 + delta^gamma |x|^ell0).
StateVec tame_gamma(const DriftModel& model, const StateVec& x, double delta, double gamma);

/// b(x) / (1 + delta |x|^{2 ell0})^{1/2}.
StateVec tame_sqrt(const DriftModel& model, const StateVec& x, double delta);

StateVec apply_projection(const SchemeSpec& spec, const StateVec& x);
StateVec modified_drift(const SchemeSpec& spec, const StateVec& x);

/// One step with the supplied noise vector (N(0, delta) per component).
/// Throws TrajectoryDiverged (step index -1) on non-finite or > 1e150 output.
StateVec step(const SchemeSpec& spec, const StateVec& x, const StateVec& noise);

/// Coupled update in (x, dx) coordinates: advances x by one step with the
/// given noise and advances the difference dx = y - x exactly as the
/// synchronously coupled partner y = x + dx would move. The difference path
/// is evaluated through drift_diff and friends, never by subtracting two
/// nearby states, so contraction factors stay exact to rounding.
void step_coupled_diff(const SchemeSpec& spec, StateVec& x, StateVec& dx,
                       const StateVec& noise);

/// pi(x + dx) - pi(x) without cancellation (except exactly on the cap
/// boundary, where the mixed branch is used as-is).
StateVec projection_diff(const SchemeSpec& spec, const StateVec& x, const StateVec& dx);

/// b_delta(z + dz) - b_delta(z), cancellation-safe.
StateVec modified_drift_diff(const SchemeSpec& spec, const StateVec& z, const StateVec& dz);

/// Iterate the scheme n_steps times; increments are drawn at
/// (trajectory, step) stream coordinates. Records every thinning-th state
/// (plus the initial one). Throws TrajectoryDiverged with the step index.
std::vector<StateVec> simulate(const SchemeSpec& spec, const StateVec& x0, long n_steps,
                               const RngStream& stream, std::uint64_t trajectory,
                               long thinning = 1);

/// Allocation-free stepping for tight loops. Built-in drifts are radial,
/// b(x) = g(|x|^2) x, so one step collapses to x <- c(|x|^2) x + sigma w.
/// Produces bit-identical states to step().
class StepKernel {
 public:
  explicit StepKernel(const SchemeSpec& spec);
  /// x <- one step with the given noise; throws TrajectoryDiverged(-1).
  void advance(StateVec& x, const Eigen::Ref<const Eigen::VectorXd>& noise) const;

 private:
  SchemeSpec spec_;
  double dgamma_ = 1.0;  // delta^gamma
  double cap_ = 0.0;     // pem truncation radius
  bool radial_ = false;
  long ell0_half_ = 0;   // ell0 / 2 when ell0 is a small even integer
  bool ell0_even_ = false;

  double norm_pow_ell0(double s_squared) const;
};

}  // namespace modeuler
