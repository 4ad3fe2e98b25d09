#pragma once

#include <functional>
#include <string>
#include <vector>

#include "modeuler/cloud.hpp"
#include "modeuler/rng.hpp"

namespace modeuler {

struct W2Result {
  double value = 0;
  std::string method;
  long n = 0;
  int d = 0;
  int slices = 0;
};

/// Exact empirical W2 in one dimension via monotone rearrangement.
W2Result w2_sorted_1d(const SampleCloud& a, const SampleCloud& b);

/// Exact empirical W2 between equal-size clouds in any dimension: Hungarian
/// assignment on the squared-distance cost matrix, O(n^3), n <= 4096.
W2Result w2_assignment(const SampleCloud& a, const SampleCloud& b);

/// Sliced approximation: RMS of 1-D W2 over random projection directions.
/// A contraction of the true W2, never used for accepted rate claims.
W2Result w2_sliced(const SampleCloud& a, const SampleCloud& b, int n_slices,
                   const RngStream& stream);

struct GaussHermiteRule {
  Eigen::VectorXd nodes;    // roots of the physicists' Hermite polynomial
  Eigen::VectorXd weights;  // sum to sqrt(pi)
};

/// Cached rule; node count must be one of 16, 32, 64, 128.
const GaussHermiteRule& gauss_hermite_rule(int nodes);

/// E f(mean + std * Z) for standard Gaussian Z, via (tensor) Gauss-Hermite.
/// Supports d = 1 and d = 2.
double gauss_hermite_expectation(const std::function<double(const StateVec&)>& f,
                                 const StateVec& mean, double std_dev, int nodes);

}  // namespace modeuler
