#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modeuler/constants.hpp"
#include "modeuler/measure.hpp"

using namespace modeuler;

namespace {

SampleCloud cloud_1d(std::initializer_list<double> xs) {
  SampleCloud c;
  c.samples.resize(static_cast<long>(xs.size()), 1);
  long i = 0;
  for (double x : xs) c.samples(i++, 0) = x;
  return c;
}

SampleCloud random_cloud(const RngStream& s, std::uint64_t tag, long n, int d, double scale) {
  SampleCloud c;
  c.samples.resize(n, d);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      c.samples(i, j) = scale * s.normal(tag, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(j));
  return c;
}

// exact small-n optimum by enumerating all permutations
double brute_force_w2(const SampleCloud& a, const SampleCloud& b) {
  const long n = a.n();
  std::vector<long> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0L);
  double best = std::numeric_limits<double>::infinity();
  do {
    double acc = 0.0;
    for (long i = 0; i < n; ++i)
      acc += (a.samples.row(i) - b.samples.row(perm[static_cast<std::size_t>(i)])).squaredNorm();
    best = std::min(best, acc);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<double>(n));
}

}  // namespace

TEST_CASE("cloud moments") {
  CHECK(cloud_moment(cloud_1d({0.0, 0.0, 0.0}), 3.7) == 0.0);
  CHECK(cloud_moment(cloud_1d({1.0, -1.0}), 2.0) == 1.0);
  CHECK(cloud_moment(cloud_1d({0.0, 2.0}), 3.0) == 4.0);
  SampleCloud empty;
  empty.samples.resize(0, 1);
  CHECK_THROWS_AS((void)cloud_moment(empty, 2.0), std::invalid_argument);
}

TEST_CASE("sorted 1-D W2") {
  CHECK(w2_sorted_1d(cloud_1d({1., 2., 3.}), cloud_1d({3., 1., 2.})).value == 0.0);
  // {0,1} vs {1,2}: sorted pairing costs (1+1)/2, crossed (4+0)/2
  CHECK(w2_sorted_1d(cloud_1d({0., 1.}), cloud_1d({1., 2.})).value ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w2_sorted_1d(cloud_1d({0.}), cloud_1d({3.})).value == 3.0);
  CHECK_THROWS_AS((void)w2_sorted_1d(cloud_1d({0.}), cloud_1d({1., 2.})),
                  std::invalid_argument);
}

TEST_CASE("assignment W2 equals brute force on small clouds") {
  RngStream s{41};
  for (int trial = 0; trial < 60; ++trial) {
    const long n = 2 + static_cast<long>(s.uniform(trial, 0, 0) * 7.0);
    const int d = 1 + static_cast<int>(s.uniform(trial, 0, 1) * 3.0);
    const SampleCloud a = random_cloud(s, 100 + trial, n, d, 2.0);
    const SampleCloud b = random_cloud(s, 200 + trial, n, d, 2.0);
    CHECK(w2_assignment(a, b).value ==
          doctest::Approx(brute_force_w2(a, b)).epsilon(1e-10));
  }
  // permutation-equal clouds are at distance zero
  SampleCloud a = random_cloud(s, 999, 6, 2, 1.0);
  SampleCloud b = a;
  b.samples.row(0).swap(b.samples.row(5));
  b.samples.row(1).swap(b.samples.row(3));
  CHECK(w2_assignment(a, b).value <= 1e-12);
  // two vertical neighbours pair up, not across
  SampleCloud p, q;
  p.samples.resize(2, 2);
  q.samples.resize(2, 2);
  p.samples << 0, 0, 2, 0;
  q.samples << 0, 1, 2, 1;
  CHECK(w2_assignment(p, q).value == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("assignment agrees with sorted in one dimension") {
  RngStream s{43};
  for (int trial = 0; trial < 20; ++trial) {
    const SampleCloud a = random_cloud(s, trial, 64, 1, 3.0);
    const SampleCloud b = random_cloud(s, 500 + trial, 64, 1, 3.0);
    CHECK(w2_assignment(a, b).value ==
          doctest::Approx(w2_sorted_1d(a, b).value).epsilon(1e-10));
  }
}

TEST_CASE("sliced W2") {
  RngStream s{47};
  const SampleCloud a = random_cloud(s, 1, 64, 3, 1.0);
  const SampleCloud b = random_cloud(s, 2, 64, 3, 1.0);
  CHECK(w2_sliced(a, a, 8, s.substream("sl")).value == 0.0);
  // projections contract W2
  CHECK(w2_sliced(a, b, 16, s.substream("sl")).value <= w2_assignment(a, b).value + 1e-12);
  // d = 1: any slice count reproduces the sorted value
  const SampleCloud c = random_cloud(s, 3, 50, 1, 2.0);
  const SampleCloud d = random_cloud(s, 4, 50, 1, 2.0);
  CHECK(w2_sliced(c, d, 7, s.substream("sl")).value ==
        doctest::Approx(w2_sorted_1d(c, d).value).epsilon(1e-12));
}

TEST_CASE("metric properties on random clouds") {
  RngStream s{53};
  for (int trial = 0; trial < 10; ++trial) {
    const SampleCloud a = random_cloud(s, 10 + trial, 40, 1, 2.0);
    const SampleCloud b = random_cloud(s, 20 + trial, 40, 1, 2.0);
    const SampleCloud c = random_cloud(s, 30 + trial, 40, 1, 2.0);
    const double ab = w2_sorted_1d(a, b).value;
    const double bc = w2_sorted_1d(b, c).value;
    const double ac = w2_sorted_1d(a, c).value;
    CHECK(ac <= ab + bc + 1e-10);
    CHECK(w2_sorted_1d(b, a).value == ab);
    // translation covariance and scaling
    SampleCloud at = a, bt = b;
    at.samples.array() += 3.25;
    bt.samples.array() += 3.25;
    CHECK(w2_sorted_1d(at, bt).value == doctest::Approx(ab).epsilon(1e-12));
    SampleCloud as = a, bs = b;
    as.samples *= 2.5;
    bs.samples *= 2.5;
    CHECK(w2_sorted_1d(as, bs).value == doctest::Approx(2.5 * ab).epsilon(1e-12));
    CHECK(w2_assignment(as, bs).value == doctest::Approx(2.5 * ab).epsilon(1e-10));
  }
}

TEST_CASE("Gauss-Hermite rules and expectations") {
  for (int nodes : {16, 32, 64, 128}) {
    const GaussHermiteRule& rule = gauss_hermite_rule(nodes);
    REQUIRE(rule.nodes.size() == nodes);
    CHECK(rule.weights.sum() == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-14));
    // normalized Gaussian moments: E Z^2 = 1, E Z^4 = 3, E Z^6 = 15
    auto moment = [&](int p) {
      double acc = 0.0;
      for (int i = 0; i < nodes; ++i)
        acc += rule.weights[i] * std::pow(std::sqrt(2.0) * rule.nodes[i], p);
      return acc / std::sqrt(M_PI);
    };
    CHECK(moment(2) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(moment(4) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(moment(6) == doctest::Approx(15.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)gauss_hermite_rule(20), std::invalid_argument);

  StateVec m1(1);
  m1[0] = 0.7;
  CHECK(gauss_hermite_expectation([](const StateVec&) { return 1.0; }, m1, 2.0, 64) ==
        doctest::Approx(1.0).epsilon(1e-14));
  StateVec zero1 = StateVec::Zero(1);
  for (double sdev : {0.3, 1.7}) {
    CHECK(gauss_hermite_expectation([](const StateVec& z) { return z.squaredNorm(); }, zero1,
                                    sdev, 64) == doctest::Approx(sdev * sdev).epsilon(1e-12));
  }
  // d = 2: E |mean + s Z|^2 = |mean|^2 + 2 s^2
  StateVec m2(2);
  m2 << 1.0, -2.0;
  CHECK(gauss_hermite_expectation([](const StateVec& z) { return z.squaredNorm(); }, m2, 0.8,
                                  32) == doctest::Approx(5.0 + 2.0 * 0.64).epsilon(1e-12));
  StateVec m3 = StateVec::Zero(3);
  CHECK_THROWS_AS(
      (void)gauss_hermite_expectation([](const StateVec&) { return 0.0; }, m3, 1.0, 16),
      std::invalid_argument);
}

TEST_CASE("64- vs 128-node quadrature on the Lyapunov function") {
  // theorem-regime shape: the integrand of the drift check
  const AssumptionCertificate cert = analytic_certificate(make_ou(1.0));
  const SchemeConstants sc = derive_scheme_constants(cert, SchemeKind::em, 0.25, 0.0);
  const ContractionConstants cc = contraction_constants(sc, 1, std::sqrt(335232.0));
  const double sdev = std::sqrt(1.0 / 12.0);  // sigma sqrt(delta1*)
  auto f = [&](const StateVec& z) { return lyapunov_V(z.norm(), cc, sc.R); };
  // agreement measured relative to the Lyapunov scale; the kink at the
  // outer junction keeps pointwise relative error from being meaningful
  // where the value itself vanishes
  for (double m : {0.0, 1.0, 150.0, 288.5, 289.0, 400.0, 581.0}) {
    StateVec mean(1);
    mean[0] = m;
    const double a = gauss_hermite_expectation(f, mean, sdev, 64);
    const double b = gauss_hermite_expectation(f, mean, sdev, 128);
    CHECK(std::fabs(a - b) <= 1e-8 * cc.V_sup);
  }
}

TEST_CASE("assignment size cap") {
  RngStream s{59};
  SampleCloud a = random_cloud(s, 1, 4097, 1, 1.0);
  CHECK_THROWS_AS((void)w2_assignment(a, a), std::invalid_argument);
}
