#include "modeuler/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "modeuler/parallel.hpp"

namespace modeuler {

namespace {

void require_equal_sizes(const SampleCloud& a, const SampleCloud& b) {
  if (a.n() != b.n()) throw std::invalid_argument("w2: clouds must have equal sizes");
  if (a.d() != b.d()) throw std::invalid_argument("w2: clouds must share the dimension");
  if (a.n() < 1) throw std::invalid_argument("w2: empty clouds");
}

double w2_sorted_value(std::vector<double>& xs, std::vector<double>& ys) {
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = xs[i] - ys[i];
    acc += t * t;
  }
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

// Hungarian algorithm with dual potentials (Jonker-Volgenant style), O(n^3).
double assignment_cost(const Eigen::MatrixXd& cost) {
  const long n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<long> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<long> way(static_cast<std::size_t>(n) + 1, 0);
  for (long i = 1; i <= n; ++i) {
    p[0] = i;
    long j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const long i0 = p[static_cast<std::size_t>(j0)];
      long j1 = 0;
      double delta = inf;
      for (long j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (long j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const long j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (long j = 1; j <= n; ++j) {
    const long i = p[static_cast<std::size_t>(j)];
    if (i >= 1) total += cost(i - 1, j - 1);
  }
  return total;
}

}  // namespace

W2Result w2_sorted_1d(const SampleCloud& a, const SampleCloud& b) {
  require_equal_sizes(a, b);
  if (a.d() != 1) throw std::invalid_argument("w2_sorted_1d: needs d = 1");
  std::vector<double> xs(a.samples.col(0).data(), a.samples.col(0).data() + a.n());
  std::vector<double> ys(b.samples.col(0).data(), b.samples.col(0).data() + b.n());
  return W2Result{w2_sorted_value(xs, ys), "sorted_1d", a.n(), 1, 0};
}

W2Result w2_assignment(const SampleCloud& a, const SampleCloud& b) {
  require_equal_sizes(a, b);
  const long n = a.n();
  if (n > 4096) throw std::invalid_argument("w2_assignment: n capped at 4096");
  Eigen::MatrixXd cost(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (long j = 0; j < n; ++j) {
      cost(static_cast<long>(i), j) =
          (a.samples.row(static_cast<long>(i)) - b.samples.row(j)).squaredNorm();
    }
  });
  const double total = assignment_cost(cost);
  return W2Result{std::sqrt(total / static_cast<double>(n)), "assignment", n, a.d(), 0};
}

W2Result w2_sliced(const SampleCloud& a, const SampleCloud& b, int n_slices,
                   const RngStream& stream) {
  require_equal_sizes(a, b);
  if (n_slices < 1) throw std::invalid_argument("w2_sliced: n_slices must be >= 1");
  const int d = a.d();
  double acc = 0.0;
  std::vector<double> xs(static_cast<std::size_t>(a.n()));
  std::vector<double> ys(static_cast<std::size_t>(b.n()));
  for (int s = 0; s < n_slices; ++s) {
    StateVec dir(d);
    do {
      for (int i = 0; i < d; ++i)
        dir[i] = stream.normal(static_cast<std::uint64_t>(s), 0, static_cast<std::uint64_t>(i));
    } while (dir.norm() == 0.0);
    dir.normalize();
    for (long i = 0; i < a.n(); ++i) xs[static_cast<std::size_t>(i)] = a.samples.row(i).dot(dir);
    for (long i = 0; i < b.n(); ++i) ys[static_cast<std::size_t>(i)] = b.samples.row(i).dot(dir);
    const double w = w2_sorted_value(xs, ys);
    acc += w * w;
  }
  return W2Result{std::sqrt(acc / n_slices), "sliced", a.n(), d, n_slices};
}

const GaussHermiteRule& gauss_hermite_rule(int nodes) {
  if (nodes != 16 && nodes != 32 && nodes != 64 && nodes != 128)
    throw std::invalid_argument("gauss_hermite_rule: nodes must be 16, 32, 64 or 128");
  static std::map<int, GaussHermiteRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(nodes);
  if (it != cache.end()) return it->second;
  // Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix for the
  // weight exp(-x^2); weights are sqrt(pi) times the squared first components.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) {
    const double b = std::sqrt(k / 2.0);
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(nodes);
  const double mu0 = std::sqrt(M_PI);
  for (int i = 0; i < nodes; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return cache.emplace(nodes, std::move(rule)).first->second;
}

double gauss_hermite_expectation(const std::function<double(const StateVec&)>& f,
                                 const StateVec& mean, double std_dev, int nodes) {
  const int d = static_cast<int>(mean.size());
  if (d != 1 && d != 2)
    throw std::invalid_argument("gauss_hermite_expectation: supports d = 1 and d = 2");
  if (!(std_dev > 0.0))
    throw std::invalid_argument("gauss_hermite_expectation: std must be positive");
  const GaussHermiteRule& rule = gauss_hermite_rule(nodes);
  const double scale = std_dev * std::sqrt(2.0);
  const double norm = std::pow(M_PI, -0.5 * d);
  double acc = 0.0;
  if (d == 1) {
    StateVec z(1);
    for (int i = 0; i < nodes; ++i) {
      z[0] = mean[0] + scale * rule.nodes[i];
      acc += rule.weights[i] * f(z);
    }
  } else {
    StateVec z(2);
    for (int i = 0; i < nodes; ++i) {
      const double wi = rule.weights[i];
      z[0] = mean[0] + scale * rule.nodes[i];
      double inner = 0.0;
      for (int j = 0; j < nodes; ++j) {
        z[1] = mean[1] + scale * rule.nodes[j];
        inner += rule.weights[j] * f(z);
      }
      acc += wi * inner;
    }
  }
  return norm * acc;
}

}  // namespace modeuler
