#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace modeuler {

struct CloudMeta {
  std::string scheme = "none";
  double delta = 0.0;
  double sigma = 0.0;
  long burn_in = 0;
  long thinning = 1;
  std::uint64_t seed = 0;
};

/// Equal-weight empirical measure: one sample per row.
struct SampleCloud {
  Eigen::MatrixXd samples;  // n x d
  CloudMeta meta;

  long n() const { return samples.rows(); }
  int d() const { return static_cast<int>(samples.cols()); }
};

/// (1/n) sum_i |x_i|^p.
double cloud_moment(const SampleCloud& cloud, double p);

/// Format a double with 17 significant digits (round-trip exact).
std::string format_full(double x);

/// CSV layout: first line `# d=<d> n=<n> scheme=<kind> delta=<d> sigma=<s> seed=<seed>`,
/// then one comma-separated row per sample at full double precision.
/// Extra leading `#` lines are permitted and skipped on read.
void write_cloud_csv(const std::string& path, const SampleCloud& cloud,
                     const std::string& extra_comment = "");
SampleCloud read_cloud_csv(const std::string& path);

}  // namespace modeuler
