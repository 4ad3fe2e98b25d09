#include "modeuler/cloud.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace modeuler {

double cloud_moment(const SampleCloud& cloud, double p) {
  if (cloud.n() < 1) throw std::invalid_argument("cloud_moment: empty cloud");
  if (!(p > 0.0)) throw std::invalid_argument("cloud_moment: p must be positive");
  double acc = 0.0;
  for (long i = 0; i < cloud.n(); ++i) {
    acc += std::pow(cloud.samples.row(i).norm(), p);
  }
  return acc / static_cast<double>(cloud.n());
}

std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_cloud_csv(const std::string& path, const SampleCloud& cloud,
                     const std::string& extra_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_cloud_csv: cannot open " + path);
  out << "# d=" << cloud.d() << " n=" << cloud.n()
      << " scheme=" << cloud.meta.scheme
      << " delta=" << format_full(cloud.meta.delta)
      << " sigma=" << format_full(cloud.meta.sigma)
      << " seed=" << cloud.meta.seed << "\n";
  if (!extra_comment.empty()) out << "# " << extra_comment << "\n";
  for (long i = 0; i < cloud.n(); ++i) {
    for (int j = 0; j < cloud.d(); ++j) {
      if (j) out << ",";
      out << format_full(cloud.samples(i, j));
    }
    out << "\n";
  }
}

SampleCloud read_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_cloud_csv: cannot open " + path);
  std::string line;
  SampleCloud cloud;
  bool header_seen = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!header_seen) {
        int d = 0;
        long n = 0;
        char scheme[64] = {0};
        double delta = 0, sigma = 0;
        unsigned long long seed = 0;
        const int got =
            std::sscanf(line.c_str(), "# d=%d n=%ld scheme=%63s delta=%lf sigma=%lf seed=%llu",
                        &d, &n, scheme, &delta, &sigma, &seed);
        if (got == 6) {
          cloud.meta.scheme = scheme;
          cloud.meta.delta = delta;
          cloud.meta.sigma = sigma;
          cloud.meta.seed = seed;
          header_seen = true;
        }
      }
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("read_cloud_csv: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("read_cloud_csv: no samples in " + path);
  cloud.samples.resize(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
  for (long i = 0; i < cloud.samples.rows(); ++i)
    for (long j = 0; j < cloud.samples.cols(); ++j)
      cloud.samples(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return cloud;
}

}  // namespace modeuler
