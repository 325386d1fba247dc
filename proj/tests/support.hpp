#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lipgraph::testing {

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
};

/// Sample mean and standard error of the mean.
inline MeanSem mean_sem(const std::vector<double> &xs) {
  MeanSem m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.sem = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return m;
}

/// Standard error of a Bernoulli frequency with true rate p.
inline double bernoulli_sem(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

inline nlohmann::json calibration() {
  std::ifstream in(std::string(LIPGRAPH_TEST_DATA) + "/calibration.json");
  return nlohmann::json::parse(in);
}

} // namespace lipgraph::testing
