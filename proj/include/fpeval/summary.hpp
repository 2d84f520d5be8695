#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace fpeval {

/// Average and sample standard deviation of a list of values.
struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 when count < 2
};

inline Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace fpeval
