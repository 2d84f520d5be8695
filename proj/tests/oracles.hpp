#pragma once

// Test-only reference computations. These are written independently of
// the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "fpeval/core.hpp"

namespace oracle {

/// Minimum total distance over injective matchings restricted to pairs
/// within `delta`, maximizing the number of pairs first. Exhaustive.
struct OptimalMatching {
  std::size_t pairs = 0;
  double total_distance = 0.0;
};

inline OptimalMatching exhaustive_matching(const fpeval::MinutiaeSet& g, const fpeval::MinutiaeSet& d,
                                           double delta) {
  OptimalMatching best;
  best.total_distance = std::numeric_limits<double>::infinity();
  std::vector<int> assign(g.size(), -1);
  std::vector<bool> used(d.size(), false);
  auto rec = [&](auto&& self, std::size_t i, std::size_t pairs, double dist) -> void {
    if (i == g.size()) {
      if (pairs > best.pairs || (pairs == best.pairs && dist < best.total_distance)) {
        best.pairs = pairs;
        best.total_distance = dist;
      }
      return;
    }
    self(self, i + 1, pairs, dist);
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (used[j]) continue;
      const double dd = std::sqrt((g[i].x - d[j].x) * (g[i].x - d[j].x) + (g[i].y - d[j].y) * (g[i].y - d[j].y));
      if (dd > delta) continue;
      used[j] = true;
      self(self, i + 1, pairs + 1, dist + dd);
      used[j] = false;
    }
  };
  rec(rec, 0, 0, 0.0);
  if (best.pairs == 0) best.total_distance = 0.0;
  return best;
}

/// Direct transcription of the uncertainty procedure on raw score rows.
inline double direct_u_total(const std::vector<std::vector<double>>& raw, double lo, double hi) {
  double acc = 0.0;
  for (const auto& row : raw) {
    double mu = 0.0;
    std::vector<double> s;
    for (double v : row) {
      double n = (v - lo) / (hi - lo);
      if (n < 0) n = 0;
      if (n > 1) n = 1;
      s.push_back(n);
      mu += n;
    }
    mu /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (mu - v) * (mu - v);
    acc += var / static_cast<double>(s.size());  // u_k^2
  }
  return std::sqrt(acc / static_cast<double>(raw.size()));
}

/// Sinusoidal grating: intensity varies along direction `normal` (radians)
/// with the given period.
inline fpeval::GrayscaleImage grating(int w, int h, double period, double normal = 0.0, double mean = 127.0,
                                      double amplitude = 100.0) {
  fpeval::GrayscaleImage img(w, h);
  const double c = std::cos(normal), s = std::sin(normal);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = mean + amplitude * std::sin(2.0 * fpeval::kPi * (x * c + y * s) / period);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return img;
}

inline fpeval::GrayscaleImage noise_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(lo, hi);
  fpeval::GrayscaleImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>(u(rng));
  return img;
}

/// Random set with integer coordinates.
inline fpeval::MinutiaeSet random_set(std::mt19937_64& rng, std::size_t n, int w, int h) {
  std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1);
  std::uniform_real_distribution<double> ut(0.0, 2.0 * fpeval::kPi);
  std::vector<fpeval::Minutia> m;
  for (std::size_t i = 0; i < n; ++i) m.emplace_back(ux(rng), uy(rng), ut(rng));
  return fpeval::MinutiaeSet(std::move(m), w, h);
}

/// Random set with minimum pairwise separation (rejection sampling).
inline fpeval::MinutiaeSet separated_set(std::mt19937_64& rng, std::size_t n, int w, int h, double min_sep,
                                         int margin = 0) {
  std::uniform_int_distribution<int> ux(margin, w - 1 - margin), uy(margin, h - 1 - margin);
  std::uniform_real_distribution<double> ut(0.0, 2.0 * fpeval::kPi);
  std::vector<fpeval::Minutia> m;
  int guard = 0;
  while (m.size() < n && guard++ < 100000) {
    const double x = ux(rng), y = uy(rng);
    bool ok = true;
    for (const auto& o : m)
      if (std::hypot(o.x - x, o.y - y) < min_sep) ok = false;
    if (ok) m.emplace_back(x, y, ut(rng));
  }
  return fpeval::MinutiaeSet(std::move(m), w, h);
}

}  // namespace oracle
