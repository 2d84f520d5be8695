#pragma once

// Synthetic fingerprint-like data for demos, self-tests and the bundled
// dataset. Minutiae follow a concentric ridge flow around a random core;
// images are concentric ridge patterns with condition-specific artifacts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fpeval/core.hpp"
#include "fpeval/perturb.hpp"

namespace fpeval::synthetic {

inline constexpr int kWidth = 388;
inline constexpr int kHeight = 374;

struct FingerModel {
  double core_x = kWidth / 2.0;
  double core_y = kHeight / 2.0;
  double ridge_period = 9.0;
  MinutiaeSet minutiae;
};

/// Ridge-flow direction at (x, y) for a core at (cx, cy).
inline double flow_direction(double x, double y, double cx, double cy) {
  return std::atan2(y - cy, x - cx) + kPi / 2.0;
}

/// `count` minutiae at least `min_separation` px apart, directions along the
/// ridge flow (flipped at random, as for ridge endings vs bifurcations).
inline FingerModel make_finger(Rng& rng, std::size_t count, int width = kWidth, int height = kHeight,
                               double min_separation = 14.0) {
  FingerModel f;
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  f.core_x = width * (0.5 + jitter(rng));
  f.core_y = height * (0.5 + jitter(rng));
  std::uniform_real_distribution<double> period(8.0, 10.0);
  f.ridge_period = period(rng);
  const int margin = 12;
  std::uniform_int_distribution<int> ux(margin, width - 1 - margin), uy(margin, height - 1 - margin);
  std::normal_distribution<double> dtheta(0.0, 0.08);
  std::bernoulli_distribution flip(0.5);
  std::vector<Minutia> m;
  for (int guard = 0; m.size() < count && guard < 200000; ++guard) {
    const double x = ux(rng), y = uy(rng);
    bool ok = true;
    for (const auto& o : m)
      if (std::hypot(o.x - x, o.y - y) < min_separation) {
        ok = false;
        break;
      }
    if (!ok) continue;
    const double theta = flow_direction(x, y, f.core_x, f.core_y) + (flip(rng) ? kPi : 0.0) + dtheta(rng);
    m.emplace_back(x, y, theta);
  }
  f.minutiae = MinutiaeSet(std::move(m), width, height);
  return f;
}

/// Moves a set by (dx, dy) and drops what leaves the image.
inline MinutiaeSet translate_and_crop(const MinutiaeSet& set, double dx, double dy) {
  std::vector<Minutia> out;
  for (auto m : set) {
    m.x = std::round(m.x + dx);
    m.y = std::round(m.y + dy);
    if (set.contains(m.x, m.y)) out.push_back(m);
  }
  return MinutiaeSet(std::move(out), set.width(), set.height(), set.resolution());
}

/// The finger's minutiae as placed on the sensor for one capture: a small
/// turn, skin distortion, translation and localization noise.
inline MinutiaeSet placement(const FingerModel& finger, Rng& rng) {
  std::normal_distribution<double> shift(0.0, 4.0);
  std::uniform_real_distribution<double> turn(-3.0, 3.0);
  MinutiaeSet s = rotate_global(finger.minutiae, turn(rng));
  s = nonlinear_distort(s, 1.0, rng);
  s = translate_and_crop(s, shift(rng), shift(rng));
  return displace(s, 1.0, 0.05, rng);
}

/// Minutiae damage typical of `condition`: lost and spurious minutiae,
/// occluded regions and stronger distortion.
inline MinutiaeSet condition_damage(MinutiaeSet s, Condition condition, Rng& rng) {
  const std::size_t n = s.size();
  auto frac = [n](double f) { return static_cast<std::size_t>(std::round(f * static_cast<double>(n))); };
  switch (condition) {
    case Condition::kNormal: break;
    case Condition::kDryFinger: s = add_remove(s, frac(0.15), frac(0.2), rng); break;
    case Condition::kWetFinger:
      s = occlude_block(s, 160, rng).set;
      s = add_remove(s, frac(0.05), 0, rng);
      break;
    case Condition::kLowPressure: s = add_remove(s, frac(0.1), frac(0.3), rng); break;
    case Condition::kHighPressure: s = displace(nonlinear_distort(s, 5.0, rng), 1.5, 0.1, rng); break;
    case Condition::kBrightLighting: s = add_remove(s, 0, frac(0.05), rng); break;
    case Condition::kDarkLighting: s = add_remove(s, frac(0.05), frac(0.1), rng); break;
  }
  return translate_and_crop(s, 0.0, 0.0);
}

/// A template of the finger as captured under `condition`.
inline MinutiaeSet impression(const FingerModel& finger, Condition condition, Rng& rng) {
  return condition_damage(placement(finger, rng), condition, rng);
}

/// Concentric ridge image of the finger under `condition`.
inline GrayscaleImage render(const FingerModel& finger, Condition condition, Rng& rng) {
  const int w = finger.minutiae.width();
  const int h = finger.minutiae.height();
  double mean = 128, amplitude = 90, noise_sigma = 6;
  double blot_fraction = 0.0;
  switch (condition) {
    case Condition::kNormal: break;
    case Condition::kDryFinger: amplitude = 45; noise_sigma = 25; break;
    case Condition::kWetFinger: mean = 90; amplitude = 50; blot_fraction = 0.35; break;
    case Condition::kLowPressure: amplitude = 35; noise_sigma = 18; break;
    case Condition::kHighPressure: mean = 110; amplitude = 70; blot_fraction = 0.15; break;
    case Condition::kBrightLighting: mean = 190; amplitude = 55; break;
    case Condition::kDarkLighting: mean = 60; amplitude = 45; break;
  }
  std::normal_distribution<double> noise(0.0, noise_sigma);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // Blots: dark discs standing in for collapsed ridges.
  struct Blot {
    double x, y, r;
  };
  std::vector<Blot> blots;
  const int nblots = static_cast<int>(blot_fraction * 12);
  for (int i = 0; i < nblots; ++i) blots.push_back({u01(rng) * w, u01(rng) * h, 20 + 30 * u01(rng)});
  GrayscaleImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double r = std::hypot(x - finger.core_x, y - finger.core_y);
      double v = mean + amplitude * std::cos(2.0 * kPi * r / finger.ridge_period) + noise(rng);
      for (const auto& b : blots)
        if (std::hypot(x - b.x, y - b.y) < b.r) v = mean * 0.4 + noise(rng);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return img;
}

}  // namespace fpeval::synthetic
