#pragma once

// Two-sample t statistics with fixed significance bands, and the
// FAR-threshold / FNMR pair used by every recognition-rate table.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpeval/error.hpp"

namespace fpeval {

enum class SignificanceBand { kNone, kYellow, kOrange, kRed };

inline std::string_view to_string(SignificanceBand b) {
  switch (b) {
    case SignificanceBand::kNone: return "none";
    case SignificanceBand::kYellow: return "yellow";
    case SignificanceBand::kOrange: return "orange";
    case SignificanceBand::kRed: return "red";
  }
  return "none";
}

/// Critical |t| for alpha = 0.05 at 120 degrees of freedom.
inline constexpr double kSignificantT = 1.658;
inline constexpr double kOrangeT = 5.0;
inline constexpr double kRedT = 10.0;

/// Bands on |t|: (1.658, 5] yellow, (5, 10] orange, (10, inf) red.
inline SignificanceBand band_for(double t) {
  const double a = std::abs(t);
  if (a > kRedT) return SignificanceBand::kRed;
  if (a > kOrangeT) return SignificanceBand::kOrange;
  if (a > kSignificantT) return SignificanceBand::kYellow;
  return SignificanceBand::kNone;
}

struct TTestResult {
  double t = 0.0;
  int dof = 0;
  SignificanceBand band = SignificanceBand::kNone;
};

/// Student's two-sample t with pooled variance.
inline TTestResult two_sample_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("two_sample_t: each sample needs >= 2 values");
  auto mean_of = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto ss_of = [](std::span<const double> v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const int dof = static_cast<int>(a.size() + b.size() - 2);
  const double pooled = (ss_of(a, ma) + ss_of(b, mb)) / dof;

  TTestResult r;
  r.dof = dof;
  if (pooled == 0.0) {
    if (ma != mb) throw InvalidArgument("two_sample_t: zero variance with unequal means");
    return r;
  }
  r.t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  r.band = band_for(r.t);
  return r;
}

/// Scores with their genuine/impostor role. Higher scores mean more similar.
struct ScoreDistribution {
  enum class Kind { kUnlabeled, kGenuine, kImpostor };

  std::string label;
  Kind kind = Kind::kUnlabeled;
  std::vector<double> scores;

  std::size_t size() const noexcept { return scores.size(); }
  bool empty() const noexcept { return scores.empty(); }
};

inline TTestResult two_sample_t(const ScoreDistribution& a, const ScoreDistribution& b) {
  return two_sample_t(std::span<const double>(a.scores), std::span<const double>(b.scores));
}

/// Smallest decision threshold whose empirical false-accept rate is <= far.
///
/// Impostor scores >= threshold are false accepts. The returned value is the
/// midpoint between the highest score that must be rejected and the next
/// larger distinct score; if no larger score exists, the next representable
/// double above it.
inline double threshold_at_far(std::span<const double> impostor, double far) {
  if (impostor.empty()) throw InvalidArgument("threshold_at_far: empty impostor distribution");
  if (!(far > 0.0 && far < 1.0)) throw InvalidArgument("threshold_at_far: far must be in (0, 1)");
  std::vector<double> desc(impostor.begin(), impostor.end());
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const auto n = desc.size();
  // Number of impostor scores allowed at or above the threshold. The small
  // relative slack keeps products like 0.1 * 10 from flooring to 0.
  const auto allowed = static_cast<std::size_t>(std::floor(far * static_cast<double>(n) * (1.0 + 1e-12)));
  const double must_reject = desc[allowed];  // allowed < n since far < 1
  // Largest score strictly above `must_reject`, if any.
  const auto above = std::find_if(desc.rbegin(), desc.rend(), [&](double s) { return s > must_reject; });
  if (above == desc.rend()) return std::nextafter(must_reject, std::numeric_limits<double>::infinity());
  const double mid = must_reject + (*above - must_reject) / 2.0;
  return mid > must_reject ? mid : *above;
}

inline double threshold_at_far(const ScoreDistribution& impostor, double far) {
  return threshold_at_far(std::span<const double>(impostor.scores), far);
}

inline double false_accept_rate(std::span<const double> impostor, double threshold) {
  if (impostor.empty()) throw InvalidArgument("false_accept_rate: empty impostor distribution");
  const auto n = std::count_if(impostor.begin(), impostor.end(), [&](double s) { return s >= threshold; });
  return static_cast<double>(n) / static_cast<double>(impostor.size());
}

/// Fraction of genuine scores strictly below the threshold.
inline double fnmr_at_threshold(std::span<const double> genuine, double threshold) {
  if (genuine.empty()) throw InvalidArgument("fnmr_at_threshold: empty genuine distribution");
  const auto n = std::count_if(genuine.begin(), genuine.end(), [&](double s) { return s < threshold; });
  return static_cast<double>(n) / static_cast<double>(genuine.size());
}

inline double fnmr_at_threshold(const ScoreDistribution& genuine, double threshold) {
  return fnmr_at_threshold(std::span<const double>(genuine.scores), threshold);
}

}  // namespace fpeval
