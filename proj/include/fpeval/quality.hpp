#pragma once

// Block-wise fingerprint image quality.
//
// All three metrics start from the gradient structure tensor of each
// 32x32 block. Gradients are integer central differences, so every sum below
// is exact in double precision and the metrics do not change when a
// constant is added to all intensities.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fpeval/core.hpp"

namespace fpeval {

inline constexpr int kQualityBlock = 32;
inline constexpr double kForegroundFraction = 0.05;
inline constexpr double kMinRidgeFrequency = 1.0 / 25.0;
inline constexpr double kMaxRidgeFrequency = 1.0 / 3.0;
inline constexpr double kMaxPeakSpacingVariation = 0.3;

/// Per-block dominant gradient axis and its coherence.
///
/// `orientation` is the direction of the principal eigenvector of the block's
/// gradient covariance, in [0, pi). Ridges run perpendicular to it.
struct OrientationField {
  int block = kQualityBlock;
  int cols = 0;
  int rows = 0;
  std::vector<double> orientation;
  std::vector<double> coherence;
  std::vector<bool> foreground;

  std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * cols + col; }
  std::size_t foreground_count() const {
    return static_cast<std::size_t>(std::count(foreground.begin(), foreground.end(), true));
  }
};

inline OrientationField orientation_field(const GrayscaleImage& image, int block = kQualityBlock) {
  if (image.empty()) throw InvalidArgument("orientation_field: empty image");
  if (block < 8) throw InvalidArgument("orientation_field: block size must be >= 8");
  const int w = image.width();
  const int h = image.height();

  OrientationField f;
  f.block = block;
  f.cols = (w + block - 1) / block;
  f.rows = (h + block - 1) / block;
  const std::size_t n = static_cast<std::size_t>(f.cols) * f.rows;
  f.orientation.assign(n, 0.0);
  f.coherence.assign(n, 0.0);
  f.foreground.assign(n, false);

  std::vector<double> gxx(n, 0.0), gyy(n, 0.0), gxy(n, 0.0), density(n, 0.0);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(y - 1, 0);
    const int y1 = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(x - 1, 0);
      const int x1 = std::min(x + 1, w - 1);
      const double gx = static_cast<double>(image.at(x1, y)) - image.at(x0, y);
      const double gy = static_cast<double>(image.at(x, y1)) - image.at(x, y0);
      const std::size_t b = f.index(x / block, y / block);
      gxx[b] += gx * gx;
      gyy[b] += gy * gy;
      gxy[b] += gx * gy;
    }
  }

  double mean_density = 0.0;
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      const double bw = std::min(block, w - c * block);
      const double bh = std::min(block, h - r * block);
      const std::size_t b = f.index(c, r);
      density[b] = (gxx[b] + gyy[b]) / (bw * bh);
      mean_density += density[b];
    }
  }
  mean_density /= static_cast<double>(n);

  for (std::size_t b = 0; b < n; ++b) {
    const double energy = gxx[b] + gyy[b];
    if (energy <= 0.0 || density[b] < kForegroundFraction * mean_density) continue;
    f.foreground[b] = true;
    const double diff = gxx[b] - gyy[b];
    double phi = 0.5 * std::atan2(2.0 * gxy[b], diff);
    if (phi < 0.0) phi += kPi;
    if (phi >= kPi) phi -= kPi;
    f.orientation[b] = phi;
    // (l1 - l2) / (l1 + l2) of the 2x2 covariance.
    f.coherence[b] = std::clamp(std::sqrt(diff * diff + 4.0 * gxy[b] * gxy[b]) / energy, 0.0, 1.0);
  }
  return f;
}

enum class QualityMetric { kGOQ, kRF, kOCL };

inline constexpr QualityMetric kAllQualityMetrics[] = {QualityMetric::kGOQ, QualityMetric::kRF,
                                                       QualityMetric::kOCL};

inline std::string_view to_string(QualityMetric m) {
  switch (m) {
    case QualityMetric::kGOQ: return "GOQ";
    case QualityMetric::kRF: return "RF";
    case QualityMetric::kOCL: return "OCL";
  }
  return "unknown";
}

inline std::optional<QualityMetric> quality_metric_from_string(std::string_view s) {
  for (auto m : kAllQualityMetrics)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

struct QualityScore {
  QualityMetric metric = QualityMetric::kOCL;
  double value = 0.0;  // in [0, 1], higher is better
};

/// Orientation certainty level: mean coherence of the foreground blocks.
inline QualityScore ocl(const OrientationField& field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < field.foreground.size(); ++b) {
    if (!field.foreground[b]) continue;
    sum += field.coherence[b];
    ++n;
  }
  return {QualityMetric::kOCL, n == 0 ? 0.0 : std::clamp(sum / n, 0.0, 1.0)};
}

inline QualityScore ocl(const GrayscaleImage& image) { return ocl(orientation_field(image)); }

/// Smallest angle between two axial directions, in [0, pi/2].
inline double axial_difference(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

/// Global orientation quality: 1 minus the mean axial difference between
/// foreground blocks and their edge-adjacent foreground neighbours,
/// normalized by pi/2.
inline QualityScore goq(const OrientationField& field) {
  double sum = 0.0;
  std::size_t n = 0;
  static constexpr std::array<std::pair<int, int>, 2> kForward{{{1, 0}, {0, 1}}};
  for (int r = 0; r < field.rows; ++r) {
    for (int c = 0; c < field.cols; ++c) {
      const auto b = field.index(c, r);
      if (!field.foreground[b]) continue;
      // Each unordered neighbour pair once; the mean is the same as over
      // both directions.
      for (auto [dc, dr] : kForward) {
        const int nc = c + dc;
        const int nr = r + dr;
        if (nc >= field.cols || nr >= field.rows) continue;
        const auto nb = field.index(nc, nr);
        if (!field.foreground[nb]) continue;
        sum += axial_difference(field.orientation[b], field.orientation[nb]);
        ++n;
      }
    }
  }
  if (n == 0) return {QualityMetric::kGOQ, 0.0};
  return {QualityMetric::kGOQ, std::clamp(1.0 - (sum / n) / (kPi / 2.0), 0.0, 1.0)};
}

inline QualityScore goq(const GrayscaleImage& image) { return goq(orientation_field(image)); }

/// Per-block ridge frequency (cycles/pixel), 0 where none could be measured.
struct RidgeFrequencyField {
  OrientationField orientation;
  std::vector<double> frequency;
};

namespace detail {

/// Frequency from the spacing of the peaks of an intensity signature.
/// Values are integer sums, so all comparisons are exact.
inline double signature_frequency(const std::vector<double>& sig) {
  if (sig.size() < 5) return 0.0;
  std::vector<double> smooth(sig.size() - 2);
  for (std::size_t k = 1; k + 1 < sig.size(); ++k) smooth[k - 1] = sig[k - 1] + 2.0 * sig[k] + sig[k + 1];
  double total = 0.0;
  for (double v : smooth) total += v;
  const double n = static_cast<double>(smooth.size());

  std::vector<double> peaks;
  for (std::size_t k = 1; k + 1 < smooth.size(); ++k) {
    const double l = smooth[k - 1], c = smooth[k], r = smooth[k + 1];
    if (!(c > l && c >= r && c * n > total)) continue;
    const double curvature = l - 2.0 * c + r;
    const double offset = curvature < 0.0 ? 0.5 * (l - r) / curvature : 0.0;
    peaks.push_back(static_cast<double>(k) + offset);
  }
  if (peaks.size() < 2) return 0.0;
  const double span = peaks.back() - peaks.front();
  if (!(span > 0.0)) return 0.0;
  const double mean_gap = span / static_cast<double>(peaks.size() - 1);
  // Ridges are locally periodic; irregular peak spacing means no
  // measurable frequency.
  double ss = 0.0;
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    const double d = (peaks[i] - peaks[i - 1]) - mean_gap;
    ss += d * d;
  }
  const double cv = std::sqrt(ss / static_cast<double>(peaks.size() - 1)) / mean_gap;
  return cv <= kMaxPeakSpacingVariation ? 1.0 / mean_gap : 0.0;
}

}  // namespace detail

/// Estimates ridge frequency per foreground block from the intensity
/// signature projected along the block's gradient axis: a window 2*block
/// long and block/2 wide, centered on the block and clipped to the image.
inline RidgeFrequencyField ridge_frequency_field(const GrayscaleImage& image, int block = kQualityBlock) {
  RidgeFrequencyField out;
  out.orientation = orientation_field(image, block);
  const auto& f = out.orientation;
  out.frequency.assign(f.foreground.size(), 0.0);
  const int w = image.width();
  const int h = image.height();
  const int length = 2 * block;
  const int across = block / 2;

  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      const auto b = f.index(c, r);
      if (!f.foreground[b]) continue;
      const double cx = c * block + (std::min(block, w - c * block) - 1) / 2.0;
      const double cy = r * block + (std::min(block, h - r * block) - 1) / 2.0;
      const double nx = std::cos(f.orientation[b]);
      const double ny = std::sin(f.orientation[b]);
      const double tx = -ny;
      const double ty = nx;

      // Longest run of signature positions whose cross-section is fully
      // inside the image.
      std::vector<double> best, run;
      for (int k = -length / 2; k < length / 2; ++k) {
        double sum = 0.0;
        bool inside = true;
        for (int j = -across / 2; j < across - across / 2; ++j) {
          const long px = std::lround(cx + k * nx + j * tx);
          const long py = std::lround(cy + k * ny + j * ty);
          if (px < 0 || py < 0 || px >= w || py >= h) {
            inside = false;
            break;
          }
          sum += image.at(static_cast<int>(px), static_cast<int>(py));
        }
        if (inside) {
          run.push_back(sum);
        } else {
          if (run.size() > best.size()) best = run;
          run.clear();
        }
      }
      if (run.size() > best.size()) best = run;
      out.frequency[b] = detail::signature_frequency(best);
    }
  }
  return out;
}

/// Fraction of foreground blocks whose ridge frequency is in [1/25, 1/3].
inline QualityScore ridge_frequency(const RidgeFrequencyField& field) {
  std::size_t fg = 0;
  std::size_t good = 0;
  for (std::size_t b = 0; b < field.frequency.size(); ++b) {
    if (!field.orientation.foreground[b]) continue;
    ++fg;
    const double v = field.frequency[b];
    if (v >= kMinRidgeFrequency && v <= kMaxRidgeFrequency) ++good;
  }
  return {QualityMetric::kRF, fg == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(fg)};
}

inline QualityScore ridge_frequency(const GrayscaleImage& image) {
  return ridge_frequency(ridge_frequency_field(image));
}

/// All three metrics from a single orientation-field pass.
inline std::array<QualityScore, 3> quality_scores(const GrayscaleImage& image) {
  const auto rf = ridge_frequency_field(image);
  return {goq(rf.orientation), ridge_frequency(rf), ocl(rf.orientation)};
}

inline QualityScore quality_score(const GrayscaleImage& image, QualityMetric metric) {
  switch (metric) {
    case QualityMetric::kGOQ: return goq(image);
    case QualityMetric::kRF: return ridge_frequency(image);
    case QualityMetric::kOCL: return ocl(image);
  }
  throw InvalidArgument("unknown quality metric");
}

/// One quality measurement of one impression.
struct QualitySample {
  std::string reader;
  std::optional<Condition> condition;
  std::string metric;
  double value = 0.0;
};

/// Score distributions per (reader, metric): one per condition plus the
/// pooled distribution over all labelled impressions.
struct QualityDistributions {
  struct Entry {
    std::map<Condition, std::vector<double>> by_condition;
    std::vector<double> pooled;
  };
  std::map<std::pair<std::string, std::string>, Entry> entries;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

inline QualityDistributions quality_by_condition(const std::vector<QualitySample>& samples) {
  QualityDistributions out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!s.condition) {
      out.skipped++;
      out.warnings.push_back("sample " + std::to_string(i) + " (" + s.reader + ", " + s.metric +
                             ") has no capture condition; skipped");
      continue;
    }
    auto& e = out.entries[{s.reader, s.metric}];
    e.by_condition[*s.condition].push_back(s.value);
    e.pooled.push_back(s.value);
  }
  return out;
}

}  // namespace fpeval
