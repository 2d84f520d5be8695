#pragma once

// Domain types shared by every evaluation stage.
//
// Frame convention: x is the column (increasing rightward) and y is the row
// (increasing downward), i.e. the raw pixel frame. Minutia directions are
// measured in that same frame as atan2(dy, dx), so a positive angle turns
// clockwise on screen. Annotations, perturbations and the matcher all use it.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fpeval/error.hpp"

namespace fpeval {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double deg_to_rad(double degrees) { return degrees * kPi / 180.0; }

/// Canonical representative of `theta` in [0, 2pi).
inline double wrap_angle(double theta) {
  if (!std::isfinite(theta)) throw InvalidArgument("wrap_angle: non-finite angle");
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative value plus 2pi can round up to exactly 2pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Signed difference theta1 - theta2 folded into [-pi, pi).
///
/// The three branches are the identity, +2pi and -2pi; inputs further than
/// one period apart are first reduced so the result is always in range.
inline double angle_diff(double theta1, double theta2) {
  if (!std::isfinite(theta1) || !std::isfinite(theta2))
    throw InvalidArgument("angle_diff: non-finite angle");
  double d = theta1 - theta2;
  if (d >= -kPi && d < kPi) return d;
  if (d < -kPi) {
    d = kTwoPi + d;
  } else {
    d = -kTwoPi + d;
  }
  if (d >= -kPi && d < kPi) return d;
  d = wrap_angle(d);
  return d >= kPi ? d - kTwoPi : d;
}

struct Minutia {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  std::optional<double> quality;

  Minutia() = default;
  Minutia(double x_, double y_, double theta_, std::optional<double> quality_ = std::nullopt)
      : x(x_), y(y_), theta(wrap_angle(theta_)), quality(quality_) {}

  friend bool operator==(const Minutia&, const Minutia&) = default;
};

/// A fingerprint template: minutiae tied to the dimensions of their image.
///
/// Sets built with `MinutiaeSet(...)` are validated: every minutia must lie in
/// [0, width) x [0, height) and qualities in [0, 1]. Perturbation operators
/// may move minutiae outside the image; they produce a *relaxed* set through
/// `MinutiaeSet::relaxed`, which skips the bounds check but still wraps
/// angles. `out_of_bounds_count()` reports how many minutiae are outside.
class MinutiaeSet {
 public:
  static constexpr int kDefaultResolution = 500;

  MinutiaeSet() = default;

  MinutiaeSet(std::vector<Minutia> minutiae, int width, int height,
              int resolution = kDefaultResolution)
      : minutiae_(std::move(minutiae)), width_(width), height_(height), resolution_(resolution) {
    check_dims();
    for (std::size_t i = 0; i < minutiae_.size(); ++i) {
      auto& m = minutiae_[i];
      if (!contains(m.x, m.y))
        throw InvalidArgument("minutia " + std::to_string(i) + " at (" + std::to_string(m.x) +
                              ", " + std::to_string(m.y) + ") outside " + std::to_string(width_) +
                              "x" + std::to_string(height_) + " image");
      check_minutia(m, i);
    }
  }

  static MinutiaeSet relaxed(std::vector<Minutia> minutiae, int width, int height,
                             int resolution = kDefaultResolution) {
    MinutiaeSet s;
    s.minutiae_ = std::move(minutiae);
    s.width_ = width;
    s.height_ = height;
    s.resolution_ = resolution;
    s.relaxed_ = true;
    s.check_dims();
    for (std::size_t i = 0; i < s.minutiae_.size(); ++i) s.check_minutia(s.minutiae_[i], i);
    return s;
  }

  /// Same dimensions, different minutiae; stays relaxed if `this` is.
  MinutiaeSet with_minutiae(std::vector<Minutia> minutiae) const {
    if (relaxed_) return relaxed(std::move(minutiae), width_, height_, resolution_);
    return MinutiaeSet(std::move(minutiae), width_, height_, resolution_);
  }

  std::span<const Minutia> minutiae() const noexcept { return minutiae_; }
  const Minutia& operator[](std::size_t i) const { return minutiae_[i]; }
  std::size_t size() const noexcept { return minutiae_.size(); }
  bool empty() const noexcept { return minutiae_.empty(); }
  auto begin() const noexcept { return minutiae_.begin(); }
  auto end() const noexcept { return minutiae_.end(); }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int resolution() const noexcept { return resolution_; }
  bool is_relaxed() const noexcept { return relaxed_; }

  bool contains(double x, double y) const noexcept {
    return x >= 0.0 && y >= 0.0 && x < width_ && y < height_;
  }

  std::size_t out_of_bounds_count() const noexcept {
    std::size_t n = 0;
    for (const auto& m : minutiae_) n += contains(m.x, m.y) ? 0 : 1;
    return n;
  }

  bool same_frame(const MinutiaeSet& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const MinutiaeSet& a, const MinutiaeSet& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.resolution_ == b.resolution_ &&
           a.minutiae_ == b.minutiae_;
  }

 private:
  void check_dims() const {
    if (width_ <= 0 || height_ <= 0) throw InvalidArgument("image dimensions must be positive");
    if (resolution_ <= 0) throw InvalidArgument("resolution must be positive");
  }

  // Validates and canonicalizes the angle in place.
  static void check_minutia(Minutia& m, std::size_t i) {
    if (!std::isfinite(m.x) || !std::isfinite(m.y))
      throw InvalidArgument("minutia " + std::to_string(i) + " has non-finite position");
    m.theta = wrap_angle(m.theta);
    if (m.quality && !(*m.quality >= 0.0 && *m.quality <= 1.0))
      throw InvalidArgument("minutia " + std::to_string(i) + " quality outside [0,1]");
  }

  std::vector<Minutia> minutiae_;
  int width_ = 1;
  int height_ = 1;
  int resolution_ = kDefaultResolution;
  bool relaxed_ = false;
};

/// Row-major 8-bit impression.
class GrayscaleImage {
 public:
  GrayscaleImage() = default;

  GrayscaleImage(int width, int height, std::vector<std::uint8_t> pixels,
                 int resolution = MinutiaeSet::kDefaultResolution)
      : width_(width), height_(height), resolution_(resolution), pixels_(std::move(pixels)) {
    if (width_ <= 0 || height_ <= 0) throw InvalidArgument("image dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
      throw InvalidArgument("pixel count does not match width x height");
  }

  GrayscaleImage(int width, int height, std::uint8_t fill = 0,
                 int resolution = MinutiaeSet::kDefaultResolution)
      : GrayscaleImage(width, height,
                       std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, fill),
                       resolution) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int resolution() const noexcept { return resolution_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  friend bool operator==(const GrayscaleImage&, const GrayscaleImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int resolution_ = MinutiaeSet::kDefaultResolution;
  std::vector<std::uint8_t> pixels_;
};

enum class Condition {
  kNormal,
  kDryFinger,
  kWetFinger,
  kLowPressure,
  kHighPressure,
  kBrightLighting,
  kDarkLighting,
};

inline constexpr Condition kAllConditions[] = {
    Condition::kNormal,       Condition::kDryFinger,      Condition::kWetFinger,
    Condition::kLowPressure,  Condition::kHighPressure,   Condition::kBrightLighting,
    Condition::kDarkLighting,
};

inline constexpr Condition kAdverseConditions[] = {
    Condition::kDryFinger,    Condition::kWetFinger,      Condition::kLowPressure,
    Condition::kHighPressure, Condition::kBrightLighting, Condition::kDarkLighting,
};

/// Stable identifier used in manifests and reports.
inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kNormal: return "normal";
    case Condition::kDryFinger: return "dry_finger";
    case Condition::kWetFinger: return "wet_finger";
    case Condition::kLowPressure: return "low_pressure";
    case Condition::kHighPressure: return "high_pressure";
    case Condition::kBrightLighting: return "bright_lighting";
    case Condition::kDarkLighting: return "dark_lighting";
  }
  return "unknown";
}

inline std::optional<Condition> condition_from_string(std::string_view s) {
  for (auto c : kAllConditions)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

/// Perturbation families used by the uncertainty analyses of capture
/// conditions. Each family groups two adverse conditions.
enum class ConditionFamily { kMoisture, kPressure, kIllumination };

inline constexpr ConditionFamily kConditionFamilies[] = {
    ConditionFamily::kMoisture, ConditionFamily::kPressure, ConditionFamily::kIllumination};

inline std::string_view to_string(ConditionFamily f) {
  switch (f) {
    case ConditionFamily::kMoisture: return "Finger Moisture";
    case ConditionFamily::kPressure: return "Contact Pressure";
    case ConditionFamily::kIllumination: return "Illumination";
  }
  return "unknown";
}

inline std::optional<ConditionFamily> family_of(Condition c) {
  switch (c) {
    case Condition::kDryFinger:
    case Condition::kWetFinger: return ConditionFamily::kMoisture;
    case Condition::kLowPressure:
    case Condition::kHighPressure: return ConditionFamily::kPressure;
    case Condition::kBrightLighting:
    case Condition::kDarkLighting: return ConditionFamily::kIllumination;
    case Condition::kNormal: return std::nullopt;
  }
  return std::nullopt;
}

/// Acquisition measurements for a capture. Values come from the dataset.
struct CaptureMetadata {
  std::optional<double> illumination_lux;
  std::optional<double> pressure_kpa;
  std::optional<double> moisture_percent;

  void validate() const {
    for (const auto& v : {illumination_lux, pressure_kpa, moisture_percent})
      if (v && !(*v > 0.0)) throw InvalidArgument("capture metadata must be positive");
  }
};

struct CaptureCondition {
  Condition condition = Condition::kNormal;
  CaptureMetadata metadata;
};

/// Correspondence between a ground-truth set and a detected set.
struct Pairing {
  struct Pair {
    std::size_t ground = 0;
    std::size_t detected = 0;
    double distance = 0.0;
    double orientation_diff = 0.0;
  };

  std::vector<Pair> pairs;
  std::vector<std::size_t> unpaired_ground;
  std::vector<std::size_t> unpaired_detected;

  std::size_t paired_count() const noexcept { return pairs.size(); }
};

}  // namespace fpeval
