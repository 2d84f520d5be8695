#pragma once

// Minutiae-set perturbation operators.
//
// Every operator is a pure function of (input set, parameters, generator
// state); no global RNG is touched. With a zero-magnitude parameter each
// operator returns its input unchanged. Geometric operators return relaxed
// sets: minutiae pushed outside the image are kept, not dropped.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fpeval/core.hpp"

namespace fpeval {

using Rng = std::mt19937_64;

/// Rotates every minutia about the image center by `degrees` (positive is
/// clockwise on screen in the y-down frame) and turns its direction by the
/// same angle.
inline MinutiaeSet rotate_global(const MinutiaeSet& set, double degrees) {
  if (!std::isfinite(degrees) || std::abs(degrees) > 180.0)
    throw InvalidArgument("rotate_global: |degrees| must be <= 180");
  if (degrees == 0.0) return set;
  const double a = deg_to_rad(degrees);
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double cx = set.width() / 2.0;
  const double cy = set.height() / 2.0;
  std::vector<Minutia> out;
  out.reserve(set.size());
  for (const auto& m : set) {
    const double dx = m.x - cx;
    const double dy = m.y - cy;
    out.emplace_back(cx + c * dx - s * dy, cy + s * dx + c * dy, m.theta + a, m.quality);
  }
  return MinutiaeSet::relaxed(std::move(out), set.width(), set.height(), set.resolution());
}

/// Axis-aligned square [x, x + side) x [y, y + side) in pixels.
struct Box {
  int x = 0;
  int y = 0;
  int side = 0;

  bool contains(double px, double py) const noexcept {
    return px >= x && py >= y && px < x + side && py < y + side;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Drops the minutiae inside `box`.
inline MinutiaeSet occlude_box(const MinutiaeSet& set, const Box& box) {
  std::vector<Minutia> kept;
  for (const auto& m : set)
    if (!box.contains(m.x, m.y)) kept.push_back(m);
  return set.with_minutiae(std::move(kept));
}

struct OcclusionResult {
  MinutiaeSet set;
  Box box;
};

/// Removes every minutia inside a randomly placed square of the given side.
/// The square lies inside the image whenever it fits; along a dimension it
/// does not fit in, it starts at 0.
inline OcclusionResult occlude_block(const MinutiaeSet& set, int side, Rng& rng) {
  if (side < 0 || side > std::max(set.width(), set.height()))
    throw InvalidArgument("occlude_block: side must be in [0, max(width, height)]");
  if (side == 0) return {set, Box{0, 0, 0}};
  auto draw = [&](int extent) {
    if (side >= extent) return 0;
    return std::uniform_int_distribution<int>(0, extent - side)(rng);
  };
  Box box;
  box.side = side;
  box.x = draw(set.width());
  box.y = draw(set.height());
  return {occlude_box(set, box), box};
}

/// Independent zero-mean Gaussian jitter of x, y and theta. Positions are
/// clamped to [0, width-1] x [0, height-1].
inline MinutiaeSet displace(const MinutiaeSet& set, double sigma_xy, double sigma_theta, Rng& rng) {
  if (!(sigma_xy >= 0.0) || !(sigma_theta >= 0.0))
    throw InvalidArgument("displace: sigmas must be non-negative");
  if (sigma_xy == 0.0 && sigma_theta == 0.0) return set;
  std::vector<Minutia> out;
  out.reserve(set.size());
  for (auto m : set) {
    if (sigma_xy > 0.0) {
      std::normal_distribution<double> n(0.0, sigma_xy);
      m.x = std::clamp(m.x + n(rng), 0.0, static_cast<double>(set.width() - 1));
      m.y = std::clamp(m.y + n(rng), 0.0, static_cast<double>(set.height() - 1));
    }
    if (sigma_theta > 0.0) {
      std::normal_distribution<double> n(0.0, sigma_theta);
      m.theta = wrap_angle(m.theta + n(rng));
    }
    out.push_back(m);
  }
  return set.with_minutiae(std::move(out));
}

/// Deletes `n_remove` minutiae chosen uniformly without replacement, then
/// appends `n_add` minutiae at uniform pixel positions with uniform direction.
inline MinutiaeSet add_remove(const MinutiaeSet& set, std::size_t n_add, std::size_t n_remove, Rng& rng) {
  if (n_remove > set.size()) throw InvalidArgument("add_remove: cannot remove more minutiae than present");
  if (n_add == 0 && n_remove == 0) return set;
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> removed(set.size(), false);
  for (std::size_t i = 0; i < n_remove; ++i) removed[order[i]] = true;

  std::vector<Minutia> out;
  out.reserve(set.size() - n_remove + n_add);
  for (std::size_t i = 0; i < set.size(); ++i)
    if (!removed[i]) out.push_back(set[i]);
  std::uniform_int_distribution<int> ux(0, set.width() - 1);
  std::uniform_int_distribution<int> uy(0, set.height() - 1);
  std::uniform_real_distribution<double> ut(0.0, kTwoPi);
  for (std::size_t i = 0; i < n_add; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    out.emplace_back(x, y, ut(rng));
  }
  return set.with_minutiae(std::move(out));
}

/// Smooth random deformation: a thin-plate spline through a 4x4 grid of
/// control points spanning the image, each displaced by N(0, magnitude^2)
/// per axis. Directions turn by the rotation part of the local Jacobian.
class ThinPlateWarp {
 public:
  static constexpr int kGrid = 4;

  ThinPlateWarp(int width, int height, double magnitude, Rng& rng)
      : scale_(std::max(width, height)) {
    const int n = kGrid * kGrid;
    controls_.resize(n, 2);
    Eigen::MatrixXd targets(n, 2);
    std::normal_distribution<double> noise(0.0, magnitude > 0.0 ? magnitude : 1.0);
    for (int j = 0; j < kGrid; ++j) {
      for (int i = 0; i < kGrid; ++i) {
        const int k = j * kGrid + i;
        controls_(k, 0) = (width - 1) * static_cast<double>(i) / (kGrid - 1) / scale_;
        controls_(k, 1) = (height - 1) * static_cast<double>(j) / (kGrid - 1) / scale_;
        targets(k, 0) = magnitude > 0.0 ? noise(rng) : 0.0;
        targets(k, 1) = magnitude > 0.0 ? noise(rng) : 0.0;
      }
    }
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 3, n + 3);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b)
        system(a, b) = kernel((controls_.row(a) - controls_.row(b)).norm());
      system(a, n) = 1.0;
      system(a, n + 1) = controls_(a, 0);
      system(a, n + 2) = controls_(a, 1);
      system(n, a) = 1.0;
      system(n + 1, a) = controls_(a, 0);
      system(n + 2, a) = controls_(a, 1);
    }
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
    rhs.topRows(n) = targets;
    coefficients_ = system.fullPivLu().solve(rhs);
  }

  struct Result {
    double dx, dy;
    double rotation;  // radians
  };

  Result at(double x, double y) const {
    const int n = kGrid * kGrid;
    const double u = x / scale_;
    const double v = y / scale_;
    // Displacement and its derivatives in normalized coordinates.
    double d[2];
    double du[2];
    double dv[2];
    for (int c = 0; c < 2; ++c) {
      d[c] = coefficients_(n, c) + coefficients_(n + 1, c) * u + coefficients_(n + 2, c) * v;
      du[c] = coefficients_(n + 1, c);
      dv[c] = coefficients_(n + 2, c);
    }
    for (int k = 0; k < n; ++k) {
      const double ex = u - controls_(k, 0);
      const double ey = v - controls_(k, 1);
      const double r = std::hypot(ex, ey);
      const double g = r > 0.0 ? 2.0 * std::log(r) + 1.0 : 0.0;
      for (int c = 0; c < 2; ++c) {
        d[c] += coefficients_(k, c) * kernel(r);
        du[c] += coefficients_(k, c) * ex * g;
        dv[c] += coefficients_(k, c) * ey * g;
      }
    }
    // Jacobian of p -> p + d(p) in pixel units.
    const double j00 = 1.0 + du[0] / scale_;
    const double j01 = dv[0] / scale_;
    const double j10 = du[1] / scale_;
    const double j11 = 1.0 + dv[1] / scale_;
    return {d[0], d[1], std::atan2(j10 - j01, j00 + j11)};
  }

 private:
  static double kernel(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

  double scale_;
  Eigen::MatrixXd controls_;
  Eigen::MatrixXd coefficients_;
};

inline MinutiaeSet nonlinear_distort(const MinutiaeSet& set, double magnitude, Rng& rng) {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude))
    throw InvalidArgument("nonlinear_distort: magnitude must be non-negative");
  if (magnitude == 0.0) return set;
  const ThinPlateWarp warp(set.width(), set.height(), magnitude, rng);
  std::vector<Minutia> out;
  out.reserve(set.size());
  for (const auto& m : set) {
    const auto w = warp.at(m.x, m.y);
    out.emplace_back(m.x + w.dx, m.y + w.dy, m.theta + w.rotation, m.quality);
  }
  return MinutiaeSet::relaxed(std::move(out), set.width(), set.height(), set.resolution());
}

enum class PerturbationKind {
  kDisplace,
  kAddSpurious,
  kRemoveRandom,
  kOccludeBlock,
  kRotateGlobal,
  kNonlinearDistort,
};

inline constexpr PerturbationKind kAllPerturbationKinds[] = {
    PerturbationKind::kDisplace,     PerturbationKind::kAddSpurious,
    PerturbationKind::kRemoveRandom, PerturbationKind::kOccludeBlock,
    PerturbationKind::kRotateGlobal, PerturbationKind::kNonlinearDistort,
};

inline std::string_view to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::kDisplace: return "displace";
    case PerturbationKind::kAddSpurious: return "add_spurious";
    case PerturbationKind::kRemoveRandom: return "remove_random";
    case PerturbationKind::kOccludeBlock: return "occlude_block";
    case PerturbationKind::kRotateGlobal: return "rotate_global";
    case PerturbationKind::kNonlinearDistort: return "nonlinear_distort";
  }
  return "unknown";
}

inline std::optional<PerturbationKind> perturbation_kind_from_string(std::string_view s) {
  for (auto k : kAllPerturbationKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// A perturbation with its parameters. Only the fields relevant to `kind`
/// are read.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kDisplace;
  double sigma_xy = 0.0;     // displace, px
  double sigma_theta = 0.0;  // displace, rad
  std::size_t count = 0;     // add_spurious / remove_random
  int box_side = 0;          // occlude_block, px
  double degrees = 0.0;      // rotate_global, signed
  double magnitude = 0.0;    // nonlinear_distort, px
  std::uint64_t seed = 0;

  /// Short label for reports and file names, e.g. "rotate_global_10".
  std::string label() const {
    auto num = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    std::string base(to_string(kind));
    switch (kind) {
      case PerturbationKind::kDisplace: return base + "_" + num(sigma_xy) + "_" + num(sigma_theta);
      case PerturbationKind::kAddSpurious:
      case PerturbationKind::kRemoveRandom: return base + "_" + std::to_string(count);
      case PerturbationKind::kOccludeBlock: return base + "_" + std::to_string(box_side);
      case PerturbationKind::kRotateGlobal: return base + "_" + num(degrees);
      case PerturbationKind::kNonlinearDistort: return base + "_" + num(magnitude);
    }
    return base;
  }

  void validate() const {
    if (!(sigma_xy >= 0.0) || !(sigma_theta >= 0.0) || !(magnitude >= 0.0) || box_side < 0)
      throw InvalidArgument("perturbation parameters must be non-negative");
    if (!std::isfinite(degrees) || std::abs(degrees) > 180.0)
      throw InvalidArgument("rotation must be within [-180, 180] degrees");
  }
};

struct PerturbationResult {
  MinutiaeSet set;
  std::optional<Box> box;  // occlusion only
};

/// Applies `spec` using the supplied generator.
inline PerturbationResult apply_perturbation(const MinutiaeSet& set, const PerturbationSpec& spec, Rng& rng) {
  spec.validate();
  switch (spec.kind) {
    case PerturbationKind::kDisplace: return {displace(set, spec.sigma_xy, spec.sigma_theta, rng), {}};
    case PerturbationKind::kAddSpurious: return {add_remove(set, spec.count, 0, rng), {}};
    case PerturbationKind::kRemoveRandom: return {add_remove(set, 0, spec.count, rng), {}};
    case PerturbationKind::kOccludeBlock: {
      auto r = occlude_block(set, spec.box_side, rng);
      return {std::move(r.set), r.box};
    }
    case PerturbationKind::kRotateGlobal: return {rotate_global(set, spec.degrees), {}};
    case PerturbationKind::kNonlinearDistort: return {nonlinear_distort(set, spec.magnitude, rng), {}};
  }
  throw InvalidArgument("unknown perturbation kind");
}

/// Applies `spec` with a generator seeded from `spec.seed`.
inline PerturbationResult apply_perturbation(const MinutiaeSet& set, const PerturbationSpec& spec) {
  Rng rng(spec.seed);
  return apply_perturbation(set, spec, rng);
}

/// Deterministic per-task seed derived from a global seed and task indices.
inline std::uint64_t derive_seed(std::uint64_t global, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(global), static_cast<std::uint32_t>(global >> 32),
                    static_cast<std::uint32_t>(a),      static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),      static_cast<std::uint32_t>(c)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace fpeval
