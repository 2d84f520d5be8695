#pragma once

// Minutiae-extractor evaluation: pairing detected minutiae against ground
// truth, the patch-based Goodness Index and the RMS localization errors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "fpeval/core.hpp"
#include "fpeval/summary.hpp"

namespace fpeval {

inline constexpr double kDefaultPairingDistance = 10.0;
inline constexpr int kPatchSize = 16;

/// Globally greedy one-to-one pairing.
///
/// Every (ground, detected) candidate within `delta` pixels is ranked by
/// distance, then by |angle_diff|, then by (ground index, detected index), and
/// accepted if neither endpoint has been used yet.
inline Pairing pair_minutiae(const MinutiaeSet& ground, const MinutiaeSet& detected,
                             double delta = kDefaultPairingDistance) {
  if (!ground.same_frame(detected))
    throw InvalidArgument("pair_minutiae: ground truth and detected sets have different image sizes");
  if (!(delta >= 0.0)) throw InvalidArgument("pair_minutiae: delta must be non-negative");

  struct Candidate {
    double distance;
    double abs_dtheta;
    double dtheta;
    std::size_t g;
    std::size_t d;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < ground.size(); ++g) {
    for (std::size_t d = 0; d < detected.size(); ++d) {
      const double dist = std::hypot(ground[g].x - detected[d].x, ground[g].y - detected[d].y);
      if (dist > delta) continue;
      const double dt = angle_diff(ground[g].theta, detected[d].theta);
      candidates.push_back({dist, std::abs(dt), dt, g, d});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.abs_dtheta, a.g, a.d) <
           std::tie(b.distance, b.abs_dtheta, b.g, b.d);
  });

  Pairing out;
  std::vector<bool> used_g(ground.size(), false);
  std::vector<bool> used_d(detected.size(), false);
  for (const auto& c : candidates) {
    if (used_g[c.g] || used_d[c.d]) continue;
    used_g[c.g] = used_d[c.d] = true;
    out.pairs.push_back({c.g, c.d, c.distance, c.dtheta});
  }
  for (std::size_t g = 0; g < ground.size(); ++g)
    if (!used_g[g]) out.unpaired_ground.push_back(g);
  for (std::size_t d = 0; d < detected.size(); ++d)
    if (!used_d[d]) out.unpaired_detected.push_back(d);
  return out;
}

/// Per-patch detection counts over the 16x16 patch tiling of the image.
/// Patches overhanging the right/bottom edge are kept.
struct PatchGrid {
  struct Counts {
    int ground = 0;    // M_i
    int paired = 0;    // P_i
    int spurious = 0;  // D_i before clamping
    int missing = 0;   // I_i
  };

  int cols = 0;
  int rows = 0;
  std::vector<Counts> patches;

  std::size_t patch_count() const noexcept { return patches.size(); }
  const Counts& at(int col, int row) const { return patches[static_cast<std::size_t>(row) * cols + col]; }
};

inline PatchGrid build_patch_grid(const MinutiaeSet& ground, const MinutiaeSet& detected,
                                  const Pairing& pairing) {
  PatchGrid grid;
  grid.cols = (ground.width() + kPatchSize - 1) / kPatchSize;
  grid.rows = (ground.height() + kPatchSize - 1) / kPatchSize;
  grid.patches.assign(static_cast<std::size_t>(grid.cols) * grid.rows, {});

  auto index_of = [&](const Minutia& m) {
    const int c = std::clamp(static_cast<int>(std::floor(m.x / kPatchSize)), 0, grid.cols - 1);
    const int r = std::clamp(static_cast<int>(std::floor(m.y / kPatchSize)), 0, grid.rows - 1);
    return static_cast<std::size_t>(r) * grid.cols + c;
  };

  for (const auto& m : ground) grid.patches[index_of(m)].ground++;
  for (const auto& p : pairing.pairs) {
    if (p.ground >= ground.size() || p.detected >= detected.size())
      throw InvalidArgument("pairing refers to a minutia outside the given sets");
    grid.patches[index_of(ground[p.ground])].paired++;
  }
  for (auto g : pairing.unpaired_ground) grid.patches[index_of(ground[g])].missing++;
  for (auto d : pairing.unpaired_detected) grid.patches[index_of(detected[d])].spurious++;
  return grid;
}

/// Goodness Index in [-3, 1].
///
/// Only patches holding ground truth contribute; spurious minutiae in a patch
/// are capped at twice its ground-truth count.
inline double goodness_index(const MinutiaeSet& ground, const MinutiaeSet& detected,
                             const Pairing& pairing) {
  if (ground.empty()) throw InvalidArgument("goodness_index: empty ground-truth set");
  const PatchGrid grid = build_patch_grid(ground, detected, pairing);
  long numerator = 0;
  long denominator = 0;
  for (const auto& p : grid.patches) {
    if (p.ground == 0) continue;
    numerator += p.paired - std::min(p.spurious, 2 * p.ground) - p.missing;
    denominator += p.ground;
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

/// RMS positional deviation over paired minutiae, in pixels.
inline double positional_error(const MinutiaeSet& ground, const MinutiaeSet& detected,
                               const Pairing& pairing) {
  if (pairing.pairs.empty()) throw InvalidArgument("positional_error: empty pairing");
  double sum = 0.0;
  for (const auto& p : pairing.pairs) {
    const double dx = ground[p.ground].x - detected[p.detected].x;
    const double dy = ground[p.ground].y - detected[p.detected].y;
    sum += dx * dx + dy * dy;
  }
  return std::sqrt(sum / static_cast<double>(pairing.pairs.size()));
}

/// RMS of angle_diff(theta_ground, theta_detected) over paired minutiae.
inline double orientation_error(const MinutiaeSet& ground, const MinutiaeSet& detected,
                                const Pairing& pairing) {
  if (pairing.pairs.empty()) throw InvalidArgument("orientation_error: empty pairing");
  double sum = 0.0;
  for (const auto& p : pairing.pairs) {
    const double d = angle_diff(ground[p.ground].theta, detected[p.detected].theta);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pairing.pairs.size()));
}

/// Detection and localization metrics of one (ground truth, detection) case.
struct ExtractorMetrics {
  double paired_ratio = 0.0;
  double missing_ratio = 0.0;
  double spurious_ratio = 0.0;
  double goodness_index = 0.0;
  std::optional<double> positional_error;   // undefined with no pairs
  std::optional<double> orientation_error;  // undefined with no pairs
};

inline ExtractorMetrics evaluate_extraction(const MinutiaeSet& ground, const MinutiaeSet& detected,
                                            double delta = kDefaultPairingDistance) {
  if (ground.empty()) throw InvalidArgument("evaluate_extraction: empty ground-truth set");
  const Pairing pairing = pair_minutiae(ground, detected, delta);
  const double m = static_cast<double>(ground.size());
  ExtractorMetrics out;
  out.paired_ratio = static_cast<double>(pairing.pairs.size()) / m;
  out.missing_ratio = static_cast<double>(pairing.unpaired_ground.size()) / m;
  out.spurious_ratio = static_cast<double>(pairing.unpaired_detected.size()) / m;
  out.goodness_index = fpeval::goodness_index(ground, detected, pairing);
  if (!pairing.pairs.empty()) {
    out.positional_error = fpeval::positional_error(ground, detected, pairing);
    out.orientation_error = fpeval::orientation_error(ground, detected, pairing);
  }
  return out;
}

struct ExtractorCase {
  MinutiaeSet ground;
  MinutiaeSet detected;
  Condition condition = Condition::kNormal;
};

/// One row per condition: average and standard deviation of each metric
/// across the images of that condition.
struct ExtractorReportRow {
  Condition condition = Condition::kNormal;
  std::size_t cases = 0;
  Summary paired_ratio;
  Summary missing_ratio;
  Summary spurious_ratio;
  Summary goodness_index;
  Summary positional_error;
  Summary orientation_error;
};

struct ExtractorReport {
  std::vector<ExtractorReportRow> rows;  // ordered by Condition
  std::vector<std::string> failures;     // per-case problems, in case order
};

inline ExtractorReport extractor_report(const std::vector<ExtractorCase>& cases,
                                        double delta = kDefaultPairingDistance) {
  struct Acc {
    std::size_t cases = 0;
    std::vector<double> paired, missing, spurious, gi, ep, et;
  };
  std::map<Condition, Acc> acc;
  ExtractorReport report;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    ExtractorMetrics m;
    try {
      m = evaluate_extraction(c.ground, c.detected, delta);
    } catch (const Error& e) {
      report.failures.push_back("case " + std::to_string(i) + ": " + e.what());
      continue;
    }
    auto& a = acc[c.condition];
    a.cases++;
    a.paired.push_back(m.paired_ratio);
    a.missing.push_back(m.missing_ratio);
    a.spurious.push_back(m.spurious_ratio);
    a.gi.push_back(m.goodness_index);
    if (m.positional_error) {
      a.ep.push_back(*m.positional_error);
      a.et.push_back(*m.orientation_error);
    } else {
      report.failures.push_back("case " + std::to_string(i) +
                                ": no paired minutiae, localization errors undefined");
    }
  }
  for (const auto& [cond, a] : acc) {
    ExtractorReportRow row;
    row.condition = cond;
    row.cases = a.cases;
    row.paired_ratio = summarize(a.paired);
    row.missing_ratio = summarize(a.missing);
    row.spurious_ratio = summarize(a.spurious);
    row.goodness_index = summarize(a.gi);
    row.positional_error = summarize(a.ep);
    row.orientation_error = summarize(a.et);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fpeval
