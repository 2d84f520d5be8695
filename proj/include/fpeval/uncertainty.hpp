#pragma once

// Monte Carlo uncertainty of a module under perturbation.
//
// For M reference feature sets S_k, each with N perturbed counterparts,
// a module-specific scorer produces s_{k,n}. Scores are min-max normalized
// into [0, 1]; per reference, the mean mu_k and the population RMS deviation
// u_k are taken; u_total is the root mean square of the u_k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpeval/error.hpp"

namespace fpeval {

struct ScoreBounds {
  double min = 0.0;
  double max = 1.0;
};

/// Bounds for the Goodness Index, whose native range is [-3, 1].
inline constexpr ScoreBounds kGoodnessIndexBounds{-3.0, 1.0};
inline constexpr ScoreBounds kUnitBounds{0.0, 1.0};

inline void check_bounds(ScoreBounds b) {
  if (!std::isfinite(b.min) || !std::isfinite(b.max) || !(b.max > b.min))
    throw InvalidArgument("score bounds require finite max > min");
}

/// Min-max normalization; a score outside the bounds lands on 0 or 1.
inline double normalize_score(double score, ScoreBounds bounds) {
  if (!std::isfinite(score)) throw InvalidArgument("normalize_scores: non-finite score");
  return std::clamp((score - bounds.min) / (bounds.max - bounds.min), 0.0, 1.0);
}

inline std::vector<double> normalize_scores(std::span<const double> scores, double min, double max) {
  const ScoreBounds b{min, max};
  check_bounds(b);
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(normalize_score(s, b));
  return out;
}

struct StandardUncertainty {
  double mean = 0.0;
  double u = 0.0;
};

inline StandardUncertainty standard_uncertainty(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("standard_uncertainty: no scores");
  // Mean accumulated relative to the first score so that identical scores
  // give exactly zero deviation.
  const double pivot = scores.front();
  double sum = 0.0;
  for (double s : scores) sum += s - pivot;
  const double n = static_cast<double>(scores.size());
  const double mean = pivot + sum / n;
  double ss = 0.0;
  for (double s : scores) ss += (mean - s) * (mean - s);
  return {mean, std::sqrt(ss / n)};
}

inline double total_uncertainty(std::span<const double> u) {
  if (u.empty()) throw InvalidArgument("total_uncertainty: no references");
  double ss = 0.0;
  for (double v : u) {
    if (!(v >= 0.0)) throw InvalidArgument("total_uncertainty: negative standard uncertainty");
    ss += v * v;
  }
  return std::sqrt(ss / static_cast<double>(u.size()));
}

struct UncertaintyReport {
  std::vector<double> mean;         // mu_k
  std::vector<double> uncertainty;  // u_k
  std::vector<std::size_t> perturbations;  // N for each reference
  double total = 0.0;                      // u_total
  ScoreBounds bounds;
  std::size_t clamped = 0;  // raw scores that fell outside `bounds`

  std::size_t references() const noexcept { return uncertainty.size(); }
};

/// Raised when the scorer fails; identifies the offending (reference, perturbation).
class ScorerError : public Error {
 public:
  ScorerError(std::size_t reference, std::size_t perturbation, const std::string& cause)
      : Error("scorer failed on reference " + std::to_string(reference) + ", perturbation " +
              std::to_string(perturbation) + ": " + cause),
        reference_(reference),
        perturbation_(perturbation) {}

  std::size_t reference() const noexcept { return reference_; }
  std::size_t perturbation() const noexcept { return perturbation_; }

 private:
  std::size_t reference_;
  std::size_t perturbation_;
};

/// Builds the report from already computed raw scores, one row per reference.
inline UncertaintyReport uncertainty_from_scores(const std::vector<std::vector<double>>& raw,
                                                 ScoreBounds bounds) {
  check_bounds(bounds);
  if (raw.empty()) throw InvalidArgument("run_uncertainty: no references");
  UncertaintyReport report;
  report.bounds = bounds;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (raw[k].empty())
      throw InvalidArgument("run_uncertainty: reference " + std::to_string(k) +
                            " has no perturbed counterpart");
    for (double s : raw[k])
      if (std::isfinite(s) && (s < bounds.min || s > bounds.max)) report.clamped++;
    const auto normalized = normalize_scores(raw[k], bounds.min, bounds.max);
    const auto su = standard_uncertainty(normalized);
    report.mean.push_back(su.mean);
    report.uncertainty.push_back(su.u);
    report.perturbations.push_back(raw[k].size());
  }
  report.total = total_uncertainty(report.uncertainty);
  return report;
}

/// Full procedure for an arbitrary scorer `score(reference, perturbed) -> double`.
template <typename Reference, typename Perturbed, typename Scorer>
UncertaintyReport run_uncertainty(std::span<const Reference> references,
                                  const std::vector<std::vector<Perturbed>>& perturbed,
                                  Scorer&& score, ScoreBounds bounds) {
  if (references.size() != perturbed.size())
    throw InvalidArgument("run_uncertainty: one perturbed list per reference required");
  std::vector<std::vector<double>> raw(references.size());
  for (std::size_t k = 0; k < references.size(); ++k) {
    raw[k].reserve(perturbed[k].size());
    for (std::size_t n = 0; n < perturbed[k].size(); ++n) {
      double s = 0.0;
      try {
        s = static_cast<double>(score(references[k], perturbed[k][n]));
      } catch (const std::exception& e) {
        throw ScorerError(k, n, e.what());
      }
      if (!std::isfinite(s)) throw ScorerError(k, n, "non-finite score");
      raw[k].push_back(s);
    }
  }
  return uncertainty_from_scores(raw, bounds);
}

}  // namespace fpeval
