#pragma once

// Baseline minutiae matcher.
//
// 1. Each minutia gets a local descriptor from its K nearest neighbours
//    (distance, bearing relative to the minutia direction, relative
//    direction), which is invariant to rotation and translation.
// 2. Minutia correspondences are ranked by descriptor similarity; the best
//    ones seed rigid alignment hypotheses (rotation from the direction
//    difference, translation from the positions).
// 3. Under each hypothesis the sets are paired greedily within a distance
//    and direction tolerance, refined once with a least-squares rigid fit.
// 4. The score is 2 * pairs / (|A| + |B|) for the best hypothesis. Both
//    directions are searched, so the score is symmetric.
//
// Hypotheses whose rotation exceeds `max_rotation` are discarded, the
// usual presentation-angle bound of minutiae matchers: small rotations are
// recovered, large ones are not.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <tuple>
#include <vector>

#include "fpeval/core.hpp"

namespace fpeval {

inline constexpr std::size_t kMaxNeighbors = 16;

struct MatcherConfig {
  std::size_t neighbors = 5;
  double distance_tolerance = 12.0;         // px
  double angle_tolerance = kPi / 6.0;       // rad
  std::size_t hypotheses = 20;
  double max_rotation = deg_to_rad(12.5);   // rad
  double descriptor_distance_tolerance = 8.0;   // px
  double descriptor_angle_tolerance = kPi / 6.0;  // rad
};

struct MatchScore {
  double value = 0.0;  // in [0, 1], higher is more similar
  std::size_t pairs = 0;
  double rotation = 0.0;  // rad, applied to the first set
  double tx = 0.0;
  double ty = 0.0;
};

/// A minutiae set with its neighbour descriptors precomputed.
class PreparedTemplate {
 public:
  struct Neighbor {
    double distance;
    double bearing;      // direction to the neighbour relative to theta
    double orientation;  // neighbour theta relative to theta
  };

  PreparedTemplate() = default;

  explicit PreparedTemplate(MinutiaeSet set, std::size_t k = MatcherConfig{}.neighbors)
      : set_(std::move(set)), k_(std::min(k, kMaxNeighbors)) {
    const std::size_t n = set_.size();
    descriptors_.resize(n);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < n; ++i) {
      dist.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) dist.emplace_back(std::hypot(set_[j].x - set_[i].x, set_[j].y - set_[i].y), j);
      const std::size_t take = std::min(k_, dist.size());
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
      for (std::size_t q = 0; q < take; ++q) {
        const auto& mi = set_[i];
        const auto& mj = set_[dist[q].second];
        const double dir = std::atan2(mj.y - mi.y, mj.x - mi.x);
        descriptors_[i].push_back(
            {dist[q].first, angle_diff(dir, mi.theta), angle_diff(mj.theta, mi.theta)});
      }
    }
  }

  const MinutiaeSet& set() const noexcept { return set_; }
  const std::vector<Neighbor>& descriptor(std::size_t i) const { return descriptors_[i]; }
  std::size_t neighbors() const noexcept { return k_; }
  std::size_t size() const noexcept { return set_.size(); }

 private:
  MinutiaeSet set_;
  std::size_t k_ = 5;
  std::vector<std::vector<Neighbor>> descriptors_;
};

namespace detail {

/// Similarity of two descriptors in [0, 1]: neighbours are paired greedily
/// by normalized cost, each pair contributing 1 - cost / 3.
inline double descriptor_similarity(const std::vector<PreparedTemplate::Neighbor>& a,
                                    const std::vector<PreparedTemplate::Neighbor>& b, std::size_t k,
                                    const MatcherConfig& cfg) {
  if (a.empty() || b.empty() || k == 0) return 0.0;
  struct Cand {
    double cost;
    std::size_t i, j;
  };
  Cand cands[kMaxNeighbors * kMaxNeighbors];
  std::size_t nc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double dd = std::abs(a[i].distance - b[j].distance);
      const double db = std::abs(angle_diff(a[i].bearing, b[j].bearing));
      const double dor = std::abs(angle_diff(a[i].orientation, b[j].orientation));
      if (dd > cfg.descriptor_distance_tolerance || db > cfg.descriptor_angle_tolerance ||
          dor > cfg.descriptor_angle_tolerance)
        continue;
      cands[nc++] = {dd / cfg.descriptor_distance_tolerance + db / cfg.descriptor_angle_tolerance +
                           dor / cfg.descriptor_angle_tolerance,
                       i, j};
    }
  }
  std::sort(cands, cands + nc, [](const Cand& x, const Cand& y) {
    return std::tie(x.cost, x.i, x.j) < std::tie(y.cost, y.i, y.j);
  });
  unsigned used_a = 0, used_b = 0;
  double sum = 0.0;
  for (std::size_t q = 0; q < nc; ++q) {
    const auto& c = cands[q];
    if ((used_a >> c.i & 1u) || (used_b >> c.j & 1u)) continue;
    used_a |= 1u << c.i;
    used_b |= 1u << c.j;
    sum += 1.0 - c.cost / 3.0;
  }
  return sum / static_cast<double>(k);
}

struct Rigid {
  double rotation = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  void apply(const Minutia& m, double& x, double& y) const {
    const double c = std::cos(rotation), s = std::sin(rotation);
    x = c * m.x - s * m.y + tx;
    y = s * m.x + c * m.y + ty;
  }
};

struct PairingResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// Greedy one-to-one pairing of transformed A against B.
inline PairingResult pair_aligned(const MinutiaeSet& a, const MinutiaeSet& b, const Rigid& t,
                                  const MatcherConfig& cfg) {
  struct Cand {
    double dist;
    double dtheta;
    std::size_t i, j;
  };
  std::vector<double> ax(a.size()), ay(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) t.apply(a[i], ax[i], ay[i]);
  std::vector<Cand> cands;
  const double tol2 = cfg.distance_tolerance * cfg.distance_tolerance;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double dx = ax[i] - b[j].x;
      const double dy = ay[i] - b[j].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > tol2) continue;
      const double dt = std::abs(angle_diff(a[i].theta + t.rotation, b[j].theta));
      if (dt > cfg.angle_tolerance) continue;
      cands.push_back({std::sqrt(d2), dt, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return std::tie(x.dist, x.dtheta, x.i, x.j) < std::tie(y.dist, y.dtheta, y.i, y.j);
  });
  PairingResult out;
  std::vector<bool> ua(a.size(), false), ub(b.size(), false);
  for (const auto& c : cands) {
    if (ua[c.i] || ub[c.j]) continue;
    ua[c.i] = ub[c.j] = true;
    out.pairs.emplace_back(c.i, c.j);
  }
  return out;
}

/// Least-squares rigid transform taking the paired A points onto B.
inline Rigid fit_rigid(const MinutiaeSet& a, const MinutiaeSet& b,
                       const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  double max = 0, may = 0, mbx = 0, mby = 0;
  for (auto [i, j] : pairs) {
    max += a[i].x;
    may += a[i].y;
    mbx += b[j].x;
    mby += b[j].y;
  }
  const double n = static_cast<double>(pairs.size());
  max /= n;
  may /= n;
  mbx /= n;
  mby /= n;
  double sxx = 0, sxy = 0;
  for (auto [i, j] : pairs) {
    const double px = a[i].x - max, py = a[i].y - may;
    const double qx = b[j].x - mbx, qy = b[j].y - mby;
    sxx += px * qx + py * qy;
    sxy += px * qy - py * qx;
  }
  Rigid r;
  r.rotation = std::atan2(sxy, sxx);
  const double c = std::cos(r.rotation), s = std::sin(r.rotation);
  r.tx = mbx - (c * max - s * may);
  r.ty = mby - (s * max + c * may);
  return r;
}

}  // namespace detail

class BaselineMatcher {
 public:
  BaselineMatcher() = default;
  explicit BaselineMatcher(MatcherConfig cfg) : cfg_(cfg) {
    if (cfg_.neighbors == 0 || cfg_.neighbors > kMaxNeighbors)
      throw InvalidArgument("matcher: neighbors must be in [1, 16]");
    if (!(cfg_.distance_tolerance > 0.0) || !(cfg_.angle_tolerance > 0.0) || cfg_.hypotheses == 0 ||
        !(cfg_.max_rotation >= 0.0) || !(cfg_.descriptor_distance_tolerance > 0.0) ||
        !(cfg_.descriptor_angle_tolerance > 0.0))
      throw InvalidArgument("matcher: tolerances and hypothesis count must be positive");
  }

  const MatcherConfig& config() const noexcept { return cfg_; }

  PreparedTemplate prepare(MinutiaeSet set) const { return PreparedTemplate(std::move(set), cfg_.neighbors); }

  MatchScore match(const MinutiaeSet& a, const MinutiaeSet& b) const { return match(prepare(a), prepare(b)); }

  MatchScore match(const PreparedTemplate& pa, const PreparedTemplate& pb) const {
    MatchScore forward = directed(pa, pb);
    const MatchScore backward = directed(pb, pa);
    if (backward.pairs > forward.pairs) {
      const double c = std::cos(backward.rotation), s = std::sin(backward.rotation);
      forward = backward;
      forward.rotation = -backward.rotation;
      forward.tx = -(c * backward.tx + s * backward.ty);
      forward.ty = -(-s * backward.tx + c * backward.ty);
    }
    return forward;
  }

 private:
  MatchScore directed(const PreparedTemplate& pa, const PreparedTemplate& pb) const {
    const auto& a = pa.set();
    const auto& b = pb.set();
    MatchScore best;
    if (a.empty() || b.empty()) return best;

    struct Hyp {
      double similarity;
      std::size_t i, j;
    };
    std::vector<Hyp> hyps;
    hyps.reserve(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (std::abs(angle_diff(b[j].theta, a[i].theta)) > cfg_.max_rotation) continue;
        hyps.push_back({detail::descriptor_similarity(pa.descriptor(i), pb.descriptor(j), cfg_.neighbors, cfg_), i, j});
      }
    }
    const std::size_t take = std::min(cfg_.hypotheses, hyps.size());
    std::partial_sort(hyps.begin(), hyps.begin() + static_cast<std::ptrdiff_t>(take), hyps.end(),
                      [](const Hyp& x, const Hyp& y) {
                        if (x.similarity != y.similarity) return x.similarity > y.similarity;
                        return std::tie(x.i, x.j) < std::tie(y.i, y.j);
                      });

    const double total = static_cast<double>(a.size() + b.size());
    auto consider = [&](const detail::Rigid& t, std::size_t pairs) {
      if (pairs > best.pairs) {
        best.pairs = pairs;
        best.value = 2.0 * static_cast<double>(pairs) / total;
        best.rotation = t.rotation;
        best.tx = t.tx;
        best.ty = t.ty;
      }
    };

    for (std::size_t h = 0; h < take; ++h) {
      const auto& ai = a[hyps[h].i];
      const auto& bj = b[hyps[h].j];
      detail::Rigid t;
      t.rotation = angle_diff(bj.theta, ai.theta);
      const double c = std::cos(t.rotation), s = std::sin(t.rotation);
      t.tx = bj.x - (c * ai.x - s * ai.y);
      t.ty = bj.y - (s * ai.x + c * ai.y);
      const auto first = detail::pair_aligned(a, b, t, cfg_);
      consider(t, first.pairs.size());
      if (first.pairs.size() >= 2) {
        const auto refined = detail::fit_rigid(a, b, first.pairs);
        if (std::abs(refined.rotation) <= cfg_.max_rotation)
          consider(refined, detail::pair_aligned(a, b, refined, cfg_).pairs.size());
      }
    }
    best.value = std::clamp(best.value, 0.0, 1.0);
    return best;
  }

  MatcherConfig cfg_;
};

inline MatchScore match(const MinutiaeSet& a, const MinutiaeSet& b) { return BaselineMatcher{}.match(a, b); }

}  // namespace fpeval
