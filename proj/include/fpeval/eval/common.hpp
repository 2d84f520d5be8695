#pragma once

// Shared plumbing of the manifest-driven evaluations: record accounting,
// system invocation and report fragments.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fpeval/adapter.hpp"
#include "fpeval/core.hpp"
#include "fpeval/io/manifest.hpp"
#include "fpeval/io/report.hpp"
#include "fpeval/io/template_io.hpp"
#include "fpeval/matcher.hpp"
#include "fpeval/uncertainty.hpp"

namespace fpeval::eval {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct EvalOptions {
  std::size_t jobs = 1;  // 0 uses every hardware thread
};

/// Which manifest records were used and why the others were not.
/// processed() + excluded.size() always equals total.
struct Accounting {
  std::size_t total = 0;
  std::vector<std::pair<std::string, std::string>> excluded;  // (record id, reason)

  std::size_t processed() const noexcept { return total - excluded.size(); }

  Json to_json() const {
    Json j;
    j["total"] = total;
    j["processed"] = processed();
    j["excluded"] = excluded.size();
    Json list = Json::array();
    for (const auto& [id, reason] : excluded) list.push_back({{"id", id}, {"reason", reason}});
    j["exclusions"] = list;
    return j;
  }
};

inline Json to_json(const FailureTally& t) {
  Json j;
  j["attempted"] = t.attempted;
  j["failed"] = t.failed;
  j["clamped"] = t.clamped;
  j["failure_rate"] = t.rate();
  j["limit_exceeded"] = t.exceeded();
  return j;
}

inline Json to_json(const UncertaintyReport& r) {
  Json j;
  j["references"] = r.references();
  j["u_total"] = io::number(r.total);
  j["u"] = r.uncertainty;
  j["mean"] = r.mean;
  j["perturbations"] = r.perturbations;
  j["bounds"] = {r.bounds.min, r.bounds.max};
  j["clamped"] = r.clamped;
  return j;
}

/// File-name-safe form of a record id or system name.
inline std::string file_stem(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

/// Directory for intermediate files handed to external systems.
inline fs::path work_dir(const io::RunManifest& m, const std::string& part) {
  const auto dir = m.output_dir / "work" / file_stem(part);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

/// A template as seen by a matcher: in memory for the built-in matcher and
/// on disk for external ones.
struct TemplateHandle {
  std::shared_ptr<const PreparedTemplate> prepared;
  fs::path path;

  explicit operator bool() const noexcept { return prepared != nullptr; }
};

/// Builds a handle; the template file is written only when `file` is set.
inline TemplateHandle make_handle(MinutiaeSet set, const std::optional<fs::path>& file,
                                  std::size_t neighbors = MatcherConfig{}.neighbors) {
  TemplateHandle h;
  if (file) {
    io::save_template(set, file->string());
    h.path = *file;
  }
  h.prepared = std::make_shared<const PreparedTemplate>(std::move(set), neighbors);
  return h;
}

/// Scores template pairs with one matcher system.
class MatcherRunner {
 public:
  explicit MatcherRunner(const io::SystemSpec& spec) : spec_(&spec) {}

  const io::SystemSpec& spec() const noexcept { return *spec_; }
  bool needs_files() const noexcept { return !spec_->is_builtin(); }
  ScoreBounds bounds() const { return {spec_->system.score_min, spec_->system.score_max}; }

  ExternalScore score(const TemplateHandle& a, const TemplateHandle& b) const {
    if (!a || !b) {
      ExternalScore missing;
      missing.status = CallStatus::kSpawnFailed;
      missing.detail = "template unavailable";
      return missing;
    }
    if (spec_->is_builtin()) {
      ExternalScore s;
      s.value = s.raw = matcher_.match(*a.prepared, *b.prepared).value;
      return s;
    }
    return match_external(spec_->system, a.path.string(), b.path.string());
  }

 private:
  const io::SystemSpec* spec_;
  BaselineMatcher matcher_;
};

/// Result of running one extractor system on one record.
struct Extraction {
  std::optional<MinutiaeSet> set;
  std::string error;
};

/// Runs an extractor system on a record: the built-in "record-template"
/// reads the record's template, external extractors run on the image.
inline Extraction extract(const io::SystemSpec& system, const io::Record& record, const io::RunManifest& m) {
  Extraction out;
  try {
    if (system.is_builtin()) {
      if (!record.template_path) {
        out.error = "record has no template";
        return out;
      }
      out.set = io::load_template(record.template_path->string());
      return out;
    }
    if (!record.image) {
      out.error = "record has no image";
      return out;
    }
    const auto target = work_dir(m, "extracted_" + system.name()) / (file_stem(record.id) + ".txt");
    std::error_code ec;
    fs::remove(target, ec);
    const auto pr = extract_external(system.system, record.image->string(), target.string());
    if (pr.status != CallStatus::kOk) {
      out.error = std::string(to_string(pr.status));
      if (pr.status == CallStatus::kNonzeroExit) out.error += " (" + std::to_string(pr.exit_code) + ")";
      return out;
    }
    out.set = io::load_template(target.string());
  } catch (const Error& e) {
    out.set.reset();
    out.error = e.what();
  }
  return out;
}

/// Records of each finger that count for one condition family: its normal
/// impressions together with its impressions under the family's conditions.
/// Fingers without a normal impression, or without any impression in the
/// family, form no group.
struct FamilyGroups {
  std::vector<std::vector<std::size_t>> groups;  // indices into the input, one list per finger
  std::size_t fingers_without_normal = 0;
  std::size_t fingers_without_family = 0;
};

inline FamilyGroups family_groups(const std::vector<const io::Record*>& records, ConditionFamily family) {
  std::map<std::string, std::vector<std::size_t>> by_finger;
  for (std::size_t i = 0; i < records.size(); ++i) by_finger[records[i]->finger].push_back(i);
  FamilyGroups out;
  for (const auto& [finger, idx] : by_finger) {
    std::vector<std::size_t> normal, adverse;
    for (auto i : idx) {
      const auto c = records[i]->condition();
      if (c == Condition::kNormal)
        normal.push_back(i);
      else if (family_of(c) == family)
        adverse.push_back(i);
    }
    if (normal.empty()) {
      out.fingers_without_normal++;
      continue;
    }
    if (adverse.empty()) {
      out.fingers_without_family++;
      continue;
    }
    normal.insert(normal.end(), adverse.begin(), adverse.end());
    out.groups.push_back(std::move(normal));
  }
  return out;
}

/// Uncertainty over per-finger score groups; missing scores are skipped and
/// groups left empty are dropped. Returns nothing when no group remains.
inline std::optional<UncertaintyReport> group_uncertainty(const FamilyGroups& fg,
                                                          const std::vector<std::optional<double>>& scores,
                                                          ScoreBounds bounds) {
  std::vector<std::vector<double>> raw;
  for (const auto& g : fg.groups) {
    std::vector<double> row;
    for (auto i : g)
      if (scores[i]) row.push_back(*scores[i]);
    if (!row.empty()) raw.push_back(std::move(row));
  }
  if (raw.empty()) return std::nullopt;
  return uncertainty_from_scores(raw, bounds);
}

inline Json to_json(const std::optional<UncertaintyReport>& r, const FamilyGroups& fg) {
  Json j = r ? to_json(*r) : Json{{"references", 0}, {"u_total", nullptr}};
  j["fingers_without_normal"] = fg.fingers_without_normal;
  j["fingers_without_family"] = fg.fingers_without_family;
  return j;
}

/// Row label of a perturbation arm, e.g. "Occlusion 64" or "Global Rotation 10".
inline std::string family_label(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::kRotateGlobal: return "Global Rotation";
    case PerturbationKind::kOccludeBlock: return "Occlusion";
    case PerturbationKind::kDisplace: return "Displacement";
    case PerturbationKind::kAddSpurious: return "Spurious Minutiae";
    case PerturbationKind::kRemoveRandom: return "Missing Minutiae";
    case PerturbationKind::kNonlinearDistort: return "Nonlinear Distortion";
  }
  return "Perturbation";
}

inline std::string magnitude_label(const PerturbationSpec& p) {
  switch (p.kind) {
    case PerturbationKind::kRotateGlobal: return io::cell(std::abs(p.degrees));
    case PerturbationKind::kOccludeBlock: return std::to_string(p.box_side);
    case PerturbationKind::kDisplace: return io::cell(p.sigma_xy) + "/" + io::cell(p.sigma_theta);
    case PerturbationKind::kAddSpurious:
    case PerturbationKind::kRemoveRandom: return std::to_string(p.count);
    case PerturbationKind::kNonlinearDistort: return io::cell(p.magnitude);
  }
  return "";
}

}  // namespace fpeval::eval
