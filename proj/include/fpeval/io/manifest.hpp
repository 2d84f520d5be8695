#pragma once

// Run manifest: a JSON document describing one evaluation run.
//
//   {
//     "kind": "blackbox",                  reader | extractor | matcher | blackbox
//     "dataset_root": "dataset",           relative to the manifest directory
//     "output_dir": "out",                 relative to the manifest directory
//     "seed": 7,
//     "resolution": 500,
//     "far": 0.001,
//     "trials": 1,
//     "records": [
//       {"id": "f01_dry", "finger": "f01", "impression": "2", "reader": "optical",
//        "condition": "dry_finger", "metadata": {"moisture_percent": 12},
//        "image": "img/f01_dry.png", "template": "tpl/f01_dry.txt",
//        "ground_truth": "gt/f01_dry.txt"}
//     ],
//     "perturbations": [{"kind": "rotate_global", "degrees": 10}],
//     "systems": [
//       {"name": "baseline", "role": "matcher", "builtin": "baseline"},
//       {"name": "vendor-a", "role": "matcher", "executable": "bin/match",
//        "score_min": 0, "score_max": 1, "timeout": 30, "extractor": "ext-a"}
//     ]
//   }
//
// Record paths are relative to the dataset root; executables are relative to
// the manifest directory unless absolute. Every referenced file must exist.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpeval/adapter.hpp"
#include "fpeval/core.hpp"
#include "fpeval/perturb.hpp"

namespace fpeval::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

enum class EvalKind { kReader, kExtractor, kMatcher, kBlackbox };

inline std::string_view to_string(EvalKind k) {
  switch (k) {
    case EvalKind::kReader: return "reader";
    case EvalKind::kExtractor: return "extractor";
    case EvalKind::kMatcher: return "matcher";
    case EvalKind::kBlackbox: return "blackbox";
  }
  return "?";
}

inline std::optional<EvalKind> eval_kind_from_string(std::string_view s) {
  for (auto k : {EvalKind::kReader, EvalKind::kExtractor, EvalKind::kMatcher, EvalKind::kBlackbox})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct Record {
  std::string id;
  std::string finger;
  std::string impression;
  std::string reader;
  CaptureCondition capture;
  std::optional<fs::path> image;
  std::optional<fs::path> template_path;
  std::optional<fs::path> ground_truth;

  Condition condition() const noexcept { return capture.condition; }
};

/// A system under test: either built in or an external executable.
struct SystemSpec {
  ExternalSystem system;
  std::string builtin;    // empty for external systems
  std::string extractor;  // matcher systems only: name of an extractor system

  const std::string& name() const noexcept { return system.name; }
  SystemRole role() const noexcept { return system.role; }
  bool is_builtin() const noexcept { return !builtin.empty(); }
};

inline constexpr const char* kBuiltinMatcher = "baseline";
inline constexpr const char* kBuiltinRecordTemplate = "record-template";

struct RunManifest {
  EvalKind kind = EvalKind::kBlackbox;
  fs::path base_dir;
  fs::path dataset_root;
  fs::path output_dir;
  std::uint64_t seed = 0;
  int resolution = MinutiaeSet::kDefaultResolution;
  double far = 0.001;
  std::size_t trials = 1;
  std::vector<Record> records;  // sorted by id
  std::vector<PerturbationSpec> perturbations;
  std::vector<SystemSpec> systems;

  const SystemSpec* find_system(const std::string& name) const {
    for (const auto& s : systems)
      if (s.name() == name) return &s;
    return nullptr;
  }
  std::vector<const SystemSpec*> systems_with_role(SystemRole role) const {
    std::vector<const SystemSpec*> out;
    for (const auto& s : systems)
      if (s.role() == role) out.push_back(&s);
    return out;
  }
};

namespace detail {

inline std::string context(const std::string& where, const std::string& what) { return where + ": " + what; }

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw DataError(context(where, std::string("field '") + key + "' has the wrong type"));
  }
}

inline std::string required_string(const Json& j, const char* key, const std::string& where) {
  auto s = get_or<std::string>(j, key, "", where);
  if (s.empty()) throw DataError(context(where, std::string("missing or empty '") + key + "'"));
  return s;
}

inline void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) throw DataError(context(where, "expected a JSON object"));
}

inline fs::path existing(const fs::path& base, const std::string& rel, const std::string& where) {
  fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
  p = p.lexically_normal();
  if (!fs::exists(p)) throw DataError(context(where, "file not found: " + p.string()));
  return p;
}

inline std::optional<fs::path> optional_path(const Json& j, const char* key, const fs::path& base,
                                             const std::string& where) {
  auto s = get_or<std::string>(j, key, "", where);
  if (s.empty()) return std::nullopt;
  return existing(base, s, where);
}

inline CaptureMetadata metadata_from_json(const Json& j, const std::string& where) {
  CaptureMetadata m;
  if (j.is_null()) return m;
  require_object(j, where);
  auto field = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return get_or(j, key, 0.0, where);
  };
  m.illumination_lux = field("illumination_lux");
  m.pressure_kpa = field("pressure_kpa");
  m.moisture_percent = field("moisture_percent");
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(context(where, e.what()));
  }
  return m;
}

}  // namespace detail

inline Json to_json(const PerturbationSpec& p) {
  Json j;
  j["kind"] = std::string(to_string(p.kind));
  switch (p.kind) {
    case PerturbationKind::kDisplace:
      j["sigma_xy"] = p.sigma_xy;
      j["sigma_theta"] = p.sigma_theta;
      break;
    case PerturbationKind::kAddSpurious:
    case PerturbationKind::kRemoveRandom: j["count"] = p.count; break;
    case PerturbationKind::kOccludeBlock: j["box_side"] = p.box_side; break;
    case PerturbationKind::kRotateGlobal: j["degrees"] = p.degrees; break;
    case PerturbationKind::kNonlinearDistort: j["magnitude"] = p.magnitude; break;
  }
  return j;
}

inline PerturbationSpec perturbation_from_json(const Json& j, const std::string& where) {
  detail::require_object(j, where);
  const auto kind_name = detail::required_string(j, "kind", where);
  const auto kind = perturbation_kind_from_string(kind_name);
  if (!kind) throw DataError(detail::context(where, "unknown perturbation kind '" + kind_name + "'"));
  PerturbationSpec p;
  p.kind = *kind;
  p.sigma_xy = detail::get_or(j, "sigma_xy", 0.0, where);
  p.sigma_theta = detail::get_or(j, "sigma_theta", 0.0, where);
  p.count = detail::get_or<std::size_t>(j, "count", 0, where);
  p.box_side = detail::get_or(j, "box_side", 0, where);
  p.degrees = detail::get_or(j, "degrees", 0.0, where);
  p.magnitude = detail::get_or(j, "magnitude", 0.0, where);
  p.seed = detail::get_or<std::uint64_t>(j, "seed", 0, where);
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(detail::context(where, e.what()));
  }
  return p;
}

inline SystemSpec system_from_json(const Json& j, const fs::path& base, const std::string& where) {
  detail::require_object(j, where);
  SystemSpec s;
  s.system.name = detail::required_string(j, "name", where);
  const auto role_name = detail::required_string(j, "role", where);
  const auto role = system_role_from_string(role_name);
  if (!role) throw DataError(detail::context(where, "unknown role '" + role_name + "'"));
  s.system.role = *role;
  s.builtin = detail::get_or<std::string>(j, "builtin", "", where);
  const auto exe = detail::get_or<std::string>(j, "executable", "", where);
  if (s.builtin.empty() == exe.empty())
    throw DataError(detail::context(where, "exactly one of 'builtin' and 'executable' is required"));
  if (!s.builtin.empty()) {
    const bool known = (s.builtin == kBuiltinMatcher && *role == SystemRole::kMatcher) ||
                       (s.builtin == kBuiltinRecordTemplate && *role == SystemRole::kExtractor);
    if (!known) throw DataError(detail::context(where, "unknown builtin '" + s.builtin + "' for role " + role_name));
    s.system.executable = "builtin:" + s.builtin;
  } else {
    s.system.executable = detail::existing(base, exe, where).string();
  }
  s.system.score_min = detail::get_or(j, "score_min", 0.0, where);
  s.system.score_max = detail::get_or(j, "score_max", 1.0, where);
  s.system.timeout_seconds = detail::get_or(j, "timeout", 30.0, where);
  s.extractor = detail::get_or<std::string>(j, "extractor", "", where);
  try {
    s.system.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(detail::context(where, e.what()));
  }
  return s;
}

inline Record record_from_json(const Json& j, const fs::path& root, const std::string& where) {
  detail::require_object(j, where);
  Record r;
  r.finger = detail::required_string(j, "finger", where);
  r.impression = detail::get_or<std::string>(j, "impression", "", where);
  r.id = detail::get_or<std::string>(j, "id", "", where);
  if (r.id.empty()) r.id = r.impression.empty() ? r.finger : r.finger + "_" + r.impression;
  r.reader = detail::get_or<std::string>(j, "reader", "default", where);
  const auto cond = detail::get_or<std::string>(j, "condition", "normal", where);
  const auto c = condition_from_string(cond);
  if (!c) throw DataError(detail::context(where, "unknown condition '" + cond + "'"));
  r.capture.condition = *c;
  if (j.contains("metadata")) r.capture.metadata = detail::metadata_from_json(j.at("metadata"), where);
  r.image = detail::optional_path(j, "image", root, where);
  r.template_path = detail::optional_path(j, "template", root, where);
  r.ground_truth = detail::optional_path(j, "ground_truth", root, where);
  return r;
}

/// Validates and resolves a parsed manifest. `base_dir` is the directory
/// relative paths are resolved against.
inline RunManifest manifest_from_json(const Json& j, const fs::path& base_dir) {
  const std::string where = "manifest";
  detail::require_object(j, where);
  RunManifest m;
  m.base_dir = base_dir;
  const auto kind_name = detail::required_string(j, "kind", where);
  const auto kind = eval_kind_from_string(kind_name);
  if (!kind) throw DataError("manifest: unknown kind '" + kind_name + "'");
  m.kind = *kind;
  m.dataset_root = (base_dir / detail::get_or<std::string>(j, "dataset_root", ".", where)).lexically_normal();
  if (!fs::is_directory(m.dataset_root))
    throw DataError("manifest: dataset root is not a directory: " + m.dataset_root.string());
  m.output_dir = (base_dir / detail::get_or<std::string>(j, "output_dir", "out", where)).lexically_normal();
  m.seed = detail::get_or<std::uint64_t>(j, "seed", 0, where);
  m.resolution = detail::get_or(j, "resolution", MinutiaeSet::kDefaultResolution, where);
  if (m.resolution <= 0) throw DataError("manifest: resolution must be positive");
  m.far = detail::get_or(j, "far", 0.001, where);
  if (!(m.far > 0.0 && m.far < 1.0)) throw DataError("manifest: far must be in (0, 1)");
  m.trials = detail::get_or<std::size_t>(j, "trials", 1, where);
  if (m.trials == 0) throw DataError("manifest: trials must be at least 1");

  const Json records = j.value("records", Json::array());
  if (!records.is_array()) throw DataError("manifest: 'records' must be an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto r = record_from_json(records[i], m.dataset_root, "record " + std::to_string(i));
    if (!ids.insert(r.id).second) throw DataError("record " + std::to_string(i) + ": duplicate id '" + r.id + "'");
    m.records.push_back(std::move(r));
  }
  std::sort(m.records.begin(), m.records.end(), [](const Record& a, const Record& b) { return a.id < b.id; });

  const Json perturbations = j.value("perturbations", Json::array());
  if (!perturbations.is_array()) throw DataError("manifest: 'perturbations' must be an array");
  for (std::size_t i = 0; i < perturbations.size(); ++i)
    m.perturbations.push_back(perturbation_from_json(perturbations[i], "perturbation " + std::to_string(i)));

  const Json systems = j.value("systems", Json::array());
  if (!systems.is_array()) throw DataError("manifest: 'systems' must be an array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    auto s = system_from_json(systems[i], base_dir, "system " + std::to_string(i));
    if (!names.insert(s.name()).second) throw DataError("system " + std::to_string(i) + ": duplicate name '" + s.name() + "'");
    m.systems.push_back(std::move(s));
  }
  for (const auto& s : m.systems) {
    if (s.extractor.empty()) continue;
    const auto* e = m.find_system(s.extractor);
    if (!e || e->role() != SystemRole::kExtractor)
      throw DataError("system '" + s.name() + "': extractor '" + s.extractor + "' is not a declared extractor");
  }
  return m;
}

inline RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return manifest_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

/// Serializes a manifest with paths relative to `base_dir`.
inline Json to_json(const RunManifest& m, const fs::path& base_dir) {
  auto rel = [](const fs::path& p, const fs::path& base) { return p.lexically_relative(base).generic_string(); };
  Json j;
  j["kind"] = std::string(to_string(m.kind));
  j["dataset_root"] = rel(m.dataset_root, base_dir);
  j["output_dir"] = rel(m.output_dir, base_dir);
  j["seed"] = m.seed;
  j["resolution"] = m.resolution;
  j["far"] = m.far;
  j["trials"] = m.trials;
  Json records = Json::array();
  for (const auto& r : m.records) {
    Json jr;
    jr["id"] = r.id;
    jr["finger"] = r.finger;
    jr["impression"] = r.impression;
    jr["reader"] = r.reader;
    jr["condition"] = std::string(to_string(r.condition()));
    const auto& md = r.capture.metadata;
    if (md.illumination_lux || md.pressure_kpa || md.moisture_percent) {
      Json jm = Json::object();
      if (md.illumination_lux) jm["illumination_lux"] = *md.illumination_lux;
      if (md.pressure_kpa) jm["pressure_kpa"] = *md.pressure_kpa;
      if (md.moisture_percent) jm["moisture_percent"] = *md.moisture_percent;
      jr["metadata"] = jm;
    }
    if (r.image) jr["image"] = rel(*r.image, m.dataset_root);
    if (r.template_path) jr["template"] = rel(*r.template_path, m.dataset_root);
    if (r.ground_truth) jr["ground_truth"] = rel(*r.ground_truth, m.dataset_root);
    records.push_back(jr);
  }
  j["records"] = records;
  Json perts = Json::array();
  for (const auto& p : m.perturbations) perts.push_back(to_json(p));
  j["perturbations"] = perts;
  Json systems = Json::array();
  for (const auto& s : m.systems) {
    Json js;
    js["name"] = s.name();
    js["role"] = std::string(to_string(s.role()));
    if (s.is_builtin()) {
      js["builtin"] = s.builtin;
    } else {
      js["executable"] = rel(s.system.executable, base_dir);
      js["score_min"] = s.system.score_min;
      js["score_max"] = s.system.score_max;
      js["timeout"] = s.system.timeout_seconds;
    }
    if (!s.extractor.empty()) js["extractor"] = s.extractor;
    systems.push_back(js);
  }
  j["systems"] = systems;
  return j;
}

}  // namespace fpeval::io
