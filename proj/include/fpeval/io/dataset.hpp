#pragma once

// Writes a synthetic dataset with a manifest: every finger is captured once
// under each capture condition. Per capture the dataset holds the placed
// minutiae (ground truth), the damaged minutiae (template) and optionally a
// rendered image.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <random>
#include <string>

#include "fpeval/io/image_io.hpp"
#include "fpeval/io/manifest.hpp"
#include "fpeval/io/template_io.hpp"
#include "fpeval/synthetic.hpp"

namespace fpeval::io {

struct SyntheticDatasetOptions {
  std::filesystem::path directory;
  EvalKind kind = EvalKind::kBlackbox;
  std::size_t fingers = 20;
  std::size_t min_minutiae = 25;
  std::size_t max_minutiae = 40;
  std::uint64_t seed = 1;
  bool images = false;
  std::string reader = "synthetic";
};

/// Generates the dataset and returns the path of its manifest.
inline std::filesystem::path write_synthetic_dataset(const SyntheticDatasetOptions& opt) {
  namespace fs = std::filesystem;
  if (opt.fingers == 0) throw InvalidArgument("synthetic dataset needs at least one finger");
  if (opt.min_minutiae == 0 || opt.min_minutiae > opt.max_minutiae)
    throw InvalidArgument("synthetic dataset needs 0 < min minutiae <= max minutiae");
  const bool images = opt.images || opt.kind == EvalKind::kReader;
  for (const char* sub : {"templates", "ground_truth"}) fs::create_directories(opt.directory / sub);
  if (images) fs::create_directories(opt.directory / "images");

  Json records = Json::array();
  const int digits = static_cast<int>(std::to_string(opt.fingers).size());
  for (std::size_t f = 0; f < opt.fingers; ++f) {
    std::ostringstream name;
    name << 'f' << std::setw(digits) << std::setfill('0') << f + 1;
    const std::string finger = name.str();
    Rng rng(derive_seed(opt.seed, f));
    std::uniform_int_distribution<std::size_t> count(opt.min_minutiae, opt.max_minutiae);
    const auto model = synthetic::make_finger(rng, count(rng));
    std::size_t impression = 0;
    for (auto c : kAllConditions) {
      const std::string id = finger + "_" + std::string(to_string(c));
      const auto placed = synthetic::placement(model, rng);
      const auto damaged = synthetic::condition_damage(placed, c, rng);
      const std::string tpl = "templates/" + id + ".txt";
      const std::string gt = "ground_truth/" + id + ".txt";
      save_template(placed, (opt.directory / gt).string());
      save_template(damaged, (opt.directory / tpl).string());
      Json r;
      r["id"] = id;
      r["finger"] = finger;
      r["impression"] = std::to_string(++impression);
      r["reader"] = opt.reader;
      r["condition"] = std::string(to_string(c));
      r["template"] = tpl;
      r["ground_truth"] = gt;
      if (images) {
        const std::string img = "images/" + id + ".png";
        save_png(synthetic::render(model, c, rng), (opt.directory / img).string());
        r["image"] = img;
      }
      records.push_back(r);
    }
  }

  Json j;
  j["kind"] = std::string(to_string(opt.kind));
  j["dataset_root"] = ".";
  j["output_dir"] = "out";
  j["seed"] = opt.seed;
  j["resolution"] = MinutiaeSet::kDefaultResolution;
  j["far"] = 0.001;
  j["trials"] = 1;
  j["records"] = records;
  j["perturbations"] = Json::array();
  Json systems = Json::array();
  switch (opt.kind) {
    case EvalKind::kMatcher:
    case EvalKind::kBlackbox: systems.push_back({{"name", "baseline"}, {"role", "matcher"}, {"builtin", kBuiltinMatcher}}); break;
    case EvalKind::kExtractor:
      systems.push_back({{"name", "recorded"}, {"role", "extractor"}, {"builtin", kBuiltinRecordTemplate}});
      break;
    case EvalKind::kReader: break;
  }
  j["systems"] = systems;
  const auto path = opt.directory / "manifest.json";
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return path;
}

}  // namespace fpeval::io
