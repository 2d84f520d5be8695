// fpeval: command-line front end of the evaluation toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 more than 10% of the
// calls to an external system failed.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpeval/eval.hpp"
#include "fpeval/io/dataset.hpp"
#include "fpeval/io/manifest.hpp"
#include "fpeval/io/report.hpp"
#include "fpeval/io/template_io.hpp"
#include "fpeval/matcher.hpp"
#include "fpeval/perturb.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fpeval;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitExternal = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t jobs = 1;
};

struct PerturbOptions {
  std::string template_path;
  std::string kind;
  double sigma_xy = 0.0;
  double sigma_theta = 0.0;
  std::size_t count = 0;
  int side = 0;
  double degrees = 0.0;
  double magnitude = 0.0;
  std::size_t trials = 1;
};

struct SynthOptions {
  std::size_t fingers = 20;
  std::string kind = "blackbox";
  bool images = false;
  std::size_t min_minutiae = 25;
  std::size_t max_minutiae = 40;
};

void print_table(const io::Table& t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  };
  widen(t.header);
  for (const auto& r : t.rows) widen(r);
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::cout << (i ? "  " : "") << row[i];
      if (i + 1 < row.size()) std::cout << std::string(width[i] - row[i].size(), ' ');
    }
    std::cout << '\n';
  };
  std::cout << "[" << t.name << "]\n";
  line(t.header);
  for (const auto& r : t.rows) line(r);
  std::cout << '\n';
}

io::RunManifest load(const CommonOptions& common) {
  if (common.manifest.empty()) throw UsageError("--manifest is required");
  auto m = io::load_manifest(common.manifest);
  if (common.seed) m.seed = *common.seed;
  if (!common.out.empty()) m.output_dir = common.out;
  return m;
}

int run_eval(io::EvalKind kind, const CommonOptions& common) {
  const auto m = load(common);
  if (m.kind != kind)
    throw UsageError("manifest kind is '" + std::string(io::to_string(m.kind)) + "', this command evaluates '" +
                     std::string(io::to_string(kind)) + "'");
  const auto report = eval::run(m, {common.jobs});
  const auto written = report.write(m.output_dir);
  const auto& rec = report.document.at("records");
  std::cout << "records: " << rec.at("total").get<std::size_t>() << " total, "
            << rec.at("processed").get<std::size_t>() << " processed, " << rec.at("excluded").get<std::size_t>()
            << " excluded\n\n";
  for (const auto& t : report.tables) print_table(t);
  for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';
  if (report.external_failure_exceeded) {
    std::cerr << "fpeval: more than 10% of the calls to an external system failed\n";
    return kExitExternal;
  }
  return kExitOk;
}

PerturbationSpec spec_from_flags(const PerturbOptions& p) {
  const auto kind = perturbation_kind_from_string(p.kind);
  if (!kind) throw UsageError("unknown perturbation kind '" + p.kind + "'");
  PerturbationSpec s;
  s.kind = *kind;
  s.sigma_xy = p.sigma_xy;
  s.sigma_theta = p.sigma_theta;
  s.count = p.count;
  s.box_side = p.side;
  s.degrees = p.degrees;
  s.magnitude = p.magnitude;
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return s;
}

int run_perturb(const CommonOptions& common, const PerturbOptions& p) {
  if (common.manifest.empty() == p.template_path.empty())
    throw UsageError("perturb needs exactly one of --manifest and --template");
  if (!p.template_path.empty()) {
    if (p.kind.empty()) throw UsageError("--kind is required with --template");
    auto spec = spec_from_flags(p);
    spec.seed = common.seed.value_or(0);
    const auto set = io::load_template(p.template_path);
    const auto result = apply_perturbation(set, spec);
    if (common.out.empty()) {
      std::cout << io::format_template(result.set);
    } else {
      io::save_template(result.set, common.out);
      std::cout << "wrote " << common.out << '\n';
    }
    return kExitOk;
  }

  const auto m = load(common);
  if (p.trials == 0) throw UsageError("--trials must be at least 1");
  std::vector<PerturbationSpec> specs = m.perturbations;
  if (!p.kind.empty()) specs = {spec_from_flags(p)};
  if (specs.empty()) specs = eval::default_matcher_arms();
  const fs::path out = common.out.empty() ? m.output_dir / "perturbed" : fs::path(common.out);
  fs::create_directories(out);

  struct Task {
    std::size_t record, arm, trial;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    if (!m.records[i].template_path && !m.records[i].ground_truth) continue;
    for (std::size_t a = 0; a < specs.size(); ++a)
      for (std::size_t t = 0; t < p.trials; ++t) tasks.push_back({i, a, t});
  }
  std::vector<std::string> files(tasks.size());
  parallel_for(tasks.size(), common.jobs, [&](std::size_t k) {
    const auto& task = tasks[k];
    const auto& r = m.records[task.record];
    const auto& path = r.template_path ? *r.template_path : *r.ground_truth;
    const auto set = io::load_template(path.string());
    const auto perturbed = eval::perturb_trial(set, specs[task.arm], derive_seed(m.seed, task.record, task.arm, task.trial));
    files[k] = eval::file_stem(r.id) + "__" + eval::file_stem(specs[task.arm].label()) + "__" +
               std::to_string(task.trial) + ".txt";
    io::save_template(perturbed, (out / files[k]).string());
  });
  io::Table index{"index", {"file", "record", "finger", "condition", "perturbation", "trial"}, {}};
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& r = m.records[tasks[k].record];
    index.add_row({files[k], r.id, r.finger, std::string(to_string(r.condition())), specs[tasks[k].arm].label(),
                   std::to_string(tasks[k].trial)});
  }
  std::ofstream(out / "index.csv", std::ios::trunc) << io::to_csv(index);
  std::cout << "wrote " << tasks.size() << " perturbed templates to " << out.string() << '\n';
  return kExitOk;
}

int run_match(const CommonOptions& common, const std::vector<std::string>& paths) {
  const auto a = io::load_template(paths.at(0));
  const auto b = io::load_template(paths.at(1));
  const auto r = match(a, b);
  std::cout << "score " << io::cell(r.value) << '\n'
            << "pairs " << r.pairs << '\n'
            << "rotation_deg " << io::cell(r.rotation * 180.0 / kPi) << '\n'
            << "translation " << io::cell(r.tx) << ' ' << io::cell(r.ty) << '\n';
  if (!common.out.empty()) {
    nlohmann::json j;
    j["a"] = paths[0];
    j["b"] = paths[1];
    j["score"] = r.value;
    j["pairs"] = r.pairs;
    j["rotation"] = r.rotation;
    j["tx"] = r.tx;
    j["ty"] = r.ty;
    std::ofstream out(common.out, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write '" + common.out + "'");
  }
  return kExitOk;
}

int run_synth(const CommonOptions& common, const SynthOptions& s) {
  if (common.out.empty()) throw UsageError("synth needs --out");
  const auto kind = io::eval_kind_from_string(s.kind);
  if (!kind) throw UsageError("unknown evaluation kind '" + s.kind + "'");
  io::SyntheticDatasetOptions opt;
  opt.directory = common.out;
  opt.kind = *kind;
  opt.fingers = s.fingers;
  opt.min_minutiae = s.min_minutiae;
  opt.max_minutiae = s.max_minutiae;
  opt.seed = common.seed.value_or(1);
  opt.images = s.images;
  try {
    std::cout << "wrote " << io::write_synthetic_dataset(opt).string() << '\n';
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation toolkit for fingerprint readers, minutiae extractors and matchers"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonOptions common;
  app.add_option("-m,--manifest", common.manifest, "Run manifest (JSON)");
  app.add_option("-s,--seed", common.seed, "Global seed, overrides the manifest");
  app.add_option("-o,--out", common.out, "Output directory or file");
  app.add_option("-j,--jobs", common.jobs, "Worker threads, 0 for all cores")->capture_default_str();

  struct EvalCommand {
    const char* name;
    io::EvalKind kind;
    const char* help;
  };
  const EvalCommand evals[] = {
      {"reader-eval", io::EvalKind::kReader, "Quality distributions, t tests and uncertainty per reader"},
      {"extractor-eval", io::EvalKind::kExtractor, "Detection metrics and Goodness Index uncertainty"},
      {"matcher-eval", io::EvalKind::kMatcher, "FNMR under occlusion and rotation, matcher uncertainty"},
      {"blackbox-eval", io::EvalKind::kBlackbox, "End-to-end FNMR per adverse capture condition"},
  };
  std::optional<io::EvalKind> chosen;
  for (const auto& e : evals) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->callback([&chosen, kind = e.kind] { chosen = kind; });
  }

  PerturbOptions perturb;
  auto* perturb_cmd = app.add_subcommand("perturb", "Write perturbed templates for a manifest or one template");
  perturb_cmd->add_option("-t,--template", perturb.template_path, "Single template to perturb");
  perturb_cmd->add_option("-k,--kind", perturb.kind,
                          "displace, add_spurious, remove_random, occlude_block, rotate_global, nonlinear_distort");
  perturb_cmd->add_option("--sigma-xy", perturb.sigma_xy, "Displacement sigma in px");
  perturb_cmd->add_option("--sigma-theta", perturb.sigma_theta, "Direction sigma in rad");
  perturb_cmd->add_option("--count", perturb.count, "Minutiae to add or remove");
  perturb_cmd->add_option("--side", perturb.side, "Occlusion box side in px");
  perturb_cmd->add_option("--degrees", perturb.degrees, "Rotation in degrees");
  perturb_cmd->add_option("--magnitude", perturb.magnitude, "Nonlinear distortion magnitude in px");
  perturb_cmd->add_option("--trials", perturb.trials, "Perturbed copies per record and perturbation");

  std::vector<std::string> match_paths;
  auto* match_cmd = app.add_subcommand("match", "Score two templates with the baseline matcher");
  match_cmd->add_option("templates", match_paths, "Two template files")->required()->expected(2);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with its manifest");
  synth_cmd->add_option("--fingers", synth.fingers, "Number of fingers")->capture_default_str();
  synth_cmd->add_option("--kind", synth.kind, "Manifest kind: reader, extractor, matcher or blackbox")
      ->capture_default_str();
  synth_cmd->add_flag("--images", synth.images, "Render an image per capture");
  synth_cmd->add_option("--min-minutiae", synth.min_minutiae)->capture_default_str();
  synth_cmd->add_option("--max-minutiae", synth.max_minutiae)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (chosen) return run_eval(*chosen, common);
    if (perturb_cmd->parsed()) return run_perturb(common, perturb);
    if (match_cmd->parsed()) return run_match(common, match_paths);
    if (synth_cmd->parsed()) return run_synth(common, synth);
  } catch (const UsageError& e) {
    std::cerr << "fpeval: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "fpeval: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "fpeval: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "fpeval: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
