#pragma once

// Matcher evaluation: genuine scores of reference templates against their
// perturbed copies, impostor scores of cross-finger reference pairs, FNMR at
// a fixed FAR per perturbation arm and matcher uncertainty per family.

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fpeval/eval/common.hpp"
#include "fpeval/parallel.hpp"
#include "fpeval/perturb.hpp"
#include "fpeval/stats.hpp"

namespace fpeval::eval {

/// Occlusion sides 32, 64, 128, 256 px and rotations of 5, 10, 15, 20 degrees.
inline std::vector<PerturbationSpec> default_matcher_arms() {
  std::vector<PerturbationSpec> arms;
  for (int side : {32, 64, 128, 256}) {
    PerturbationSpec p;
    p.kind = PerturbationKind::kOccludeBlock;
    p.box_side = side;
    arms.push_back(p);
  }
  for (double deg : {5.0, 10.0, 15.0, 20.0}) {
    PerturbationSpec p;
    p.kind = PerturbationKind::kRotateGlobal;
    p.degrees = deg;
    arms.push_back(p);
  }
  return arms;
}

/// Perturbs a reference for one trial. Rotations take a random sign.
inline MinutiaeSet perturb_trial(const MinutiaeSet& reference, PerturbationSpec spec, std::uint64_t seed) {
  Rng rng(seed);
  if (spec.kind == PerturbationKind::kRotateGlobal) {
    const bool negative = std::bernoulli_distribution(0.5)(rng);
    spec.degrees = negative ? -std::abs(spec.degrees) : std::abs(spec.degrees);
  }
  return apply_perturbation(reference, spec, rng).set;
}

inline io::Report run_matcher_eval(const io::RunManifest& m, const EvalOptions& opt = {}) {
  if (m.kind != io::EvalKind::kMatcher) throw InvalidArgument("matcher evaluation needs a manifest of kind matcher");
  const auto matcher_specs = m.systems_with_role(SystemRole::kMatcher);
  if (matcher_specs.empty()) throw DataError("matcher evaluation needs at least one matcher system");
  std::vector<MatcherRunner> matchers;
  bool files = false;
  for (const auto* s : matcher_specs) {
    matchers.emplace_back(*s);
    files = files || matchers.back().needs_files();
  }
  const auto arms = m.perturbations.empty() ? default_matcher_arms() : m.perturbations;
  const std::size_t n = m.records.size();

  // References.
  std::vector<TemplateHandle> refs(n);
  std::vector<std::string> ref_error(n);
  const fs::path ref_dir = files ? work_dir(m, "references") : fs::path();
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    const auto& r = m.records[i];
    const auto& path = r.template_path ? r.template_path : r.ground_truth;
    if (!path) {
      ref_error[i] = "record has no template";
      return;
    }
    try {
      std::optional<fs::path> file;
      if (files) file = ref_dir / (file_stem(r.id) + ".txt");
      refs[i] = make_handle(io::load_template(path->string()), file);
    } catch (const Error& e) {
      ref_error[i] = e.what();
    }
  });

  io::Report report;
  report.kind = "matcher";
  Accounting acc;
  acc.total = n;
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < n; ++i) {
    if (refs[i])
      used.push_back(i);
    else
      acc.excluded.emplace_back(m.records[i].id, ref_error[i]);
  }

  // Perturbed copies: arm-major, then reference, then trial.
  const std::size_t trials = m.trials;
  const std::size_t per_arm = used.size() * trials;
  std::vector<TemplateHandle> perturbed(arms.size() * per_arm);
  const fs::path pert_dir = files ? work_dir(m, "perturbed") : fs::path();
  parallel_for(perturbed.size(), opt.jobs, [&](std::size_t t) {
    const std::size_t a = t / per_arm, u = (t % per_arm) / trials, trial = t % trials;
    const std::size_t i = used[u];
    auto set = perturb_trial(refs[i].prepared->set(), arms[a], derive_seed(m.seed, i, a, trial));
    std::optional<fs::path> file;
    if (files)
      file = pert_dir / (file_stem(m.records[i].id) + "__" + file_stem(arms[a].label()) + "__" +
                         std::to_string(trial) + ".txt");
    perturbed[t] = make_handle(std::move(set), file);
  });

  // Impostor pairs: unperturbed references of different fingers.
  std::vector<std::pair<std::size_t, std::size_t>> impostor_pairs;
  for (std::size_t x = 0; x < used.size(); ++x)
    for (std::size_t y = x + 1; y < used.size(); ++y)
      if (m.records[used[x]].finger != m.records[used[y]].finger) impostor_pairs.emplace_back(used[x], used[y]);
  if (impostor_pairs.empty()) throw DataError("matcher evaluation needs references from at least two fingers");

  const std::size_t s = matchers.size();
  std::vector<ExternalScore> genuine(s * perturbed.size());
  std::vector<ExternalScore> impostor(s * impostor_pairs.size());
  parallel_for(genuine.size() + impostor.size(), opt.jobs, [&](std::size_t t) {
    if (t < genuine.size()) {
      const std::size_t k = t / perturbed.size(), p = t % perturbed.size();
      const std::size_t u = (p % per_arm) / trials;
      genuine[t] = matchers[k].score(refs[used[u]], perturbed[p]);
    } else {
      const std::size_t q = t - genuine.size();
      const std::size_t k = q / impostor_pairs.size(), p = q % impostor_pairs.size();
      impostor[q] = matchers[k].score(refs[impostor_pairs[p].first], refs[impostor_pairs[p].second]);
    }
  });

  // Families in order of first appearance.
  std::vector<std::string> families;
  for (const auto& a : arms) {
    const auto f = family_label(a.kind);
    if (std::find(families.begin(), families.end(), f) == families.end()) families.push_back(f);
  }

  io::Table fnmr_table{"matcher_fnmr", {"arm"}, {}};
  io::Table u_table{"matcher_uncertainty", {"family"}, {}};
  for (const auto& mr : matchers) {
    fnmr_table.header.push_back(mr.spec().name());
    u_table.header.push_back(mr.spec().name());
  }
  std::vector<std::vector<std::string>> fnmr_rows(arms.size()), u_rows(families.size());
  for (std::size_t a = 0; a < arms.size(); ++a)
    fnmr_rows[a].push_back(family_label(arms[a].kind) + " " + magnitude_label(arms[a]));
  for (std::size_t f = 0; f < families.size(); ++f) u_rows[f].push_back(families[f]);

  // Grid layout: one row per family, column l holds each family's l-th arm.
  std::vector<std::vector<std::size_t>> family_arms(families.size());
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const auto f = std::find(families.begin(), families.end(), family_label(arms[a].kind)) - families.begin();
    family_arms[static_cast<std::size_t>(f)].push_back(a);
  }
  std::size_t levels = 0;
  for (const auto& fa : family_arms) levels = std::max(levels, fa.size());
  std::vector<std::string> grid_header{"family"};
  for (std::size_t l = 0; l < levels; ++l) {
    std::string label;
    for (const auto& fa : family_arms) {
      if (!label.empty()) label += " / ";
      label += l < fa.size() ? magnitude_label(arms[fa[l]]) : "-";
    }
    grid_header.push_back(label);
  }

  Json systems = Json::object();
  Json failures = Json::array();
  std::vector<io::Table> grids;
  for (std::size_t k = 0; k < s; ++k) {
    const auto& mr = matchers[k];
    const auto& name = mr.spec().name();
    FailureTally tally;
    std::vector<double> imp;
    for (std::size_t p = 0; p < impostor_pairs.size(); ++p) {
      const auto& sc = impostor[k * impostor_pairs.size() + p];
      tally.record(sc.ok(), sc.clamped);
      if (sc.ok())
        imp.push_back(sc.value);
      else
        failures.push_back({{"system", name},
                            {"pair", {m.records[impostor_pairs[p].first].id, m.records[impostor_pairs[p].second].id}},
                            {"error", sc.detail}});
    }
    // scores[a][u] holds the successful trials of reference u under arm a.
    std::vector<std::vector<std::vector<double>>> scores(arms.size(), std::vector<std::vector<double>>(used.size()));
    for (std::size_t p = 0; p < perturbed.size(); ++p) {
      const auto& sc = genuine[k * perturbed.size() + p];
      const std::size_t a = p / per_arm, u = (p % per_arm) / trials;
      tally.record(sc.ok(), sc.clamped);
      if (sc.ok())
        scores[a][u].push_back(sc.value);
      else
        failures.push_back({{"system", name},
                            {"record", m.records[used[u]].id},
                            {"arm", arms[a].label()},
                            {"trial", p % trials},
                            {"error", sc.detail}});
    }

    std::optional<double> threshold;
    if (!imp.empty()) threshold = threshold_at_far(imp, m.far);
    Json arms_json = Json::array();
    for (std::size_t a = 0; a < arms.size(); ++a) {
      std::vector<double> g;
      for (const auto& v : scores[a]) g.insert(g.end(), v.begin(), v.end());
      std::optional<double> fnmr;
      if (threshold && !g.empty()) fnmr = fnmr_at_threshold(g, *threshold);
      fnmr_rows[a].push_back(io::cell(fnmr));
      Json ja;
      ja["arm"] = fnmr_rows[a][0];
      ja["perturbation"] = io::to_json(arms[a]);
      ja["fnmr"] = io::number(fnmr);
      ja["genuine"] = g;
      arms_json.push_back(ja);
    }
    io::Table grid{"matcher_fnmr_grid_" + file_stem(name), grid_header, {}};
    for (std::size_t f = 0; f < families.size(); ++f) {
      std::vector<std::string> row{families[f]};
      for (std::size_t l = 0; l < levels; ++l)
        row.push_back(l < family_arms[f].size() ? fnmr_rows[family_arms[f][l]][k + 1] : "");
      grid.add_row(std::move(row));
    }
    grids.push_back(std::move(grid));

    Json unc = Json::array();
    for (std::size_t f = 0; f < families.size(); ++f) {
      std::vector<std::vector<double>> raw;
      for (std::size_t u = 0; u < used.size(); ++u) {
        std::vector<double> row;
        for (std::size_t a = 0; a < arms.size(); ++a)
          if (family_label(arms[a].kind) == families[f]) row.insert(row.end(), scores[a][u].begin(), scores[a][u].end());
        if (!row.empty()) raw.push_back(std::move(row));
      }
      Json ju;
      if (raw.empty()) {
        u_rows[f].emplace_back();
        ju = {{"references", 0}, {"u_total", nullptr}};
      } else {
        const auto r = uncertainty_from_scores(raw, mr.bounds());
        u_rows[f].push_back(io::cell(r.total));
        ju = to_json(r);
      }
      ju["family"] = families[f];
      unc.push_back(ju);
    }

    Json js;
    js["external"] = !mr.spec().is_builtin();
    js["threshold"] = io::number(threshold);
    js["impostor"] = imp;
    js["arms"] = arms_json;
    js["uncertainty"] = unc;
    js["calls"] = to_json(tally);
    systems[name] = js;
    if (!mr.spec().is_builtin() && tally.exceeded()) report.external_failure_exceeded = true;
  }
  for (auto& r : fnmr_rows) fnmr_table.add_row(std::move(r));
  for (auto& r : u_rows) u_table.add_row(std::move(r));

  report.document["seed"] = m.seed;
  report.document["far"] = m.far;
  report.document["trials"] = trials;
  report.document["records"] = acc.to_json();
  report.document["impostor_pairs"] = impostor_pairs.size();
  report.document["systems"] = systems;
  report.document["failures"] = failures;
  report.tables.push_back(std::move(fnmr_table));
  for (auto& g : grids) report.tables.push_back(std::move(g));
  report.tables.push_back(std::move(u_table));
  return report;
}

}  // namespace fpeval::eval
