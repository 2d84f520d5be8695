#pragma once

// Black-box evaluation: end-to-end FNMR at a fixed FAR per adverse capture
// condition. Genuine pairs join a finger's normal impression with its
// adverse impressions; impostor pairs join normal impressions of different
// fingers.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpeval/eval/common.hpp"
#include "fpeval/parallel.hpp"
#include "fpeval/stats.hpp"

namespace fpeval::eval {

inline io::Report run_blackbox_eval(const io::RunManifest& m, const EvalOptions& opt = {}) {
  if (m.kind != io::EvalKind::kBlackbox)
    throw InvalidArgument("black-box evaluation needs a manifest of kind blackbox");
  const auto matcher_specs = m.systems_with_role(SystemRole::kMatcher);
  if (matcher_specs.empty()) throw DataError("black-box evaluation needs at least one matcher system");
  std::vector<MatcherRunner> matchers;
  for (const auto* s : matcher_specs) matchers.emplace_back(*s);
  const std::size_t n = m.records.size();
  const std::size_t s = matchers.size();

  io::Report report;
  report.kind = "blackbox";
  Accounting acc;
  acc.total = n;

  // Fingers need a normal impression; the first by record id is the reference.
  std::map<std::string, std::size_t> reference_of;
  for (std::size_t i = 0; i < n; ++i)
    if (m.records[i].condition() == Condition::kNormal) reference_of.emplace(m.records[i].finger, i);
  std::vector<bool> eligible(n, false);
  bool any_recorded = false, any_extracted = false;
  for (const auto& mr : matchers) (mr.spec().extractor.empty() ? any_recorded : any_extracted) = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = m.records[i];
    if (!reference_of.count(r.finger))
      acc.excluded.emplace_back(r.id, "finger has no normal impression");
    else if (any_recorded && !r.template_path)
      acc.excluded.emplace_back(r.id, "record has no template");
    else if (any_extracted && !r.image)
      acc.excluded.emplace_back(r.id, "record has no image");
    else
      eligible[i] = true;
  }

  // Templates per (system, record): recorded ones are shared, extracted ones
  // come from the system's extractor.
  std::vector<TemplateHandle> recorded(n);
  std::vector<std::string> recorded_error(n);
  bool recorded_files = false;
  for (const auto& mr : matchers) recorded_files = recorded_files || (mr.needs_files() && mr.spec().extractor.empty());
  const fs::path recorded_dir = recorded_files ? work_dir(m, "templates") : fs::path();
  if (any_recorded) {
    parallel_for(n, opt.jobs, [&](std::size_t i) {
      if (!eligible[i]) return;
      try {
        std::optional<fs::path> file;
        if (recorded_files) file = recorded_dir / (file_stem(m.records[i].id) + ".txt");
        recorded[i] = make_handle(io::load_template(m.records[i].template_path->string()), file);
      } catch (const Error& e) {
        recorded_error[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (eligible[i] && !recorded[i]) {
        acc.excluded.emplace_back(m.records[i].id, recorded_error[i]);
        eligible[i] = false;
      }
    }
  }
  // A reference that failed to load takes its finger's other impressions with it.
  for (std::size_t i = 0; i < n; ++i) {
    const auto ref = reference_of.find(m.records[i].finger);
    if (eligible[i] && ref != reference_of.end() && !eligible[ref->second]) {
      acc.excluded.emplace_back(m.records[i].id, "reference impression unavailable");
      eligible[i] = false;
    }
  }
  std::sort(acc.excluded.begin(), acc.excluded.end());

  std::vector<std::vector<TemplateHandle>> extracted(s);
  std::vector<std::vector<std::string>> extract_error(s);
  for (std::size_t k = 0; k < s; ++k) {
    const auto& spec = matchers[k].spec();
    if (spec.extractor.empty()) continue;
    const auto& ex_spec = *m.find_system(spec.extractor);
    extracted[k].resize(n);
    extract_error[k].resize(n);
    const fs::path dir = work_dir(m, "templates_" + spec.name());
    parallel_for(n, opt.jobs, [&](std::size_t i) {
      if (!eligible[i]) return;
      auto ex = extract(ex_spec, m.records[i], m);
      if (!ex.set) {
        extract_error[k][i] = ex.error;
        return;
      }
      std::optional<fs::path> file;
      if (matchers[k].needs_files()) file = dir / (file_stem(m.records[i].id) + ".txt");
      extracted[k][i] = make_handle(std::move(*ex.set), file);
    });
  }
  auto handle = [&](std::size_t k, std::size_t i) -> const TemplateHandle& {
    return matchers[k].spec().extractor.empty() ? recorded[i] : extracted[k][i];
  };

  struct Pair {
    std::size_t a, b;
    std::optional<Condition> condition;  // empty for impostor pairs
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    if (!eligible[i] || m.records[i].condition() == Condition::kNormal) continue;
    pairs.push_back({reference_of.at(m.records[i].finger), i, m.records[i].condition()});
  }
  std::vector<std::size_t> refs;
  for (const auto& [finger, i] : reference_of)
    if (eligible[i]) refs.push_back(i);
  for (std::size_t x = 0; x < refs.size(); ++x)
    for (std::size_t y = x + 1; y < refs.size(); ++y) pairs.push_back({refs[x], refs[y], std::nullopt});

  std::vector<ExternalScore> scores(s * pairs.size());
  parallel_for(scores.size(), opt.jobs, [&](std::size_t t) {
    const std::size_t k = t / pairs.size(), p = t % pairs.size();
    scores[t] = matchers[k].score(handle(k, pairs[p].a), handle(k, pairs[p].b));
  });

  io::Table table{"blackbox_fnmr", {"condition"}, {}};
  for (const auto& mr : matchers) table.header.push_back(mr.spec().name());
  std::vector<std::vector<std::string>> rows;
  for (auto c : kAdverseConditions) rows.push_back({std::string(to_string(c))});

  Json systems = Json::object();
  Json failures = Json::array();
  for (std::size_t k = 0; k < s; ++k) {
    const auto& name = matchers[k].spec().name();
    FailureTally tally;
    std::vector<double> impostor;
    std::map<Condition, std::vector<double>> genuine;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto sc = scores[k * pairs.size() + p];
      if (!extracted[k].empty()) {
        for (auto i : {pairs[p].a, pairs[p].b})
          if (!extracted[k][i]) sc.detail = "extraction failed for " + m.records[i].id + ": " + extract_error[k][i];
      }
      tally.record(sc.ok(), sc.clamped);
      if (!sc.ok()) {
        failures.push_back(
            {{"system", name}, {"pair", {m.records[pairs[p].a].id, m.records[pairs[p].b].id}}, {"error", sc.detail}});
        continue;
      }
      if (pairs[p].condition)
        genuine[*pairs[p].condition].push_back(sc.value);
      else
        impostor.push_back(sc.value);
    }
    std::optional<double> threshold;
    if (!impostor.empty()) threshold = threshold_at_far(impostor, m.far);
    Json conds = Json::object();
    for (std::size_t c = 0; c < std::size(kAdverseConditions); ++c) {
      const auto cond = kAdverseConditions[c];
      const auto it = genuine.find(cond);
      std::optional<double> fnmr;
      if (threshold && it != genuine.end()) fnmr = fnmr_at_threshold(it->second, *threshold);
      rows[c].push_back(io::cell(fnmr));
      Json jc;
      jc["fnmr"] = io::number(fnmr);
      jc["genuine"] = it != genuine.end() ? Json(it->second) : Json::array();
      conds[std::string(to_string(cond))] = jc;
    }
    Json js;
    js["external"] = !matchers[k].spec().is_builtin();
    if (!matchers[k].spec().extractor.empty()) js["extractor"] = matchers[k].spec().extractor;
    js["threshold"] = io::number(threshold);
    js["impostor"] = impostor;
    js["conditions"] = conds;
    js["calls"] = to_json(tally);
    systems[name] = js;
    const bool external = !matchers[k].spec().is_builtin() || !extracted[k].empty();
    if (external && tally.exceeded()) report.external_failure_exceeded = true;
  }
  for (auto& r : rows) table.add_row(std::move(r));

  report.document["seed"] = m.seed;
  report.document["far"] = m.far;
  report.document["records"] = acc.to_json();
  report.document["fingers"] = refs.size();
  report.document["systems"] = systems;
  report.document["failures"] = failures;
  report.tables = {std::move(table)};
  return report;
}

}  // namespace fpeval::eval
