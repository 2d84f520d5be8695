#pragma once

// Reader evaluation: quality-score distributions per capture condition,
// condition-vs-pooled t tests and quality uncertainty per condition family.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fpeval/eval/common.hpp"
#include "fpeval/io/image_io.hpp"
#include "fpeval/parallel.hpp"
#include "fpeval/quality.hpp"
#include "fpeval/stats.hpp"

namespace fpeval::eval {

inline io::Report run_reader_eval(const io::RunManifest& m, const EvalOptions& opt = {}) {
  if (m.kind != io::EvalKind::kReader) throw InvalidArgument("reader evaluation needs a manifest of kind reader");

  struct Metric {
    std::string name;
    ScoreBounds bounds;
    const io::SystemSpec* system = nullptr;  // null for built-in metrics
  };
  std::vector<Metric> metrics;
  for (auto q : {QualityMetric::kGOQ, QualityMetric::kRF, QualityMetric::kOCL})
    metrics.push_back({std::string(to_string(q)), kUnitBounds, nullptr});
  for (const auto* s : m.systems_with_role(SystemRole::kQuality))
    metrics.push_back({s->name(), {s->system.score_min, s->system.score_max}, s});

  struct Outcome {
    std::string error;
    std::vector<std::optional<double>> values;
    std::vector<ExternalScore> external;  // per metric, external ones only meaningful
  };
  std::vector<Outcome> outcomes(m.records.size());
  parallel_for(m.records.size(), opt.jobs, [&](std::size_t i) {
    const auto& r = m.records[i];
    auto& o = outcomes[i];
    o.values.assign(metrics.size(), std::nullopt);
    o.external.resize(metrics.size());
    if (!r.image) {
      o.error = "record has no image";
      return;
    }
    try {
      const auto image = io::load_image(r.image->string(), m.resolution);
      const auto builtin = quality_scores(image);
      for (std::size_t q = 0; q < builtin.size(); ++q) o.values[q] = builtin[q].value;
    } catch (const Error& e) {
      o.error = e.what();
      return;
    }
    for (std::size_t k = 0; k < metrics.size(); ++k) {
      if (!metrics[k].system) continue;
      o.external[k] = quality_external(metrics[k].system->system, r.image->string());
      if (o.external[k].ok()) o.values[k] = o.external[k].value;
    }
  });

  io::Report report;
  report.kind = "reader";
  Accounting acc;
  acc.total = m.records.size();
  std::vector<FailureTally> tallies(metrics.size());
  std::vector<const io::Record*> processed;
  std::vector<std::size_t> processed_index;
  std::vector<QualitySample> samples;
  Json failures = Json::array();
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    const auto& o = outcomes[i];
    if (!o.error.empty()) {
      acc.excluded.emplace_back(r.id, o.error);
      continue;
    }
    processed.push_back(&r);
    processed_index.push_back(i);
    for (std::size_t k = 0; k < metrics.size(); ++k) {
      if (metrics[k].system) {
        tallies[k].record(o.external[k].ok(), o.external[k].clamped);
        if (!o.external[k].ok())
          failures.push_back({{"record", r.id}, {"system", metrics[k].name}, {"error", o.external[k].detail}});
      }
      if (o.values[k]) samples.push_back({r.reader, r.condition(), metrics[k].name, *o.values[k]});
    }
  }
  const auto dist = quality_by_condition(samples);

  std::set<std::string> reader_set;
  std::set<Condition> condition_set;
  for (const auto* r : processed) {
    reader_set.insert(r->reader);
    condition_set.insert(r->condition());
  }
  const std::vector<std::string> readers(reader_set.begin(), reader_set.end());

  // Condition-vs-pooled t tests.
  io::Table t_table{"reader_ttest", {"condition"}, {}};
  io::Table band_table{"reader_ttest_band", {"condition"}, {}};
  for (const auto& metric : metrics)
    for (const auto& reader : readers) {
      t_table.header.push_back(metric.name + "/" + reader);
      band_table.header.push_back(metric.name + "/" + reader);
    }
  Json ttests = Json::array();
  for (auto c : kAllConditions) {
    if (!condition_set.count(c)) continue;
    std::vector<std::string> trow{std::string(to_string(c))}, brow{std::string(to_string(c))};
    for (const auto& metric : metrics) {
      for (const auto& reader : readers) {
        const auto it = dist.entries.find({reader, metric.name});
        const std::vector<double>* cond = nullptr;
        if (it != dist.entries.end()) {
          const auto ci = it->second.by_condition.find(c);
          if (ci != it->second.by_condition.end()) cond = &ci->second;
        }
        Json jt{{"reader", reader}, {"metric", metric.name}, {"condition", std::string(to_string(c))},
                {"n", cond ? cond->size() : 0}};
        if (cond && cond->size() >= 2 && it->second.pooled.size() >= 2) {
          const auto res = two_sample_t(*cond, it->second.pooled);
          trow.push_back(io::cell(res.t));
          brow.push_back(std::string(to_string(res.band)));
          jt["t"] = io::number(res.t);
          jt["dof"] = res.dof;
          jt["band"] = std::string(to_string(res.band));
        } else {
          trow.emplace_back();
          brow.emplace_back();
          jt["t"] = nullptr;
          jt["note"] = "fewer than 2 scores";
        }
        ttests.push_back(jt);
      }
    }
    t_table.add_row(std::move(trow));
    band_table.add_row(std::move(brow));
  }

  // Uncertainty per condition family, metric and reader.
  io::Table u_table{"reader_uncertainty", {"family"}, {}};
  for (const auto& metric : metrics)
    for (const auto& reader : readers) u_table.header.push_back(metric.name + "/" + reader);
  Json uncertainty = Json::array();
  for (auto family : kConditionFamilies) {
    std::vector<std::string> row{std::string(to_string(family))};
    for (std::size_t k = 0; k < metrics.size(); ++k) {
      for (const auto& reader : readers) {
        std::vector<const io::Record*> recs;
        std::vector<std::optional<double>> scores;
        for (std::size_t p = 0; p < processed.size(); ++p) {
          if (processed[p]->reader != reader) continue;
          recs.push_back(processed[p]);
          scores.push_back(outcomes[processed_index[p]].values[k]);
        }
        const auto groups = family_groups(recs, family);
        const auto u = group_uncertainty(groups, scores, metrics[k].bounds);
        row.push_back(u ? io::cell(u->total) : "");
        Json ju = to_json(u, groups);
        ju["family"] = std::string(to_string(family));
        ju["metric"] = metrics[k].name;
        ju["reader"] = reader;
        uncertainty.push_back(ju);
      }
    }
    u_table.add_row(std::move(row));
  }

  Json distributions = Json::object();
  for (const auto& [key, entry] : dist.entries) {
    Json je;
    je["pooled"] = entry.pooled;
    Json bc = Json::object();
    for (const auto& [c, v] : entry.by_condition) bc[std::string(to_string(c))] = v;
    je["by_condition"] = bc;
    distributions[key.first][key.second] = je;
  }
  Json systems = Json::object();
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    if (!metrics[k].system) continue;
    systems[metrics[k].name] = Json{{"calls", to_json(tallies[k])}, {"external", true}};
    report.external_failure_exceeded = report.external_failure_exceeded || tallies[k].exceeded();
  }

  report.document["seed"] = m.seed;
  report.document["records"] = acc.to_json();
  report.document["metrics"] = [&] {
    Json a = Json::array();
    for (const auto& mt : metrics) a.push_back(mt.name);
    return a;
  }();
  report.document["readers"] = readers;
  report.document["distributions"] = distributions;
  report.document["ttests"] = ttests;
  report.document["uncertainty"] = uncertainty;
  report.document["systems"] = systems;
  report.document["failures"] = failures;
  report.tables = {std::move(t_table), std::move(band_table), std::move(u_table)};
  return report;
}

}  // namespace fpeval::eval
