#pragma once

// Extractor evaluation: detection and localization metrics per capture
// condition and Goodness Index uncertainty per condition family.

#include <optional>
#include <string>
#include <vector>

#include "fpeval/eval/common.hpp"
#include "fpeval/extractor.hpp"
#include "fpeval/parallel.hpp"

namespace fpeval::eval {

inline io::Report run_extractor_eval(const io::RunManifest& m, const EvalOptions& opt = {}) {
  if (m.kind != io::EvalKind::kExtractor)
    throw InvalidArgument("extractor evaluation needs a manifest of kind extractor");
  const auto extractors = m.systems_with_role(SystemRole::kExtractor);
  if (extractors.empty()) throw DataError("extractor evaluation needs at least one extractor system");

  const std::size_t n = m.records.size();
  const std::size_t s = extractors.size();
  std::vector<std::optional<MinutiaeSet>> ground(n);
  std::vector<std::string> ground_error(n);
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    const auto& r = m.records[i];
    if (!r.ground_truth) {
      ground_error[i] = "record has no ground truth";
      return;
    }
    try {
      ground[i] = io::load_template(r.ground_truth->string());
      if (ground[i]->empty()) {
        ground[i].reset();
        ground_error[i] = "ground truth is empty";
      }
    } catch (const Error& e) {
      ground_error[i] = e.what();
    }
  });

  struct Cell {
    std::optional<ExtractorMetrics> metrics;
    std::optional<MinutiaeSet> detected;
    std::string error;
  };
  std::vector<Cell> cells(n * s);
  parallel_for(n * s, opt.jobs, [&](std::size_t t) {
    const std::size_t i = t / s, k = t % s;
    if (!ground[i]) return;
    auto& c = cells[t];
    auto ex = extract(*extractors[k], m.records[i], m);
    if (!ex.set) {
      c.error = ex.error;
      return;
    }
    try {
      c.metrics = evaluate_extraction(*ground[i], *ex.set);
      c.detected = std::move(ex.set);
    } catch (const Error& e) {
      c.error = e.what();
    }
  });

  io::Report report;
  report.kind = "extractor";
  Accounting acc;
  acc.total = n;
  std::vector<std::size_t> processed_index;
  std::vector<const io::Record*> processed;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ground[i]) {
      acc.excluded.emplace_back(m.records[i].id, ground_error[i]);
      continue;
    }
    processed_index.push_back(i);
    processed.push_back(&m.records[i]);
  }

  struct Column {
    const char* name;
    Summary ExtractorReportRow::*field;
  };
  static constexpr Column kColumns[] = {
      {"paired_ratio", &ExtractorReportRow::paired_ratio},
      {"missing_ratio", &ExtractorReportRow::missing_ratio},
      {"spurious_ratio", &ExtractorReportRow::spurious_ratio},
      {"goodness_index", &ExtractorReportRow::goodness_index},
      {"positional_error", &ExtractorReportRow::positional_error},
      {"orientation_error", &ExtractorReportRow::orientation_error},
  };
  io::Table u_table{"extractor_uncertainty", {"family"}, {}};
  for (const auto* e : extractors) u_table.header.push_back(e->name());
  std::vector<std::vector<std::string>> u_rows;
  for (auto family : kConditionFamilies) u_rows.push_back({std::string(to_string(family))});

  Json systems = Json::object();
  Json failures = Json::array();
  for (std::size_t k = 0; k < s; ++k) {
    const auto& sys = *extractors[k];
    FailureTally tally;
    std::vector<ExtractorCase> cases;
    std::vector<std::optional<double>> gi(processed.size());
    for (std::size_t p = 0; p < processed.size(); ++p) {
      const std::size_t i = processed_index[p];
      const auto& c = cells[i * s + k];
      tally.record(c.metrics.has_value());
      if (!c.metrics) {
        failures.push_back({{"record", m.records[i].id}, {"system", sys.name()}, {"error", c.error}});
        continue;
      }
      cases.push_back({*ground[i], *c.detected, m.records[i].condition()});
      gi[p] = c.metrics->goodness_index;
    }
    const auto table_report = extractor_report(cases);

    io::Table metrics_table{"extractor_metrics_" + file_stem(sys.name()), {"metric"}, {}};
    for (const auto& row : table_report.rows) {
      metrics_table.header.push_back(std::string(to_string(row.condition)) + " mean");
      metrics_table.header.push_back(std::string(to_string(row.condition)) + " sd");
    }
    Json rows_json = Json::array();
    for (const auto& col : kColumns) {
      std::vector<std::string> row{col.name};
      for (const auto& r : table_report.rows) {
        const Summary& sm = r.*col.field;
        row.push_back(sm.count ? io::cell(sm.mean) : "");
        row.push_back(sm.count ? io::cell(sm.sd) : "");
      }
      metrics_table.add_row(std::move(row));
    }
    for (const auto& r : table_report.rows) {
      Json jr;
      jr["condition"] = std::string(to_string(r.condition));
      jr["cases"] = r.cases;
      for (const auto& col : kColumns) jr[col.name] = io::to_json(r.*col.field);
      rows_json.push_back(jr);
    }

    Json unc = Json::array();
    for (std::size_t f = 0; f < std::size(kConditionFamilies); ++f) {
      const auto family = kConditionFamilies[f];
      const auto groups = family_groups(processed, family);
      const auto u = group_uncertainty(groups, gi, kGoodnessIndexBounds);
      u_rows[f].push_back(u ? io::cell(u->total) : "");
      Json ju = to_json(u, groups);
      ju["family"] = std::string(to_string(family));
      unc.push_back(ju);
    }

    Json js;
    js["conditions"] = rows_json;
    js["uncertainty"] = unc;
    js["notes"] = table_report.failures;
    js["calls"] = to_json(tally);
    js["external"] = !sys.is_builtin();
    systems[sys.name()] = js;
    if (!sys.is_builtin() && tally.exceeded()) report.external_failure_exceeded = true;
    report.tables.push_back(std::move(metrics_table));
  }
  for (auto& row : u_rows) u_table.add_row(std::move(row));
  report.tables.push_back(std::move(u_table));

  report.document["seed"] = m.seed;
  report.document["records"] = acc.to_json();
  report.document["systems"] = systems;
  report.document["failures"] = failures;
  return report;
}

}  // namespace fpeval::eval
