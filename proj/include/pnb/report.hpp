#pragma once

// JSON and CSV renderings of score tables and experiment reports.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pnb/criteria.hpp"
#include "pnb/experiment.hpp"
#include "pnb/search.hpp"
#include "pnb/version.hpp"

namespace pnb {

using json = nlohmann::ordered_json;

/// Finite values as numbers; infinities as the strings "-inf" / "inf".
inline json score_json(double value) {
  if (std::isfinite(value)) return value;
  return value < 0 ? "-inf" : "inf";
}

inline double score_from_json(const json& j) {
  if (j.is_string()) return j.get<std::string>() == "-inf" ? kNegInf : -kNegInf;
  return j.get<double>();
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json structure_json(const Structure& m, const Schema& schema) {
  json names = json::array();
  for (auto j : m.indices()) names.push_back(schema.feature(j).name);
  return {{"mask", m.mask()}, {"names", names}};
}

inline json criterion_json(const CriterionSpec& spec) {
  json out = {{"name", criterion_name(spec)}};
  if (spec.uses_loss()) out["selection_loss"] = spec.loss ? json(loss_name(*spec.loss)) : json("evaluation");
  if (spec.kind == CriterionKind::kfold) out["folds"] = spec.folds;
  if (spec.kind == CriterionKind::preq || spec.kind == CriterionKind::kfold) out["orderings"] = spec.orderings;
  if (spec.kind == CriterionKind::sevi_exact) out["exact_budget"] = spec.exact_budget;
  return out;
}

inline json tool_header() { return {{"tool", kToolName}, {"version", kVersion}, {"units", "nats"}}; }

/// `config_extra` carries settings the library does not see (data path,
/// class column, bin count); they are merged into the config echo.
inline json report_to_json(const ExperimentReport& report, const Schema& schema, const json& config_extra = json::object()) {
  json out = tool_header();
  json config = config_extra.is_object() ? config_extra : json::object();
  config["seed"] = report.config.seed;
  config["repetitions"] = report.config.repetitions;
  config["sample_size"] = report.config.sample_size;
  config["redraw_sample"] = report.config.redraw_sample;
  config["max_features"] = report.config.max_features;
  json criteria = json::array();
  for (const auto& c : report.config.criteria) criteria.push_back(criterion_json(c));
  config["criteria"] = criteria;
  out["config"] = config;
  out["data"] = {{"rows", report.n_rows}, {"sampled_rows", report.n_sampled}, {"features", schema.n_features()},
                 {"classes", schema.class_variable().cardinality()}};

  json reps = json::array();
  for (const auto& rep : report.repetitions) {
    json r = {{"index", rep.index}, {"seed", rep.seed}, {"train_rows", rep.n_train}, {"test_rows", rep.n_test}};
    r["baseline"] = {{"structure", structure_json(Structure::full(schema.n_features()), schema)},
                     {"test_loss_01", rep.baseline.zero_one},
                     {"test_loss_log", rep.baseline.log}};
    auto bound = [&](const Bound& b, double base) {
      return json{{"structure", structure_json(b.structure, schema)},
                  {"test_loss", b.loss},
                  {"gain", optional_json(relative_prediction_gain(b.loss, base))}};
    };
    r["oracle"] = {{"01", bound(rep.oracle_01, rep.baseline.zero_one)}, {"log", bound(rep.oracle_log, rep.baseline.log)}};
    r["worst"] = {{"01", bound(rep.worst_01, rep.baseline.zero_one)}, {"log", bound(rep.worst_log, rep.baseline.log)}};
    json crit = json::array();
    for (const auto& c : rep.criteria) {
      auto column = [&](const ColumnSelection& s, double base) {
        return json{{"structure", structure_json(s.structure, schema)},
                    {"train_score", score_json(s.score.value)},
                    {"test_loss", s.test_loss},
                    {"gain", optional_json(relative_prediction_gain(s.test_loss, base))}};
      };
      crit.push_back({{"criterion", c.criterion},
                      {"01", column(c.zero_one, rep.baseline.zero_one)},
                      {"log", column(c.log, rep.baseline.log)}});
    }
    r["criteria"] = crit;
    reps.push_back(r);
  }
  out["repetitions"] = reps;

  json aggs = json::object();
  for (const auto& a : report.aggregates) {
    aggs[a.name] = {{"gain_01", optional_json(a.gain_01)},
                    {"gain_log", optional_json(a.gain_log)},
                    {"mean_loss_01", a.mean_loss_01},
                    {"mean_loss_log", a.mean_loss_log}};
  }
  out["aggregates"] = aggs;
  return out;
}

/// Flat plot data: criterion,loss,gain (empty gain when not available).
inline void write_gain_csv(std::ostream& out, const ExperimentReport& report) {
  out << "criterion,loss,gain\n";
  out.precision(17);
  for (const auto& a : report.aggregates) {
    out << a.name << ",01,";
    if (a.gain_01) out << *a.gain_01;
    out << '\n' << a.name << ",log,";
    if (a.gain_log) out << *a.gain_log;
    out << '\n';
  }
}

/// structure_mask,structure_names,score in canonical order. Names are
/// comma-joined inside a quoted field.
inline void write_score_table_csv(std::ostream& out, const ScoreTable& table, const Schema& schema) {
  out << "structure_mask,structure_names,score\n";
  out.precision(17);
  for (const auto& e : table.entries) {
    out << e.structure.mask() << ",\"" << structure_names(e.structure, schema) << "\",";
    if (std::isfinite(e.score.value)) {
      out << e.score.value;
    } else {
      out << (e.score.value < 0 ? "-inf" : "inf");
    }
    out << '\n';
  }
}

struct CrossDatasetGain {
  std::string criterion;
  std::optional<double> mean_gain_01;
  std::optional<double> mean_gain_log;
  std::size_t datasets_01 = 0;
  std::size_t datasets_log = 0;
};

/// Mean relative gain per criterion over several reports, skipping reports
/// where the gain was not available. Criteria keep first-seen order.
inline std::vector<CrossDatasetGain> compare_reports(const std::vector<json>& reports) {
  std::vector<CrossDatasetGain> out;
  std::vector<double> sum01, sumlog;
  for (const auto& rep : reports) {
    if (!rep.contains("aggregates") || !rep["aggregates"].is_object()) throw Error("report has no aggregates");
    for (const auto& [name, agg] : rep["aggregates"].items()) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.criterion == name; });
      if (it == out.end()) {
        out.push_back({name, std::nullopt, std::nullopt, 0, 0});
        sum01.push_back(0.0);
        sumlog.push_back(0.0);
        it = out.end() - 1;
      }
      const auto idx = static_cast<std::size_t>(it - out.begin());
      if (agg.contains("gain_01") && agg["gain_01"].is_number()) {
        sum01[idx] += agg["gain_01"].get<double>();
        ++it->datasets_01;
      }
      if (agg.contains("gain_log") && agg["gain_log"].is_number()) {
        sumlog[idx] += agg["gain_log"].get<double>();
        ++it->datasets_log;
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].datasets_01) out[i].mean_gain_01 = sum01[i] / static_cast<double>(out[i].datasets_01);
    if (out[i].datasets_log) out[i].mean_gain_log = sumlog[i] / static_cast<double>(out[i].datasets_log);
  }
  return out;
}

}  // namespace pnb
