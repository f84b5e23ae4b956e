#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "actowl/harness/experiment.hpp"

namespace actowl::harness {

inline constexpr const char* kMetricsHeader = "trial,step,strategy,selected_object,ig_value,question,answer,ari,n_questions";

/// RFC 4180: quote when the field holds a comma, quote or line break.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  // Tiny negatives would otherwise print as "-0.000000000".
  if (std::string_view(buf) == "-0.000000000") return "0.000000000";
  return buf;
}

inline std::string csv_row(const StepMetrics& m) {
  std::string row = std::to_string(m.trial) + "," + std::to_string(m.step) + "," + csv_field(m.strategy) + ",";
  if (m.selected_object) row += std::to_string(*m.selected_object);
  row += ",";
  if (m.ig_value) row += format_real(*m.ig_value);
  row += ",";
  if (m.question) row += csv_field(*m.question);
  row += ",";
  if (m.answer) row += csv_field(*m.answer);
  row += "," + format_real(m.ari) + "," + std::to_string(m.n_questions);
  return row;
}

inline void write_metrics_csv(std::ostream& out, const std::vector<StepMetrics>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& m : rows) out << csv_row(m) << '\n';
}

/// Every trial of every method, methods in the order they were requested.
inline void write_metrics_csv(std::ostream& out, const ExperimentResult& result) {
  out << kMetricsHeader << '\n';
  for (auto m : result.methods)
    for (const auto& t : result.trials.at(m))
      for (const auto& row : t.metrics) out << csv_row(row) << '\n';
}

inline std::string metrics_csv(const std::vector<StepMetrics>& rows) {
  std::ostringstream out;
  write_metrics_csv(out, rows);
  return out.str();
}

/// {"ig-max": [{"step": -1, "mean_ari": ..., "std_ari": ..., "mean_ig": null}, ...], ...}
inline nlohmann::json aggregate_json(const ExperimentResult& result) {
  nlohmann::json out = nlohmann::json::object();
  const auto agg = result.aggregates();
  for (auto m : result.methods) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : agg.at(m)) {
      nlohmann::json row = {{"step", r.step}, {"mean_ari", r.mean_ari}, {"std_ari", r.std_ari}};
      row["mean_ig"] = r.mean_ig ? nlohmann::json(*r.mean_ig) : nlohmann::json(nullptr);
      rows.push_back(std::move(row));
    }
    out[to_string(m)] = std::move(rows);
  }
  return out;
}

inline nlohmann::json to_json(const StepMetrics& m) {
  nlohmann::json j = {{"trial", m.trial}, {"step", m.step},           {"strategy", m.strategy},
                      {"ari", m.ari},     {"n_questions", m.n_questions}};
  j["selected_object"] = m.selected_object ? nlohmann::json(*m.selected_object) : nlohmann::json(nullptr);
  j["ig_value"] = m.ig_value ? nlohmann::json(*m.ig_value) : nlohmann::json(nullptr);
  j["question"] = m.question ? nlohmann::json(*m.question) : nlohmann::json(nullptr);
  j["answer"] = m.answer ? nlohmann::json(*m.answer) : nlohmann::json(nullptr);
  return j;
}

}  // namespace actowl::harness
