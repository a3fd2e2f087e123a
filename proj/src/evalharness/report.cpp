#include "puq/evalharness/report.hpp"

#include <algorithm>

#include "puq/dataio/binary_io.hpp"
#include "puq/error.hpp"

namespace puq {
namespace {

using nlohmann::json;

json results_to_json(const std::vector<MetricResult>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back({{"kind", r.kind}, {"auroc", r.auroc}, {"aupr", r.aupr}});
  return out;
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw FormatError(std::string("report: missing field '") + name + "'");
  return j.at(name);
}

double number(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) throw FormatError(std::string("report: field '") + name + "' is not a number");
  return v.get<double>();
}

std::vector<MetricResult> results_from_json(const json& j, const char* name) {
  const json& rows = field(j, name);
  if (!rows.is_array()) throw FormatError(std::string("report: '") + name + "' is not an array");
  std::vector<MetricResult> out;
  for (const auto& r : rows) {
    const json& kind = field(r, "kind");
    if (!kind.is_string()) throw FormatError("report: metric kind is not a string");
    out.push_back({kind.get<std::string>(), number(r, "auroc"), number(r, "aupr")});
  }
  return out;
}

const MetricResult* find_in(const std::vector<MetricResult>& rows, const std::string& kind) {
  auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.kind == kind; });
  return it == rows.end() ? nullptr : &*it;
}

}  // namespace

const MetricResult* ExperimentReport::find(const std::string& kind) const {
  return find_in(metrics, kind);
}

const MetricResult* ExperimentReport::find_baseline(const std::string& kind) const {
  return find_in(baseline, kind);
}

json to_json(const ExperimentReport& report) {
  json j;
  j["task"] = report.task;
  j["seed"] = report.seed;
  j["accuracy"] = report.accuracy;
  j["ece"] = report.ece;
  j["metrics"] = results_to_json(report.metrics);
  j["baseline"] = results_to_json(report.baseline);
  j["metadata"] = report.metadata;
  if (report.alpha_dump) j["alpha_dump"] = *report.alpha_dump;
  return j;
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  const json& task = field(j, "task");
  if (!task.is_string()) throw FormatError("report: task is not a string");
  r.task = task.get<std::string>();
  const json& seed = field(j, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    throw FormatError("report: seed is not an unsigned integer");
  r.seed = seed.get<std::uint64_t>();
  r.accuracy = number(j, "accuracy");
  r.ece = number(j, "ece");
  r.metrics = results_from_json(j, "metrics");
  r.baseline = results_from_json(j, "baseline");
  r.metadata = field(j, "metadata");
  if (j.contains("alpha_dump")) {
    try {
      r.alpha_dump = j.at("alpha_dump").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw FormatError(std::string("report: alpha_dump: ") + e.what());
    }
  }
  return r;
}

std::string dump_report(const ExperimentReport& report) {
  return to_json(report).dump(2) + "\n";
}

void write_report(const std::filesystem::path& path, const ExperimentReport& report) {
  write_file_atomic(path, dump_report(report));
}

ExperimentReport read_report(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

}  // namespace puq
