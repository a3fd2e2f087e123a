#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace puq {

struct MetricResult {
  std::string kind;
  double auroc = 0.0;
  double aupr = 0.0;

  bool operator==(const MetricResult&) const = default;
};

// JSON layout:
//   {task, seed, accuracy, ece, metrics: [{kind, auroc, aupr}],
//    baseline: [...], metadata: {...}, alpha_dump?: [[...]]}
// accuracy and ece are fractions in [0, 1]. Doubles are written with the
// shortest representation that reads back to the same bits.
struct ExperimentReport {
  std::string task;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double ece = 0.0;
  std::vector<MetricResult> metrics;
  std::vector<MetricResult> baseline;
  nlohmann::json metadata = nlohmann::json::object();
  std::optional<std::vector<std::vector<double>>> alpha_dump;

  const MetricResult* find(const std::string& kind) const;
  const MetricResult* find_baseline(const std::string& kind) const;

  bool operator==(const ExperimentReport&) const = default;
};

nlohmann::json to_json(const ExperimentReport& report);
// Throws FormatError on missing or mistyped fields.
ExperimentReport report_from_json(const nlohmann::json& j);

std::string dump_report(const ExperimentReport& report);
void write_report(const std::filesystem::path& path, const ExperimentReport& report);
ExperimentReport read_report(const std::filesystem::path& path);

}  // namespace puq
