#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "puq/dataio/synthetic.hpp"
#include "puq/evalharness/corruption.hpp"
#include "puq/evalharness/experiments.hpp"
#include "puq/metamodel/meta_model.hpp"
#include "puq/metamodel/train_meta.hpp"
#include "puq/numkernel/sgd.hpp"
#include "puq/uqmetrics/metrics.hpp"

namespace puq::cli {

enum class Task { kTrainBase, kTrainMeta, kEvalOod, kEvalMisclass, kTransfer, kAblate, kSelfCheck };

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view name);

enum class DataSource { kSynthetic, kIdx, kCache };

std::string_view to_string(DataSource source);

struct IdxPaths {
  std::filesystem::path train_images, train_labels;
  std::filesystem::path test_images, test_labels;
  std::filesystem::path ood_images, ood_labels;
};

struct CachePaths {
  std::filesystem::path train, test, ood;
};

struct RunConfig {
  Task task = Task::kTrainBase;
  std::uint64_t seed = 0;

  DataSource source = DataSource::kSynthetic;
  GaussianMixtureConfig synthetic = GaussianMixtureConfig::triangle();
  IdxPaths idx;
  CachePaths cache;

  std::vector<std::size_t> base_widths{32, 32, 16};
  std::vector<std::size_t> base_taps{0, 1, 2};
  SgdConfig base_sgd;

  MetaMode meta_mode = MetaMode::kDirichlet;
  double logit_clamp = kDefaultLogitClamp;
  // Absent lambda follows the training-set-size rule once the data is loaded.
  std::optional<double> lambda;
  MetaTrainConfig meta;

  std::vector<MetricKind> metrics;
  AblationMode ablation = AblationMode::kLinearMeta;
  std::filesystem::path base_model;
  std::filesystem::path meta_model;
  std::filesystem::path output = "out";
  bool dump_alpha = false;

  // Resolved configuration with every default filled in.
  nlohmann::json normalized() const;
};

struct ConfigIssue {
  std::string path;     // e.g. "meta.val_fraction"
  std::string message;
};

struct ValidationResult {
  std::optional<RunConfig> config;   // set only when issues is empty
  std::vector<ConfigIssue> issues;
};

struct ValidateOptions {
  Task task = Task::kTrainBase;
  // Check that every file the task reads exists.
  bool check_files = true;
};

// Malformed JSON is reported as a single issue at path "".
ValidationResult validate_config(std::string_view text, const ValidateOptions& options);
ValidationResult validate_config(const nlohmann::json& j, const ValidateOptions& options);

}  // namespace puq::cli
