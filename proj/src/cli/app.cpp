#include "puq/cli/app.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "puq/basemodel/base_model.hpp"
#include "puq/basemodel/tap_source.hpp"
#include "puq/cli/config.hpp"
#include "puq/cli/selfcheck.hpp"
#include "puq/dataio/binary_io.hpp"
#include "puq/dataio/feature_cache.hpp"
#include "puq/dataio/idx.hpp"
#include "puq/dataio/synthetic.hpp"
#include "puq/error.hpp"
#include "puq/evalharness/calibration.hpp"
#include "puq/evalharness/experiments.hpp"
#include "puq/numkernel/loss.hpp"
#include "puq/rng.hpp"
#include "puq/uqmetrics/scoring.hpp"

namespace puq::cli {
namespace {

using nlohmann::json;

constexpr std::uint64_t kBaseSeedStream = 100;
constexpr std::uint64_t kMetaSeedStream = 200;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> metrics;
  std::optional<std::string> mode;
  std::optional<double> data_fraction;
};

// Flags win over the file: patch them into the JSON before validation so
// they go through the same checks.
void apply_flags(json& j, const Flags& f, Task task) {
  if (!j.is_object()) return;
  if (f.seed) j["seed"] = *f.seed;
  if (f.out) j["output"] = *f.out;
  if (!f.metrics.empty()) j["metrics"] = f.metrics;
  if (f.mode) {
    if (task == Task::kAblate) j["ablation"]["mode"] = *f.mode;
    else j["meta"]["mode"] = *f.mode;
  }
  if (f.data_fraction) j["meta"]["data_fraction"] = *f.data_fraction;
}

struct Loaded {
  std::optional<Dataset> train, test, ood;
  std::optional<FeatureCache> train_cache, test_cache, ood_cache;
  std::vector<std::size_t> cache_dims;
};

Dataset as_ood(Dataset d, std::size_t num_classes, std::size_t dim) {
  if (d.dim() != dim)
    throw ShapeError("OOD set has input dim " + std::to_string(d.dim()) + ", expected " + std::to_string(dim));
  d.num_classes = num_classes;
  std::fill(d.labels.begin(), d.labels.end(), num_classes);
  return d;
}

Loaded load_data(const RunConfig& cfg) {
  Loaded l;
  switch (cfg.source) {
    case DataSource::kSynthetic: {
      auto split = gen_gaussian_mixture(cfg.synthetic, cfg.seed);
      l.train = std::move(split.train);
      l.test = std::move(split.test);
      l.ood = gen_ood_shifted(cfg.synthetic, cfg.seed);
      break;
    }
    case DataSource::kIdx: {
      const auto& p = cfg.idx;
      if (!p.train_images.empty() && std::filesystem::exists(p.train_images))
        l.train = load_idx(p.train_images, p.train_labels);
      if (!p.test_images.empty() && std::filesystem::exists(p.test_images))
        l.test = load_idx(p.test_images, p.test_labels);
      const Dataset* ref = l.train ? &*l.train : (l.test ? &*l.test : nullptr);
      if (l.train && l.test) {
        if (l.test->dim() != l.train->dim()) throw ShapeError("IDX test images differ in shape from train");
        l.test->num_classes = std::max(l.test->num_classes, l.train->num_classes);
        l.train->num_classes = l.test->num_classes;
      }
      if (ref && !p.ood_images.empty() && std::filesystem::exists(p.ood_images))
        l.ood = as_ood(load_idx(p.ood_images, p.ood_labels), ref->num_classes, ref->dim());
      break;
    }
    case DataSource::kCache: {
      const auto& p = cfg.cache;
      auto read = [&](const std::filesystem::path& path, std::optional<FeatureCache>& cache,
                      std::optional<Dataset>& data, const char* name) {
        if (path.empty() || !std::filesystem::exists(path)) return;
        cache = read_feature_cache(path);
        if (!l.cache_dims.empty() && cache->tap_dims != l.cache_dims)
          throw FormatError(path.string() + ": tap dims differ from the other caches");
        l.cache_dims = cache->tap_dims;
        data = cache_to_dataset(*cache, name);
      };
      read(p.train, l.train_cache, l.train, "train");
      read(p.test, l.test_cache, l.test, "test");
      read(p.ood, l.ood_cache, l.ood, "ood");
      if (l.ood) l.ood = as_ood(*l.ood, l.ood->num_classes, l.ood->dim());
      break;
    }
  }
  return l;
}

const Dataset& need(const std::optional<Dataset>& d, const char* what) {
  if (!d) throw ConfigError(std::string("the task needs a ") + what + " set");
  return *d;
}

MetaTrainConfig resolve_meta(const RunConfig& cfg, const Dataset& train) {
  MetaTrainConfig m = cfg.meta;
  m.elbo.lambda = cfg.lambda.value_or(MetaTrainConfig::defaults_for(train.size()).elbo.lambda);
  m.sgd.seed = derive_seed(cfg.seed, kMetaSeedStream);
  m.corruption.image_shape = train.image_shape;
  return m;
}

json resolved_config(const RunConfig& cfg, const MetaTrainConfig* meta) {
  json j = cfg.normalized();
  if (meta) j["meta"]["lambda"] = meta->elbo.lambda;
  return j;
}

double meta_accuracy(const MetaModel& meta, const TapSource& source, const Dataset& test,
                     double* ece_out) {
  const Matrix la = meta_log_alpha(meta, source, test.inputs);
  Matrix probs(la.rows(), la.cols());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < la.rows(); ++i) {
    const auto p = predictive_mean(DirichletParams::from_log_alpha(la.row(i)));
    std::copy(p.begin(), p.end(), probs.row(i).begin());
    hits += argmax(p) == test.labels[i];
  }
  *ece_out = ece(probs, test.labels);
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

struct Outputs {
  std::vector<std::pair<std::filesystem::path, std::vector<std::uint8_t>>> files;
  ExperimentReport report;
};

Outputs execute(const RunConfig& cfg) {
  Loaded data = load_data(cfg);
  Outputs o;
  const ReportOptions ropt{cfg.seed, cfg.dump_alpha};

  std::optional<FrozenBaseModel> base;
  auto source_for = [&]() -> TapSource {
    if (cfg.source == DataSource::kCache) return TapSource::cached(data.cache_dims);
    if (!base) base = load_base_model(cfg.base_model);
    return TapSource::live(*base);
  };

  switch (cfg.task) {
    case Task::kTrainBase: {
      const Dataset& train = need(data.train, "training");
      const Dataset& test = need(data.test, "test");
      BaseModelSpec spec{train.dim(), cfg.base_widths, train.num_classes, cfg.base_taps};
      SgdConfig sgd = cfg.base_sgd;
      sgd.seed = derive_seed(cfg.seed, kBaseSeedStream);
      BaseTrainResult trained = train_base(train, spec, sgd, &test);
      const Matrix probs = base_predict(trained.model, test.inputs);
      o.report.task = "train-base";
      o.report.seed = cfg.seed;
      o.report.accuracy = accuracy(trained.model, test);
      o.report.ece = ece(probs, test.labels);
      json log = json::array();
      for (const auto& e : trained.log)
        log.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"train_accuracy", e.train_accuracy}});
      o.report.metadata = {{"config", resolved_config(cfg, nullptr)},
                           {"train_accuracy", trained.model.train_accuracy()},
                           {"tap_dims", spec.tap_dims()},
                           {"epochs", log}};
      o.files.emplace_back(cfg.base_model, encode_base_model(trained.model));
      break;
    }
    case Task::kTrainMeta: {
      const Dataset& train = need(data.train, "training");
      const Dataset& test = need(data.test, "test");
      const TapSource source = source_for();
      const MetaTrainConfig mcfg = resolve_meta(cfg, train);
      MetaModelSpec spec = MetaModelSpec::for_taps(source.tap_dims(), train.num_classes, cfg.meta_mode);
      spec.logit_clamp = cfg.logit_clamp;
      spec.validate();
      TrainedMeta trained =
          train_meta(build_meta(spec, derive_seed(mcfg.sgd.seed, streams::kInit)), source, train, mcfg);
      o.report.task = "train-meta";
      o.report.seed = cfg.seed;
      o.report.accuracy = meta_accuracy(trained.model, source, test, &o.report.ece);
      o.report.metadata = {{"config", resolved_config(cfg, &mcfg)},
                           {"spec", spec_to_json(spec)},
                           {"training", training_to_json(trained)}};
      o.files.emplace_back(cfg.meta_model, encode_meta_model(trained.model));
      break;
    }
    case Task::kEvalOod: {
      const TapSource source = source_for();
      const MetaModel meta = load_meta_model(cfg.meta_model);
      o.report = run_ood(meta, source, need(data.test, "test"), need(data.ood, "OOD"), cfg.metrics, ropt);
      o.report.metadata["config"] = resolved_config(cfg, nullptr);
      break;
    }
    case Task::kEvalMisclass: {
      const TapSource source = source_for();
      const MetaModel meta = load_meta_model(cfg.meta_model);
      o.report = run_misclassification(meta, source, need(data.test, "test"), cfg.metrics, ropt);
      o.report.metadata["config"] = resolved_config(cfg, nullptr);
      break;
    }
    case Task::kTransfer: {
      if (!data.train_cache || !data.test_cache || !data.ood_cache)
        throw ConfigError("transfer needs train, test and OOD caches");
      const MetaTrainConfig mcfg = resolve_meta(cfg, *data.train);
      MetaModelSpec spec =
          MetaModelSpec::for_taps(data.cache_dims, data.train_cache->num_classes, cfg.meta_mode);
      spec.logit_clamp = cfg.logit_clamp;
      TrainedReport r = run_transfer(*data.train_cache, *data.test_cache, *data.ood_cache, spec, mcfg,
                                     cfg.metrics, ropt);
      o.report = std::move(r.report);
      o.report.metadata["config"] = resolved_config(cfg, &mcfg);
      o.files.emplace_back(cfg.meta_model, encode_meta_model(r.trained.model));
      break;
    }
    case Task::kAblate: {
      const Dataset& train = need(data.train, "training");
      const TapSource source = source_for();
      const MetaTrainConfig mcfg = resolve_meta(cfg, train);
      TrainedReport r = run_ablation(cfg.ablation, source, train, need(data.test, "test"),
                                     need(data.ood, "OOD"), mcfg, cfg.metrics, ropt);
      o.report = std::move(r.report);
      o.report.metadata["config"] = resolved_config(cfg, &mcfg);
      o.files.emplace_back(cfg.output / ("ablate-" + std::string(to_string(cfg.ablation)) + ".puqm"),
                           encode_meta_model(r.trained.model));
      break;
    }
    case Task::kSelfCheck: break;
  }
  return o;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kNumeric: return kExitNumeric;
    case ErrorKind::kDegenerate: return kExitDegenerate;
    default: return kExitConfig;
  }
}

const char* label_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kDegenerate: return "degenerate input";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kConfig: return "configuration error";
    default: return "input error";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-hoc uncertainty quantification with a Dirichlet meta-model", "puq"};
  app.require_subcommand(1, 1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"train-base", "Train and freeze the base classifier"},
      {"train-meta", "Train the meta-model on frozen base features"},
      {"eval-ood", "Out-of-distribution detection report"},
      {"eval-misclass", "Misclassification detection report"},
      {"transfer", "Train a meta-model on target-task feature caches"},
      {"ablate", "Meta-model ablation on the OOD task"},
      {"selfcheck", "Run the built-in numerical checks"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--seed", flags.seed, "Run seed (overrides the file)");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--metric", flags.metrics, "Metric name; repeatable");
    sub->add_option("--mode", flags.mode, "Ablation or meta mode");
    sub->add_option("--data-fraction", flags.data_fraction, "Fraction of meta training data");
  }

  std::vector<std::string> storage{"puq"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  const Task task = *parse_task(name);

  if (task == Task::kSelfCheck) return print_selfcheck(run_selfcheck(), out) ? kExitOk : kExitNumeric;

  if (flags.config.empty()) {
    err << "error: " << name << " requires --config <path>\n";
    return kExitUsage;
  }
  std::string text;
  {
    std::ifstream in(flags.config, std::ios::binary);
    if (!in) {
      err << "format error: cannot read " << flags.config << "\n";
      return kExitConfig;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    err << "format error: " << flags.config << ": " << e.what() << "\n";
    return kExitConfig;
  }
  apply_flags(j, flags, task);
  ValidationResult v = validate_config(j, {task, true});
  if (!v.config) {
    for (const auto& issue : v.issues)
      err << "config error: " << (issue.path.empty() ? "<root>" : issue.path) << ": " << issue.message << "\n";
    return kExitConfig;
  }
  const RunConfig& cfg = *v.config;

  try {
    Outputs o = execute(cfg);
    const std::filesystem::path report_path = cfg.output / (name + ".json");
    std::filesystem::create_directories(cfg.output);
    for (const auto& [path, bytes] : o.files) {
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      write_file_atomic(path, bytes);
    }
    write_report(report_path, o.report);
    out << name << ": accuracy " << o.report.accuracy;
    for (const auto& m : o.report.metrics) out << ", " << m.kind << " auroc " << m.auroc;
    out << "\nreport written to " << report_path.string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << label_for(e) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "format error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace puq::cli
