#include "puq/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "puq/basemodel/base_model.hpp"

namespace puq::cli {
namespace {

using nlohmann::json;

struct Checker {
  std::vector<ConfigIssue>& issues;

  void fail(const std::string& path, std::string message) {
    issues.push_back({path, std::move(message)});
  }

  static std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  // Objects that are absent read as empty; anything else must be an object.
  const json& object(const json& parent, const std::string& key, const std::string& path) {
    static const json kEmpty = json::object();
    if (!parent.contains(key)) return kEmpty;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      fail(path, "must be an object");
      return kEmpty;
    }
    return v;
  }

  void known_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> keys) {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, _] : obj.items()) {
      if (!allowed.count(k)) fail(join(prefix, k), "unknown field");
    }
  }

  double number(const json& obj, const std::string& key, const std::string& prefix, double fallback,
                const std::function<bool(double)>& ok, const char* range) {
    const std::string path = join(prefix, key);
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(path, "must be a number");
      return fallback;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d) || !ok(d)) {
      fail(path, std::string("out of range: must be ") + range);
      return fallback;
    }
    return d;
  }

  std::size_t count(const json& obj, const std::string& key, const std::string& prefix,
                    std::size_t fallback, std::size_t min_value) {
    const std::string path = join(prefix, key);
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min_value)) {
      fail(path, "must be an integer >= " + std::to_string(min_value));
      return fallback;
    }
    return v.get<std::size_t>();
  }

  bool boolean(const json& obj, const std::string& key, const std::string& prefix, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      fail(join(prefix, key), "must be true or false");
      return fallback;
    }
    return v.get<bool>();
  }

  std::optional<std::string> string(const json& obj, const std::string& key, const std::string& prefix) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      fail(join(prefix, key), "must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::vector<std::size_t> counts(const json& obj, const std::string& key, const std::string& prefix,
                                  std::vector<std::size_t> fallback, std::size_t min_value) {
    const std::string path = join(prefix, key);
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array()) {
      fail(path, "must be an array of integers");
      return fallback;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& e = v[i];
      if (!e.is_number_integer() || e.get<std::int64_t>() < static_cast<std::int64_t>(min_value)) {
        fail(path + "[" + std::to_string(i) + "]", "must be an integer >= " + std::to_string(min_value));
        return fallback;
      }
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  std::optional<std::vector<double>> reals(const json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "must be an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        fail(path + "[" + std::to_string(i) + "]", "must be a finite number");
        return std::nullopt;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void file(const std::filesystem::path& p, const std::string& path, bool check) {
    if (p.empty()) {
      fail(path, "required for this task");
    } else if (check && !std::filesystem::is_regular_file(p)) {
      fail(path, "file not found: " + p.string());
    }
  }
};

SgdConfig read_sgd(Checker& c, const json& parent, const std::string& prefix, SgdConfig d) {
  const std::string path = Checker::join(prefix, "sgd");
  const json& s = c.object(parent, "sgd", path);
  c.known_keys(s, path, {"learning_rate", "momentum", "weight_decay", "batch_size", "epochs"});
  d.learning_rate = c.number(s, "learning_rate", path, d.learning_rate, [](double v) { return v > 0; }, "> 0");
  d.momentum = c.number(s, "momentum", path, d.momentum, [](double v) { return v >= 0 && v < 1; }, "in [0, 1)");
  d.weight_decay = c.number(s, "weight_decay", path, d.weight_decay, [](double v) { return v >= 0; }, ">= 0");
  d.batch_size = c.count(s, "batch_size", path, d.batch_size, 1);
  d.max_epochs = c.count(s, "epochs", path, d.max_epochs, 0);
  return d;
}

json sgd_json(const SgdConfig& s) {
  return {{"learning_rate", s.learning_rate},
          {"momentum", s.momentum},
          {"weight_decay", s.weight_decay},
          {"batch_size", s.batch_size},
          {"epochs", s.max_epochs}};
}

void read_data(Checker& c, const json& root, RunConfig& cfg, const ValidateOptions& opt) {
  const json& data = c.object(root, "data", "data");
  c.known_keys(data, "data", {"source", "synthetic", "idx", "cache"});
  if (auto s = c.string(data, "source", "data")) {
    if (*s == "synthetic") cfg.source = DataSource::kSynthetic;
    else if (*s == "idx") cfg.source = DataSource::kIdx;
    else if (*s == "cache") cfg.source = DataSource::kCache;
    else c.fail("data.source", "must be one of synthetic, idx, cache");
  }

  const json& syn = c.object(data, "synthetic", "data.synthetic");
  c.known_keys(syn, "data.synthetic", {"sigma", "samples_per_class", "ood_samples", "ood_shift", "means"});
  const double sigma = c.number(syn, "sigma", "data.synthetic", 1.0, [](double v) { return v > 0; }, "> 0");
  const std::size_t spc = c.count(syn, "samples_per_class", "data.synthetic", 500, 5);
  GaussianMixtureConfig g = GaussianMixtureConfig::triangle(sigma, spc);
  g.ood_samples = c.count(syn, "ood_samples", "data.synthetic", g.ood_samples, 1);
  if (syn.contains("means")) {
    const json& m = syn.at("means");
    if (!m.is_array() || m.size() < 2) {
      c.fail("data.synthetic.means", "must list at least two mean vectors");
    } else {
      g.means.clear();
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (auto v = c.reals(m[i], "data.synthetic.means[" + std::to_string(i) + "]")) g.means.push_back(*v);
      }
      if (g.means.size() == m.size() && g.means.front().size() != 2 && !syn.contains("ood_shift"))
        c.fail("data.synthetic.ood_shift", "required when the means are not 2-D");
    }
  }
  if (syn.contains("ood_shift")) {
    if (auto v = c.reals(syn.at("ood_shift"), "data.synthetic.ood_shift")) g.ood_shift = *v;
  }
  if (c.issues.empty()) {
    try {
      g.validate();
    } catch (const std::exception& e) {
      c.fail("data.synthetic", e.what());
    }
  }
  cfg.synthetic = g;

  const json& idx = c.object(data, "idx", "data.idx");
  c.known_keys(idx, "data.idx", {"train_images", "train_labels", "test_images", "test_labels",
                                 "ood_images", "ood_labels"});
  auto path_of = [&](const json& obj, const char* key, const std::string& prefix) {
    return std::filesystem::path(c.string(obj, key, prefix).value_or(""));
  };
  cfg.idx = {path_of(idx, "train_images", "data.idx"), path_of(idx, "train_labels", "data.idx"),
             path_of(idx, "test_images", "data.idx"),  path_of(idx, "test_labels", "data.idx"),
             path_of(idx, "ood_images", "data.idx"),   path_of(idx, "ood_labels", "data.idx")};

  const json& cache = c.object(data, "cache", "data.cache");
  c.known_keys(cache, "data.cache", {"train", "test", "ood"});
  cfg.cache = {path_of(cache, "train", "data.cache"), path_of(cache, "test", "data.cache"),
               path_of(cache, "ood", "data.cache")};

  // Which splits the task reads.
  bool need_train = false, need_test = false, need_ood = false;
  switch (opt.task) {
    case Task::kTrainBase: need_train = need_test = true; break;
    case Task::kTrainMeta: need_train = need_test = true; break;
    case Task::kEvalOod: need_test = need_ood = true; break;
    case Task::kEvalMisclass: need_test = true; break;
    case Task::kTransfer: need_train = need_test = need_ood = true; break;
    case Task::kAblate: need_train = need_test = need_ood = true; break;
    case Task::kSelfCheck: break;
  }
  if (opt.task == Task::kTrainBase && cfg.source == DataSource::kCache)
    c.fail("data.source", "train-base needs raw inputs (synthetic or idx)");
  if (opt.task == Task::kTransfer && cfg.source != DataSource::kCache)
    c.fail("data.source", "transfer trains on feature caches; set source to cache");
  const bool check = opt.check_files;
  if (cfg.source == DataSource::kIdx) {
    if (need_train) {
      c.file(cfg.idx.train_images, "data.idx.train_images", check);
      c.file(cfg.idx.train_labels, "data.idx.train_labels", check);
    }
    if (need_test) {
      c.file(cfg.idx.test_images, "data.idx.test_images", check);
      c.file(cfg.idx.test_labels, "data.idx.test_labels", check);
    }
    if (need_ood) {
      c.file(cfg.idx.ood_images, "data.idx.ood_images", check);
      c.file(cfg.idx.ood_labels, "data.idx.ood_labels", check);
    }
  } else if (cfg.source == DataSource::kCache) {
    if (need_train) c.file(cfg.cache.train, "data.cache.train", check);
    if (need_test) c.file(cfg.cache.test, "data.cache.test", check);
    if (need_ood) c.file(cfg.cache.ood, "data.cache.ood", check);
  }
}

void read_base(Checker& c, const json& root, RunConfig& cfg) {
  const json& base = c.object(root, "base", "base");
  c.known_keys(base, "base", {"hidden_widths", "tap_layers", "sgd"});
  cfg.base_widths = c.counts(base, "hidden_widths", "base", cfg.base_widths, 1);
  // Default: a tap after every hidden layer, capped at kMaxTaps.
  std::vector<std::size_t> default_taps(std::min(cfg.base_widths.size(), kMaxTaps));
  for (std::size_t i = 0; i < default_taps.size(); ++i) default_taps[i] = i;
  cfg.base_taps = c.counts(base, "tap_layers", "base", default_taps, 0);
  if (cfg.base_widths.empty()) c.fail("base.hidden_widths", "must not be empty");
  if (cfg.base_taps.empty() || cfg.base_taps.size() > kMaxTaps)
    c.fail("base.tap_layers", "must list between 1 and " + std::to_string(kMaxTaps) + " layers");
  for (std::size_t i = 0; i < cfg.base_taps.size(); ++i) {
    if (cfg.base_taps[i] >= cfg.base_widths.size())
      c.fail("base.tap_layers[" + std::to_string(i) + "]", "refers to a layer that does not exist");
    if (i > 0 && cfg.base_taps[i] <= cfg.base_taps[i - 1])
      c.fail("base.tap_layers[" + std::to_string(i) + "]", "tap layers must be strictly increasing");
  }
  cfg.base_sgd = read_sgd(c, base, "base", SgdConfig{});
}

void read_corruption(Checker& c, const json& meta, RunConfig& cfg) {
  const std::string path = "meta.corruption";
  const json& j = c.object(meta, "corruption", path);
  c.known_keys(j, path, {"pixel_permutation", "gaussian_blur", "contrast_rescale", "gaussian_noise",
                         "blur_sigma", "contrast_factor", "noise_scale"});
  CorruptionConfig d = CorruptionConfig::for_vectors();
  if (cfg.source == DataSource::kIdx) {
    d.gaussian_blur = true;
    d.gaussian_noise = false;
  }
  d.pixel_permutation = c.boolean(j, "pixel_permutation", path, d.pixel_permutation);
  d.gaussian_blur = c.boolean(j, "gaussian_blur", path, d.gaussian_blur);
  d.contrast_rescale = c.boolean(j, "contrast_rescale", path, d.contrast_rescale);
  d.gaussian_noise = c.boolean(j, "gaussian_noise", path, d.gaussian_noise);
  d.blur_sigma = c.number(j, "blur_sigma", path, d.blur_sigma, [](double v) { return v > 0; }, "> 0");
  d.contrast_factor = c.number(j, "contrast_factor", path, d.contrast_factor,
                               [](double v) { return v >= 0 && v <= 1; }, "in [0, 1]");
  d.noise_scale = c.number(j, "noise_scale", path, d.noise_scale, [](double v) { return v > 0; }, "> 0");
  if (d.enabled_kinds().empty()) c.fail(path, "at least one corruption must be enabled");
  if (d.gaussian_blur && cfg.source != DataSource::kIdx)
    c.fail(path + ".gaussian_blur", "needs image data (source idx)");
  cfg.meta.corruption = d;
}

void read_meta(Checker& c, const json& root, RunConfig& cfg) {
  const json& meta = c.object(root, "meta", "meta");
  c.known_keys(meta, "meta", {"mode", "lambda", "beta", "val_fraction", "patience", "stop_metric",
                              "ood_score", "data_fraction", "logit_clamp", "sgd", "corruption"});
  if (auto s = c.string(meta, "mode", "meta")) {
    if (auto m = parse_meta_mode(*s)) cfg.meta_mode = *m;
    else c.fail("meta.mode", "must be one of dirichlet, linear_meta, cross_ent, last_layer");
  }
  if (meta.contains("lambda") && !meta.at("lambda").is_null()) {
    cfg.lambda = c.number(meta, "lambda", "meta", 0.1, [](double v) { return v >= 0; }, ">= 0");
  }
  cfg.meta.elbo.beta = c.number(meta, "beta", "meta", 1.0, [](double v) { return v > 0; }, "> 0");
  cfg.meta.val_fraction = c.number(meta, "val_fraction", "meta", 0.2,
                                   [](double v) { return v > 0 && v <= 0.5; }, "in (0, 0.5]");
  cfg.meta.patience = c.count(meta, "patience", "meta", 10, 1);
  if (auto s = c.string(meta, "stop_metric", "meta")) {
    if (auto m = parse_stop_metric(*s)) cfg.meta.stop_metric = *m;
    else c.fail("meta.stop_metric", "must be one of ood_auroc, misclass_auroc, val_loss");
  }
  if (auto s = c.string(meta, "ood_score", "meta")) {
    if (auto m = parse_metric(*s)) cfg.meta.ood_score = *m;
    else c.fail("meta.ood_score", "unknown metric '" + *s + "'");
  }
  cfg.meta.data_fraction = c.number(meta, "data_fraction", "meta", 1.0,
                                    [](double v) { return v > 0 && v <= 1; }, "in (0, 1]");
  cfg.logit_clamp = c.number(meta, "logit_clamp", "meta", kDefaultLogitClamp,
                             [](double v) { return v > 0; }, "> 0");
  cfg.meta.sgd = read_sgd(c, meta, "meta", MetaTrainConfig{}.sgd);
  read_corruption(c, meta, cfg);
}

void read_metrics(Checker& c, const json& root, RunConfig& cfg, Task task) {
  if (root.contains("metrics")) {
    const json& m = root.at("metrics");
    if (!m.is_array()) {
      c.fail("metrics", "must be an array of metric names");
    } else {
      for (std::size_t i = 0; i < m.size(); ++i) {
        const std::string path = "metrics[" + std::to_string(i) + "]";
        if (!m[i].is_string()) {
          c.fail(path, "must be a string");
        } else if (auto kind = parse_metric(m[i].get<std::string>())) {
          if (std::find(cfg.metrics.begin(), cfg.metrics.end(), *kind) == cfg.metrics.end())
            cfg.metrics.push_back(*kind);
        } else {
          c.fail(path, "unknown metric '" + m[i].get<std::string>() + "'");
        }
      }
    }
  } else if (task == Task::kEvalMisclass) {
    cfg.metrics = default_misclass_metrics();
  } else if (task != Task::kAblate) {
    cfg.metrics = default_ood_metrics();
  }
  if (task == Task::kEvalMisclass) {
    for (std::size_t i = 0; i < cfg.metrics.size(); ++i) {
      if (category(cfg.metrics[i]) != MetricCategory::kTotal)
        c.fail("metrics[" + std::to_string(i) + "]",
               "misclassification detection uses total-uncertainty metrics (entropy, max_prob)");
    }
  }
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kTrainBase: return "train-base";
    case Task::kTrainMeta: return "train-meta";
    case Task::kEvalOod: return "eval-ood";
    case Task::kEvalMisclass: return "eval-misclass";
    case Task::kTransfer: return "transfer";
    case Task::kAblate: return "ablate";
    case Task::kSelfCheck: return "selfcheck";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view name) {
  for (auto t : {Task::kTrainBase, Task::kTrainMeta, Task::kEvalOod, Task::kEvalMisclass,
                 Task::kTransfer, Task::kAblate, Task::kSelfCheck}) {
    if (name == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string_view to_string(DataSource source) {
  switch (source) {
    case DataSource::kSynthetic: return "synthetic";
    case DataSource::kIdx: return "idx";
    case DataSource::kCache: return "cache";
  }
  return "unknown";
}

json RunConfig::normalized() const {
  json data = {{"source", std::string(to_string(source))}};
  if (source == DataSource::kSynthetic) {
    data["synthetic"] = {{"sigma", synthetic.sigma},
                         {"samples_per_class", synthetic.samples_per_class},
                         {"ood_samples", synthetic.ood_samples},
                         {"ood_shift", synthetic.ood_shift},
                         {"means", synthetic.means}};
  } else if (source == DataSource::kIdx) {
    data["idx"] = {{"train_images", idx.train_images.string()}, {"train_labels", idx.train_labels.string()},
                   {"test_images", idx.test_images.string()},   {"test_labels", idx.test_labels.string()},
                   {"ood_images", idx.ood_images.string()},     {"ood_labels", idx.ood_labels.string()}};
  } else {
    data["cache"] = {{"train", cache.train.string()}, {"test", cache.test.string()}, {"ood", cache.ood.string()}};
  }
  const auto& c = meta.corruption;
  json metrics_json = json::array();
  for (auto m : metrics) metrics_json.push_back(std::string(to_string(m)));
  return {
      {"task", std::string(to_string(task))},
      {"seed", seed},
      {"data", data},
      {"base", {{"hidden_widths", base_widths}, {"tap_layers", base_taps}, {"sgd", sgd_json(base_sgd)}}},
      {"meta",
       {{"mode", std::string(to_string(meta_mode))},
        {"lambda", lambda ? json(*lambda) : json(nullptr)},
        {"beta", meta.elbo.beta},
        {"val_fraction", meta.val_fraction},
        {"patience", meta.patience},
        {"stop_metric", std::string(to_string(meta.stop_metric))},
        {"ood_score", std::string(to_string(meta.ood_score))},
        {"data_fraction", meta.data_fraction},
        {"logit_clamp", logit_clamp},
        {"sgd", sgd_json(meta.sgd)},
        {"corruption",
         {{"pixel_permutation", c.pixel_permutation},
          {"gaussian_blur", c.gaussian_blur},
          {"contrast_rescale", c.contrast_rescale},
          {"gaussian_noise", c.gaussian_noise},
          {"blur_sigma", c.blur_sigma},
          {"contrast_factor", c.contrast_factor},
          {"noise_scale", c.noise_scale}}}}},
      {"metrics", metrics_json},
      {"ablation", {{"mode", std::string(to_string(ablation))}}},
      {"models", {{"base", base_model.string()}, {"meta", meta_model.string()}}},
      {"output", output.string()},
      {"dump_alpha", dump_alpha},
  };
}

ValidationResult validate_config(std::string_view text, const ValidateOptions& options) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    return {std::nullopt, {{"", std::string("malformed JSON: ") + e.what()}}};
  }
  return validate_config(j, options);
}

ValidationResult validate_config(const json& root, const ValidateOptions& options) {
  ValidationResult result;
  Checker c{result.issues};
  if (!root.is_object()) {
    c.fail("", "configuration must be a JSON object");
    return result;
  }
  c.known_keys(root, "", {"task", "seed", "data", "base", "meta", "metrics", "ablation", "models",
                          "output", "dump_alpha"});
  RunConfig cfg;
  cfg.task = options.task;
  if (auto t = c.string(root, "task", "")) {
    if (parse_task(*t) != options.task)
      c.fail("task", "names '" + *t + "' but the command is " + std::string(to_string(options.task)));
  }
  if (!root.contains("seed")) {
    c.fail("seed", "required (runs have no implicit randomness)");
  } else if (!root.at("seed").is_number_unsigned() &&
             !(root.at("seed").is_number_integer() && root.at("seed").get<std::int64_t>() >= 0)) {
    c.fail("seed", "must be a non-negative integer");
  } else {
    cfg.seed = root.at("seed").get<std::uint64_t>();
  }

  read_data(c, root, cfg, options);
  read_base(c, root, cfg);
  read_meta(c, root, cfg);
  read_metrics(c, root, cfg, options.task);

  const json& abl = c.object(root, "ablation", "ablation");
  c.known_keys(abl, "ablation", {"mode"});
  if (auto s = c.string(abl, "mode", "ablation")) {
    if (auto m = parse_ablation_mode(*s)) cfg.ablation = *m;
    else c.fail("ablation.mode", "must be one of full, linear_meta, cross_ent, last_layer, ten_percent_data");
  }

  cfg.output = c.string(root, "output", "").value_or("out");
  cfg.dump_alpha = c.boolean(root, "dump_alpha", "", false);
  const json& models = c.object(root, "models", "models");
  c.known_keys(models, "models", {"base", "meta"});
  cfg.base_model = c.string(models, "base", "models").value_or((cfg.output / "base.puqb").string());
  cfg.meta_model = c.string(models, "meta", "models").value_or((cfg.output / "meta.puqm").string());

  const Task t = options.task;
  const bool reads_base = cfg.source != DataSource::kCache &&
                          (t == Task::kTrainMeta || t == Task::kEvalOod ||
                           t == Task::kEvalMisclass || t == Task::kAblate);
  const bool reads_meta = t == Task::kEvalOod || t == Task::kEvalMisclass;
  if (reads_base) c.file(cfg.base_model, "models.base", options.check_files);
  if (reads_meta) c.file(cfg.meta_model, "models.meta", options.check_files);

  if (result.issues.empty()) result.config = std::move(cfg);
  return result;
}

}  // namespace puq::cli
