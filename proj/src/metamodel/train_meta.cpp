#include "puq/metamodel/train_meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "puq/error.hpp"
#include "puq/evalharness/ranking.hpp"
#include "puq/numkernel/loss.hpp"
#include "puq/rng.hpp"

namespace puq {
namespace {

TapBatch select_tap_rows(const TapBatch& taps, std::span<const std::size_t> rows) {
  TapBatch out;
  out.reserve(taps.size());
  for (const auto& t : taps) out.push_back(select_rows(t, rows));
  return out;
}

// Fixed validation material, extracted once before the epoch loop.
struct Validation {
  TapBatch taps;
  std::vector<std::size_t> labels;
  TapBatch noisy_taps;
};

double ood_auroc(const MetaModel& meta, const Validation& val, MetricKind score) {
  const auto id = scores_from_log_alpha(meta_forward(meta, val.taps), score);
  const auto ood = scores_from_log_alpha(meta_forward(meta, val.noisy_taps), score);
  const auto samples = make_scored(id, ood);
  return auroc(samples);
}

double misclass_auroc(const MetaModel& meta, const Validation& val) {
  const Matrix log_alpha = meta_forward(meta, val.taps);
  const auto unc = scores_from_log_alpha(log_alpha, MetricKind::kMaxProb);
  std::vector<double> correct;
  std::vector<double> wrong;
  for (std::size_t i = 0; i < val.labels.size(); ++i) {
    (argmax(log_alpha.row(i)) == val.labels[i] ? correct : wrong).push_back(unc[i]);
  }
  if (correct.empty() || wrong.empty()) {
    throw DegenerateError(
        "misclassification stop metric: validation predictions are all correct or all wrong; "
        "use stop_metric val_loss instead");
  }
  return auroc(make_scored(correct, wrong));
}

}  // namespace

std::string_view to_string(StopMetric metric) {
  switch (metric) {
    case StopMetric::kOodAuroc: return "ood_auroc";
    case StopMetric::kMisclassAuroc: return "misclass_auroc";
    case StopMetric::kValLoss: return "val_loss";
  }
  return "unknown";
}

std::optional<StopMetric> parse_stop_metric(std::string_view name) {
  for (auto m : {StopMetric::kOodAuroc, StopMetric::kMisclassAuroc, StopMetric::kValLoss}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

void MetaTrainConfig::validate() const {
  elbo.validate();
  sgd.validate();
  if (!(val_fraction > 0.0 && val_fraction <= 0.5))
    throw ConfigError("val_fraction must lie in (0, 0.5]");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0))
    throw ConfigError("data_fraction must lie in (0, 1]");
  if (stop_metric == StopMetric::kOodAuroc) {
    corruption.validate();
    if (corruption.enabled_kinds().empty())
      throw ConfigError("ood_auroc stopping needs at least one corruption enabled");
  }
}

MetaTrainConfig MetaTrainConfig::defaults_for(std::size_t n_train) {
  MetaTrainConfig cfg;
  cfg.elbo.lambda = n_train < 10000 ? 0.1 : 1e-3;
  return cfg;
}

std::vector<CorruptionKind> corruption_assignment(std::size_t n, const CorruptionConfig& config,
                                                  std::uint64_t seed) {
  const auto kinds = config.enabled_kinds();
  if (kinds.empty()) throw ConfigError("no corruption enabled");
  std::vector<CorruptionKind> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = kinds[i % kinds.size()];
  Rng rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

Dataset make_noisy_validation(const Dataset& val, const CorruptionConfig& config,
                              std::uint64_t seed) {
  config.validate();
  const auto kinds = config.enabled_kinds();
  const auto assignment = corruption_assignment(val.size(), config, derive_seed(seed, 0));
  Matrix noisy(val.size(), val.dim());
  for (std::size_t part = 0; part < kinds.size(); ++part) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == kinds[part]) rows.push_back(i);
    if (rows.empty()) continue;
    const Matrix out = corrupt(select_rows(val.inputs, rows), config, kinds[part],
                               derive_seed(seed, part + 1));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(out.row(r).begin(), out.row(r).end(), noisy.row(rows[r]).begin());
    }
  }
  Dataset result = val.with_inputs(std::move(noisy), val.name + "-noisy");
  std::fill(result.labels.begin(), result.labels.end(), val.ood_label());
  return result;
}

TrainedMeta train_meta(MetaModel initial, const TapSource& source, const Dataset& train,
                       const MetaTrainConfig& cfg, const StopEvaluator& custom_stop) {
  cfg.validate();
  train.validate();
  if (train.dim() != source.input_dim())
    throw ShapeError("train_meta: dataset dim " + std::to_string(train.dim()) +
                     " does not match the tap source input dim " +
                     std::to_string(source.input_dim()));
  if (train.num_classes != initial.spec().num_classes)
    throw ShapeError("train_meta: dataset and meta-model disagree on K");
  const std::uint64_t seed = cfg.sgd.seed;
  const std::uint64_t checksum_before = source.base() ? source.base()->checksum() : 0;

  TrainedMeta result{.model = initial};
  const std::size_t n_used = std::min<std::size_t>(
      train.size(),
      static_cast<std::size_t>(std::ceil(cfg.data_fraction * static_cast<double>(train.size()) - 1e-9)));
  const Dataset used =
      n_used == train.size() ? train : subsample(train, n_used, derive_seed(seed, streams::kSubsample));
  const double fractions[] = {1.0 - cfg.val_fraction, cfg.val_fraction};
  auto parts = split(used, fractions, derive_seed(seed, streams::kSplit));
  const Dataset& fit = parts[0];
  const Dataset& val_set = parts[1];
  if (fit.size() == 0 || val_set.size() == 0)
    throw InputError("train_meta: too few samples for a fit/validation split");
  result.n_used = used.size();
  result.n_fit = fit.size();
  result.n_val = val_set.size();

  const TapBatch fit_taps = source.extract(fit.inputs);
  Validation val{source.extract(val_set.inputs), val_set.labels, {}};
  if (!custom_stop && cfg.stop_metric == StopMetric::kOodAuroc) {
    const Dataset noisy =
        make_noisy_validation(val_set, cfg.corruption, derive_seed(seed, streams::kCorrupt));
    val.noisy_taps = source.extract(noisy.inputs);
  }

  auto evaluate = [&](const MetaModel& m, std::size_t epoch) -> double {
    if (custom_stop) return custom_stop(m, epoch);
    switch (cfg.stop_metric) {
      case StopMetric::kOodAuroc: return ood_auroc(m, val, cfg.ood_score);
      case StopMetric::kMisclassAuroc: return misclass_auroc(m, val);
      case StopMetric::kValLoss: return -meta_loss(m, val.taps, val.labels, cfg.elbo);
    }
    return 0.0;
  };

  MetaModel model = std::move(initial);
  result.initial_train_loss = meta_loss(model, fit_taps, fit.labels, cfg.elbo);
  SgdState state;
  std::vector<std::size_t> order(fit.size());
  double best = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const std::size_t bs = cfg.sgd.batch_size;

  for (std::size_t epoch = 1; epoch <= cfg.sgd.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = rng_for(derive_seed(seed, streams::kShuffle), epoch);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> rows(order.data() + start,
                                              std::min(bs, order.size() - start));
      const TapBatch batch = select_tap_rows(fit_taps, rows);
      std::vector<std::size_t> labels;
      labels.reserve(rows.size());
      for (auto r : rows) labels.push_back(fit.labels[r]);
      const MetaLoss step = meta_loss_and_grad(model, batch, labels, cfg.elbo);
      const auto params = model.parameter_spans();
      const auto grads = step.grads.spans();
      sgd_step(params, grads, state, cfg.sgd);
    }
    const double train_loss = meta_loss(model, fit_taps, fit.labels, cfg.elbo);
    if (!std::isfinite(train_loss))
      throw NumericError("train_meta: training loss became non-finite at epoch " +
                         std::to_string(epoch));
    const double value = evaluate(model, epoch);
    const double reported = (!custom_stop && cfg.stop_metric == StopMetric::kValLoss) ? -value : value;
    result.history.push_back({epoch, train_loss, reported});
    result.stopped_epoch = epoch;
    if (value > best) {
      best = value;
      result.best_epoch = epoch;
      result.best_stop_value = reported;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  if (source.base() && source.base()->compute_checksum() != checksum_before)
    throw std::logic_error("train_meta: base model parameters changed during meta training");
  return result;
}

}  // namespace puq
