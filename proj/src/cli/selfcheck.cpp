#include "puq/cli/selfcheck.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "puq/dirichlet/dirichlet.hpp"
#include "puq/dirichlet/special_functions.hpp"
#include "puq/evalharness/ranking.hpp"
#include "puq/metamodel/meta_model.hpp"
#include "puq/rng.hpp"

namespace puq::cli {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

std::string format(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

CheckResult check_special_functions() {
  double worst_ref = 0.0;
  worst_ref = std::max(worst_ref, std::abs(log_gamma(5.0) - std::log(24.0)));
  worst_ref = std::max(worst_ref, std::abs(digamma(1.0) + kEulerGamma));
  worst_ref = std::max(worst_ref, std::abs(digamma(0.5) + kEulerGamma + 2.0 * std::numbers::ln2));
  worst_ref = std::max(worst_ref, std::abs(trigamma(1.0) - std::numbers::pi * std::numbers::pi / 6.0));
  double worst_rec = 0.0;
  for (double x = 1e-2; x <= 1e4; x *= 1.37) {
    const double scale = std::max(1.0, std::abs(log_gamma(x + 1.0)));
    worst_rec = std::max(worst_rec, std::abs(log_gamma(x + 1.0) - log_gamma(x) - std::log(x)) / scale);
    worst_rec = std::max(worst_rec, std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) /
                                        std::max(1.0, std::abs(digamma(x))));
    worst_rec = std::max(worst_rec, std::abs(trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)) /
                                        std::max(1.0, trigamma(x)));
  }
  const bool ok = worst_ref <= 1e-9 && worst_rec <= 1e-11;
  return {"special-functions", ok,
          "reference error " + format(worst_ref) + ", recurrence error " + format(worst_rec)};
}

CheckResult check_gradients() {
  Rng rng(derive_seed(2024, 1));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  MetaModelSpec spec{{6, 4}, 3, MetaMode::kDirichlet, kDefaultLogitClamp};
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    MetaModel meta = build_meta(spec, derive_seed(2024, 100 + trial));
    for (auto block : meta.parameter_spans())
      for (double& v : block) v = 0.5 * unit(rng);
    TapBatch taps;
    for (auto d : spec.tap_dims) {
      Matrix t(5, d);
      for (double& v : t.data()) v = std::abs(unit(rng)) + 0.1;
      taps.push_back(std::move(t));
    }
    std::vector<std::size_t> labels{0, 1, 2, 1, 0};
    ElboConfig elbo;
    const MetaLoss analytic = meta_loss_and_grad(meta, taps, labels, elbo);
    std::vector<double> a, f;
    for (auto g : analytic.grads.spans()) a.insert(a.end(), g.begin(), g.end());
    const double h = 1e-5;
    for (auto block : meta.parameter_spans()) {
      for (double& p : block) {
        const double saved = p;
        p = saved + h;
        const double up = meta_loss(meta, taps, labels, elbo);
        p = saved - h;
        const double down = meta_loss(meta, taps, labels, elbo);
        p = saved;
        f.push_back((up - down) / (2.0 * h));
      }
    }
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff += (a[i] - f[i]) * (a[i] - f[i]);
      na += a[i] * a[i];
      nf += f[i] * f[i];
    }
    worst = std::max(worst, std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nf), 1e-300}));
  }
  return {"elbo-gradient", worst <= 1e-5, "worst relative error " + format(worst)};
}

CheckResult check_ranking() {
  Rng rng(derive_seed(2024, 2));
  std::uniform_int_distribution<int> level(0, 4);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = size(rng);
    std::vector<ScoredSample> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = {static_cast<double>(level(rng)) * 0.25, i % 2 == 0};
    double credit = 0.0, pairs = 0.0;
    for (const auto& p : s)
      for (const auto& q : s) {
        if (!p.positive || q.positive) continue;
        pairs += 1.0;
        credit += p.score > q.score ? 1.0 : (p.score == q.score ? 0.5 : 0.0);
      }
    if (auroc(s) != credit / pairs) ++mismatches;
  }
  return {"auroc-oracle", mismatches == 0, std::to_string(mismatches) + " mismatches in 500 trials"};
}

}  // namespace

std::vector<CheckResult> run_selfcheck() {
  return {check_special_functions(), check_gradients(), check_ranking()};
}

bool print_selfcheck(const std::vector<CheckResult>& results, std::ostream& out) {
  std::size_t passed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    passed += r.passed;
  }
  out << passed << "/" << results.size() << " checks passed\n";
  return passed == results.size();
}

}  // namespace puq::cli
