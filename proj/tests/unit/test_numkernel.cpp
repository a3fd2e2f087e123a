#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "puq/error.hpp"
#include "puq/numkernel/init.hpp"
#include "puq/numkernel/loss.hpp"
#include "puq/numkernel/matrix.hpp"
#include "puq/numkernel/mlp.hpp"
#include "puq/numkernel/sgd.hpp"
#include "puq/rng.hpp"

using namespace puq;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.data()) v = nd(gen);
  return m;
}

Mlp single_layer(Matrix w, std::vector<double> b, Activation act) {
  return Mlp({DenseLayer{std::move(w), std::move(b), act}});
}

// Sum of output * fixed weights, so d loss / d output = weights.
double weighted_sum(const Matrix& out, const Matrix& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * weights.data()[i];
  return s;
}

}  // namespace

TEST_CASE("matrix products agree with each other") {
  std::mt19937_64 gen(3);
  const Matrix a = random_matrix(4, 3, gen);
  const Matrix b = random_matrix(5, 3, gen);
  const Matrix viabt = matmul_bt(a, b);
  const Matrix viat = matmul(a, transpose(b));
  for (std::size_t i = 0; i < viabt.size(); ++i)
    CHECK(viabt.data()[i] == doctest::Approx(viat.data()[i]).epsilon(1e-14));
  const Matrix at = matmul_at(transpose(a), transpose(b));
  for (std::size_t i = 0; i < at.size(); ++i)
    CHECK(at.data()[i] == doctest::Approx(viat.data()[i]).epsilon(1e-14));
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("hsplit undoes hconcat") {
  std::mt19937_64 gen(4);
  std::vector<Matrix> blocks = {random_matrix(3, 2, gen), random_matrix(3, 4, gen)};
  const Matrix joined = hconcat(blocks);
  CHECK(joined.cols() == 6);
  const std::vector<std::size_t> widths = {2, 4};
  CHECK(hsplit(joined, widths) == blocks);
}

TEST_CASE("forward: zero weights output the bias on every row") {
  const Mlp net = single_layer(Matrix(2, 3), {0.5, -1.5}, Activation::kIdentity);
  const Matrix x = Matrix::from_rows({{1, 2, 3}, {-4, 5, 6}});
  const Matrix y = forward(net, x).output();
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(y(r, 0) == 0.5);
    CHECK(y(r, 1) == -1.5);
  }
}

TEST_CASE("forward: identity layer is the identity") {
  Matrix eye(3, 3);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  const Mlp net = single_layer(eye, {0, 0, 0}, Activation::kIdentity);
  const Matrix x = Matrix::from_rows({{1.25, -2, 3}});
  CHECK(forward(net, x).output() == x);
}

TEST_CASE("forward: seeded 2-layer ReLU net matches a naive evaluation") {
  const std::vector<std::size_t> dims = {2, 4, 3};
  const Mlp net = Mlp::make(dims, Activation::kIdentity, 0);
  const Matrix x = Matrix::from_rows({{1, 1}});
  const Matrix got = forward(net, x).output();
  const Matrix want = oracle::forward(net, x);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-14));
}

TEST_CASE("forward: repeated calls are bit-identical") {
  const std::vector<std::size_t> dims = {5, 8, 8, 3};
  const Mlp net = Mlp::make(dims, Activation::kIdentity, 11);
  std::mt19937_64 gen(1);
  const Matrix x = random_matrix(7, 5, gen);
  CHECK(forward(net, x).output() == forward(net, x).output());
}

TEST_CASE("forward: dimension mismatch names the layer") {
  const std::vector<std::size_t> dims = {3, 4, 2};
  const Mlp net = Mlp::make(dims, Activation::kIdentity, 0);
  try {
    forward(net, Matrix(1, 5));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("backward: zero output gradient gives zero gradients") {
  const std::vector<std::size_t> dims = {3, 5, 2};
  const Mlp net = Mlp::make(dims, Activation::kIdentity, 2);
  std::mt19937_64 gen(2);
  const Matrix x = random_matrix(4, 3, gen);
  const auto trace = forward(net, x);
  const auto res = backward(net, trace, Matrix(4, 2));
  for (auto g : gradient_spans(res.params))
    for (double v : g) CHECK(v == 0.0);
  for (double v : res.input_grad.data()) CHECK(v == 0.0);
}

TEST_CASE("backward: linear layer gradients are g^T x and g") {
  const Matrix w = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const Mlp net = single_layer(w, {0.1, 0.2, 0.3}, Activation::kIdentity);
  const Matrix x = Matrix::from_rows({{0.5, -1.0}});
  const Matrix g = Matrix::from_rows({{1.0, -2.0, 0.25}});
  const auto res = backward(net, forward(net, x), g);
  const auto& lg = res.params.layers[0];
  for (std::size_t o = 0; o < 3; ++o) {
    CHECK(lg.bias[o] == g(0, o));
    for (std::size_t i = 0; i < 2; ++i) CHECK(lg.weights(o, i) == g(0, o) * x(0, i));
  }
  // input gradient W^T g
  CHECK(res.input_grad(0, 0) == doctest::Approx(1 * 1.0 + 3 * -2.0 + 5 * 0.25));
  CHECK(res.input_grad(0, 1) == doctest::Approx(2 * 1.0 + 4 * -2.0 + 6 * 0.25));
}

TEST_CASE("backward: shape mismatch is rejected") {
  const std::vector<std::size_t> dims = {3, 2};
  const Mlp net = Mlp::make(dims, Activation::kIdentity, 0);
  const auto trace = forward(net, Matrix(2, 3, 1.0));
  CHECK_THROWS_AS(backward(net, trace, Matrix(2, 3)), ShapeError);
}

TEST_CASE("backward matches central differences on 100 random nets") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<std::size_t> layers_d(1, 3);
  std::uniform_int_distribution<std::size_t> width_d(1, 32);
  std::uniform_int_distribution<std::size_t> batch_d(1, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nl = layers_d(gen);
    std::vector<std::size_t> dims = {width_d(gen)};
    for (std::size_t l = 0; l < nl; ++l) dims.push_back(width_d(gen));
    const auto out_act = trial % 2 == 0 ? Activation::kIdentity : Activation::kReLU;
    Mlp net = Mlp::make(dims, out_act, gen());
    // Non-zero biases keep ReLU units away from exact zeros.
    for (auto& layer : net.mutable_layers())
      for (double& b : layer.bias) b = std::normal_distribution<double>(0.1, 0.3)(gen);
    const Matrix x = random_matrix(batch_d(gen), dims.front(), gen);
    const Matrix wsum = random_matrix(x.rows(), dims.back(), gen);

    const auto res = backward(net, forward(net, x), wsum);
    auto grads = gradient_spans(res.params);
    auto params = parameter_spans(net);
    for (std::size_t b = 0; b < params.size(); ++b) {
      const auto fd = oracle::central_difference(
          params[b], [&] { return weighted_sum(oracle::forward(net, x), wsum); }, 1e-5);
      worst = std::max(worst, oracle::max_relative_error(grads[b], fd));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("sgd: plain step subtracts the gradient") {
  std::vector<double> p = {1.0, -2.0};
  const std::vector<double> g = {0.25, -0.5};
  std::vector<std::span<double>> ps = {p};
  std::vector<std::span<const double>> gs = {g};
  SgdState state;
  SgdConfig cfg{1.0, 0.0, 0.0, 1, 1, 0};
  sgd_step(ps, gs, state, cfg);
  CHECK(p[0] == 0.75);
  CHECK(p[1] == -1.5);
}

TEST_CASE("sgd: second momentum step moves by lr * 1.9 * g") {
  std::vector<double> p = {0.0};
  const std::vector<double> g = {1.0};
  std::vector<std::span<double>> ps = {p};
  std::vector<std::span<const double>> gs = {g};
  SgdState state;
  SgdConfig cfg{0.1, 0.9, 0.0, 1, 1, 0};
  sgd_step(ps, gs, state, cfg);
  const double after_first = p[0];
  sgd_step(ps, gs, state, cfg);
  CHECK(after_first - p[0] == doctest::Approx(0.1 * 1.9).epsilon(1e-14));
}

TEST_CASE("sgd: pure weight decay") {
  std::vector<double> p = {1.0};
  const std::vector<double> g = {0.0};
  std::vector<std::span<double>> ps = {p};
  std::vector<std::span<const double>> gs = {g};
  SgdState state;
  SgdConfig cfg{1.0, 0.0, 0.1, 1, 1, 0};
  sgd_step(ps, gs, state, cfg);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("sgd: zero gradient without decay leaves the net unchanged") {
  const std::vector<std::size_t> dims = {4, 6, 2};
  Mlp net = Mlp::make(dims, Activation::kIdentity, 5);
  const Mlp before = net;
  SgdState state;
  SgdConfig cfg{0.5, 0.9, 0.0, 1, 1, 0};
  for (int i = 0; i < 3; ++i) sgd_step(net, zero_gradients(net), state, cfg);
  CHECK(net == before);
}

TEST_CASE("sgd: non-finite gradient aborts before any update") {
  std::vector<double> p = {1.0, 2.0};
  std::vector<double> q = {3.0};
  const std::vector<double> g1 = {0.5, 0.5};
  const std::vector<double> g2 = {std::nan("")};
  std::vector<std::span<double>> ps = {p, q};
  std::vector<std::span<const double>> gs = {g1, g2};
  SgdState state;
  SgdConfig cfg{1.0, 0.0, 0.0, 1, 1, 0};
  CHECK_THROWS_AS(sgd_step(ps, gs, state, cfg), NumericError);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 2.0);
  CHECK(q[0] == 3.0);
}

TEST_CASE("softmax cross-entropy examples") {
  const std::vector<std::size_t> zero = {0};
  auto r = softmax_cross_entropy(Matrix::from_rows({{0, 0}}), zero);
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  r = softmax_cross_entropy(Matrix::from_rows({{1000, 0}}), zero);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss == doctest::Approx(0.0));
  CHECK(all_finite(r.grad.data()));

  const std::vector<std::size_t> bad = {2};
  CHECK_THROWS_AS(softmax_cross_entropy(Matrix::from_rows({{0, 0}}), bad), InputError);
}

TEST_CASE("softmax cross-entropy equals ln K for equal logits and is non-negative") {
  const std::vector<std::size_t> lab = {3};
  const auto r = softmax_cross_entropy(Matrix(1, 7, 2.5), lab);
  CHECK(r.loss == doctest::Approx(std::log(7.0)).epsilon(1e-15));
  std::mt19937_64 gen(8);
  for (int t = 0; t < 100; ++t) {
    const Matrix logits = random_matrix(3, 4, gen, 5.0);
    const std::vector<std::size_t> labels = {0, 1, 3};
    CHECK(softmax_cross_entropy(logits, labels).loss >= 0.0);
  }
}

TEST_CASE("softmax cross-entropy gradient matches central differences") {
  std::mt19937_64 gen(9);
  for (int t = 0; t < 20; ++t) {
    Matrix logits = random_matrix(5, 4, gen, 2.0);
    const std::vector<std::size_t> labels = {0, 3, 2, 1, 1};
    const auto r = softmax_cross_entropy(logits, labels);
    const auto fd = oracle::central_difference(
        logits.data(), [&] { return softmax_cross_entropy(logits, labels).loss; }, 1e-5);
    CHECK(oracle::max_relative_error(r.grad.data(), fd) <= 1e-6);
  }
}

TEST_CASE("he_init: determinism, bound and mean") {
  CHECK(he_init(4, 6, 42) == he_init(4, 6, 42));
  CHECK(he_init(4, 6, 42) != he_init(4, 6, 43));
  const Matrix small = he_init(50, 6, 1);
  for (double v : small.data()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  const std::size_t fan_in = 10;
  const Matrix big = he_init(10000, fan_in, 7);
  double mean = 0.0;
  for (double v : big.data()) mean += v;
  mean /= static_cast<double>(big.size());
  const double bound = std::sqrt(6.0 / fan_in);
  const double sigma = bound / std::sqrt(3.0);
  CHECK(std::abs(mean) < 3.0 * sigma / std::sqrt(static_cast<double>(big.size())));
}

TEST_CASE("derived seeds differ across streams") {
  CHECK(derive_seed(1, streams::kInit) != derive_seed(1, streams::kShuffle));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}
