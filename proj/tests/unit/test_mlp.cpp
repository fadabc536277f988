#include <doctest.h>

#include <cmath>
#include <vector>

#include "quanta/mlp.hpp"
#include "quanta/rng.hpp"

using namespace quanta::mlp;

namespace {

// Naive scalar-loop forward pass, independent of the Eigen path.
double naive_loss(const MlpModel& model, const std::vector<double>& x,
                  std::uint8_t label) {
  const int width = model.width();
  const int input_dim = model.input_dim();
  std::vector<double> hidden(width);
  for (int i = 0; i < width; ++i) {
    double acc = model.b1()[i];
    for (int j = 0; j < input_dim; ++j) acc += model.w1()(i, j) * x[j];
    hidden[i] = acc > 0.0 ? acc : 0.0;
  }
  double logits[2];
  for (int o = 0; o < 2; ++o) {
    double acc = model.b2()[o];
    for (int i = 0; i < width; ++i) acc += model.w2()(o, i) * hidden[i];
    logits[o] = acc;
  }
  const double mx = std::max(logits[0], logits[1]);
  const double lse =
      mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
  return lse - logits[label];
}

Eigen::MatrixXd random_inputs(int rows, int cols, std::uint64_t seed) {
  quanta::RngStream rng(seed, 0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      x(i, j) = rng.next_double() < 0.5 ? 0.0 : 1.0;
  return x;
}

std::vector<std::uint8_t> random_labels(int rows, std::uint64_t seed) {
  quanta::RngStream rng(seed, 1);
  std::vector<std::uint8_t> y(rows);
  for (auto& l : y) l = rng.next_below(2);
  return y;
}

}  // namespace

TEST_CASE("param_count arithmetic") {
  CHECK(param_count(600, 10) == 6032);
  CHECK(param_count(600, 500) == 301502);
  CHECK(param_count(123, 1) == 123 + 5);
}

TEST_CASE("init_model determinism and moments") {
  const auto a = init_model(100, 500, 7);
  const auto b = init_model(100, 500, 7);
  CHECK(a.params() == b.params());
  const auto c = init_model(100, 500, 8);
  CHECK(a.params() != c.params());

  CHECK(a.b1().cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.b2().cwiseAbs().maxCoeff() == 0.0);

  // Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) has variance 2/fan_in.
  const auto w1 = a.w1();
  const double mean = w1.mean();
  const double var = (w1.array() - mean).square().mean();
  const double want = 2.0 / 100.0;
  CHECK(std::fabs(var - want) / want < 0.10);
  const double bound = std::sqrt(6.0 / 100.0);
  CHECK(w1.cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("forward_loss with zeroed output layer is exactly ln 2") {
  auto model = init_model(20, 16, 1);
  model.zero_output_layer();
  const auto x = random_inputs(9, 20, 2);
  const auto y = random_labels(9, 2);
  const auto fwd = forward_loss(model, x, y);
  for (Eigen::Index i = 0; i < fwd.per_sample.size(); ++i)
    CHECK(fwd.per_sample[i] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(fwd.mean_loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("forward_loss equals the naive scalar loop") {
  const auto model = init_model(12, 9, 3);
  const auto x = random_inputs(3, 12, 4);
  const auto y = random_labels(3, 4);
  const auto fwd = forward_loss(model, x, y);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> row(12);
    for (int j = 0; j < 12; ++j) row[j] = x(i, j);
    CHECK(fwd.per_sample[i] ==
          doctest::Approx(naive_loss(model, row, y[i])).epsilon(1e-12));
  }
}

TEST_CASE("duplicated samples get identical losses") {
  const auto model = init_model(10, 8, 5);
  Eigen::MatrixXd x = random_inputs(2, 10, 6);
  x.row(1) = x.row(0);
  const std::vector<std::uint8_t> y = {1, 1};
  const auto fwd = forward_loss(model, x, y);
  CHECK(fwd.per_sample[0] == fwd.per_sample[1]);
}

TEST_CASE("forward_loss rejects shape mismatches") {
  const auto model = init_model(10, 8, 5);
  const auto x = random_inputs(4, 11, 6);
  const auto y = random_labels(4, 6);
  CHECK_THROWS_AS(forward_loss(model, x, y), std::invalid_argument);
}

TEST_CASE("backward matches central finite differences") {
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    auto model = init_model(14, 11, 100 + trial);
    const auto x = random_inputs(6, 14, 200 + trial);
    const auto y = random_labels(6, 200 + trial);
    const auto grad = backward(model, x, y);

    quanta::RngStream pick(300 + trial, 0);
    double max_rel = 0.0;
    const double h = 1e-5;
    for (int c = 0; c < 50; ++c) {
      const auto idx = static_cast<Eigen::Index>(
          pick.next_below(static_cast<std::uint64_t>(model.param_count())));
      const double orig = model.params()[idx];
      model.params()[idx] = orig + h;
      const double lp = forward_loss(model, x, y).mean_loss;
      model.params()[idx] = orig - h;
      const double lm = forward_loss(model, x, y).mean_loss;
      model.params()[idx] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double denom = std::max(std::fabs(fd), 1e-8);
      max_rel = std::max(max_rel, std::fabs(grad[idx] - fd) / denom);
    }
    CHECK(max_rel < 1e-4);
  }
}

TEST_CASE("output-bias gradient respects the softmax identity") {
  const auto model = init_model(10, 7, 9);
  const auto x = random_inputs(5, 10, 9);
  const auto y = random_labels(5, 9);
  const auto grad = backward(model, x, y);
  const auto b2_offset = model.param_count() - 2;
  CHECK(std::fabs(grad[b2_offset] + grad[b2_offset + 1]) < 1e-12);
}

TEST_CASE("per-sample gradients average to the batch gradient") {
  const auto model = init_model(13, 10, 11);
  const int m = 7;
  const auto x = random_inputs(m, 13, 12);
  const auto y = random_labels(m, 12);
  const auto batch_grad = backward(model, x, y);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.param_count());
  Eigen::VectorXd one(model.param_count());
  for (int i = 0; i < m; ++i) {
    per_sample_grad(model, x.row(i).transpose(), y[i],
                    {one.data(), static_cast<std::size_t>(one.size())});
    mean += one;
  }
  mean /= m;
  CHECK((mean - batch_grad).cwiseAbs().maxCoeff() < 1e-10);

  // A single-sample batch is identical to the per-sample gradient.
  const auto single = backward(model, x.topRows(1), {y.data(), 1});
  per_sample_grad(model, x.row(0).transpose(), y[0],
                  {one.data(), static_cast<std::size_t>(one.size())});
  CHECK((single - one).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dead ReLU inputs zero the first-layer gradient") {
  auto model = init_model(6, 4, 13);
  model.b1().setConstant(-100.0);  // all preactivations negative on {0,1} inputs
  const auto x = random_inputs(3, 6, 13);
  const auto y = random_labels(3, 13);
  const auto grad = backward(model, x, y);
  const auto w1_b1 = static_cast<Eigen::Index>(6 * 4 + 4);
  CHECK(grad.head(w1_b1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam_step behavior") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto model = init_model(5, 4, 14);
    const Eigen::VectorXd before = model.params();
    AdamState state(model.param_count());
    adam_step(model, state, Eigen::VectorXd::Zero(model.param_count()));
    CHECK(model.params() == before);
    CHECK(state.t == 1);
  }

  SUBCASE("first step moves by lr * sign(grad)") {
    auto model = init_model(5, 4, 15);
    const Eigen::VectorXd before = model.params();
    AdamState state(model.param_count());
    Eigen::VectorXd grad(model.param_count());
    quanta::RngStream rng(16, 0);
    for (Eigen::Index i = 0; i < grad.size(); ++i)
      grad[i] = rng.next_double() < 0.5 ? -0.7 : 1.3;
    adam_step(model, state, grad);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      const double move = model.params()[i] - before[i];
      CHECK(move == doctest::Approx(-state.lr * (grad[i] > 0 ? 1.0 : -1.0))
                        .epsilon(1e-6));
    }
  }

  SUBCASE("nonfinite gradients are rejected") {
    auto model = init_model(5, 4, 17);
    AdamState state(model.param_count());
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.param_count());
    grad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(model, state, grad), std::runtime_error);
  }

  SUBCASE("converges on a two-parameter quadratic") {
    // f(theta) = 0.5 |theta|^2 with only two live coordinates; grad = theta.
    MlpModel model(1, 1);
    model.params().setZero();
    model.params()[0] = 1.0;
    model.params()[1] = 1.0;
    AdamState state(model.param_count(), /*lr=*/0.05);
    for (int step = 0; step < 100; ++step) {
      adam_step(model, state, model.params());
    }
    const double loss = 0.5 * model.params().squaredNorm();
    CHECK(loss < 1e-4);
  }
}
