#include "quanta/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "quanta/rng.hpp"

namespace quanta::mlp {

std::int64_t param_count(int input_dim, int width) {
  return static_cast<std::int64_t>(input_dim) * width + width + 2 * width + 2;
}

MlpModel::MlpModel(int input_dim, int width)
    : input_dim_(input_dim), width_(width) {
  if (input_dim < 1 || width < 1)
    throw std::invalid_argument("input_dim and width must be >= 1");
  theta_ = Eigen::VectorXd::Zero(mlp::param_count(input_dim, width));
}

namespace {
struct Offsets {
  std::int64_t w1, b1, w2, b2;
};
Offsets offsets(int input_dim, int width) {
  const std::int64_t w1 = 0;
  const std::int64_t b1 = w1 + static_cast<std::int64_t>(input_dim) * width;
  const std::int64_t w2 = b1 + width;
  const std::int64_t b2 = w2 + 2 * static_cast<std::int64_t>(width);
  return {w1, b1, w2, b2};
}
}  // namespace

Eigen::Map<Eigen::MatrixXd> MlpModel::w1() {
  return {theta_.data() + offsets(input_dim_, width_).w1, width_, input_dim_};
}
Eigen::Map<const Eigen::MatrixXd> MlpModel::w1() const {
  return {theta_.data() + offsets(input_dim_, width_).w1, width_, input_dim_};
}
Eigen::Map<Eigen::VectorXd> MlpModel::b1() {
  return {theta_.data() + offsets(input_dim_, width_).b1, width_};
}
Eigen::Map<const Eigen::VectorXd> MlpModel::b1() const {
  return {theta_.data() + offsets(input_dim_, width_).b1, width_};
}
Eigen::Map<Eigen::MatrixXd> MlpModel::w2() {
  return {theta_.data() + offsets(input_dim_, width_).w2, 2, width_};
}
Eigen::Map<const Eigen::MatrixXd> MlpModel::w2() const {
  return {theta_.data() + offsets(input_dim_, width_).w2, 2, width_};
}
Eigen::Map<Eigen::VectorXd> MlpModel::b2() {
  return {theta_.data() + offsets(input_dim_, width_).b2, 2};
}
Eigen::Map<const Eigen::VectorXd> MlpModel::b2() const {
  return {theta_.data() + offsets(input_dim_, width_).b2, 2};
}

void MlpModel::zero_output_layer() {
  w2().setZero();
  b2().setZero();
}

MlpModel init_model(int input_dim, int width, std::uint64_t seed) {
  MlpModel model(input_dim, width);
  const double bound1 = std::sqrt(6.0 / input_dim);
  const double bound2 = std::sqrt(6.0 / width);
  RngStream rng1(seed, 0);
  auto w1 = model.w1();
  for (Eigen::Index j = 0; j < w1.cols(); ++j)
    for (Eigen::Index i = 0; i < w1.rows(); ++i)
      w1(i, j) = (2.0 * rng1.next_double() - 1.0) * bound1;
  RngStream rng2(seed, 1);
  auto w2 = model.w2();
  for (Eigen::Index j = 0; j < w2.cols(); ++j)
    for (Eigen::Index i = 0; i < w2.rows(); ++i)
      w2(i, j) = (2.0 * rng2.next_double() - 1.0) * bound2;
  return model;
}

namespace {

void check_shapes(const MlpModel& model, const Eigen::MatrixXd& x,
                  std::span<const std::uint8_t> labels) {
  if (x.cols() != model.input_dim())
    throw std::invalid_argument("input width does not match model input_dim");
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw std::invalid_argument("label count does not match batch rows");
  if (x.rows() < 1) throw std::invalid_argument("empty batch");
}

// Per-sample loss from a 2 x m logit matrix: logsumexp(l) - l[label].
double sample_loss(double l0, double l1, std::uint8_t y) {
  const double mx = l0 > l1 ? l0 : l1;
  const double lse = mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx));
  return lse - (y == 0 ? l0 : l1);
}

}  // namespace

ForwardResult forward_loss(const MlpModel& model, const Eigen::MatrixXd& x,
                           std::span<const std::uint8_t> labels) {
  check_shapes(model, x, labels);
  const Eigen::Index m = x.rows();
  Eigen::MatrixXd hidden = (model.w1() * x.transpose()).colwise() + model.b1();
  hidden = hidden.cwiseMax(0.0);
  const Eigen::MatrixXd logits = (model.w2() * hidden).colwise() + model.b2();

  ForwardResult result;
  result.per_sample.resize(m);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double loss = sample_loss(logits(0, i), logits(1, i), labels[i]);
    result.per_sample[i] = loss;
    total += loss;
  }
  result.mean_loss = total / static_cast<double>(m);
  return result;
}

GradVector backward(const MlpModel& model, const Eigen::MatrixXd& x,
                    std::span<const std::uint8_t> labels, double* mean_loss) {
  check_shapes(model, x, labels);
  const Eigen::Index m = x.rows();

  Eigen::MatrixXd pre = (model.w1() * x.transpose()).colwise() + model.b1();
  const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
  const Eigen::MatrixXd logits = (model.w2() * hidden).colwise() + model.b2();

  // dL/dlogits = softmax - onehot, scaled by 1/m for the mean.
  Eigen::MatrixXd dlogits(2, m);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double l0 = logits(0, i), l1 = logits(1, i);
    const double mx = l0 > l1 ? l0 : l1;
    const double e0 = std::exp(l0 - mx), e1 = std::exp(l1 - mx);
    const double z = e0 + e1;
    dlogits(0, i) = e0 / z;
    dlogits(1, i) = e1 / z;
    dlogits(labels[i], i) -= 1.0;
    total += sample_loss(l0, l1, labels[i]);
  }
  dlogits /= static_cast<double>(m);
  if (mean_loss) *mean_loss = total / static_cast<double>(m);

  GradVector grad(model.param_count());
  const int width = model.width();
  const int input_dim = model.input_dim();
  Eigen::Map<Eigen::MatrixXd> g_w1(grad.data(), width, input_dim);
  Eigen::Map<Eigen::VectorXd> g_b1(grad.data() + static_cast<std::int64_t>(width) * input_dim, width);
  Eigen::Map<Eigen::MatrixXd> g_w2(
      grad.data() + static_cast<std::int64_t>(width) * input_dim + width, 2, width);
  Eigen::Map<Eigen::VectorXd> g_b2(
      grad.data() + static_cast<std::int64_t>(width) * input_dim + width + 2 * width, 2);

  g_w2.noalias() = dlogits * hidden.transpose();
  g_b2 = dlogits.rowwise().sum();
  Eigen::MatrixXd dhidden = model.w2().transpose() * dlogits;
  // ReLU mask: strictly positive preactivations pass gradient.
  dhidden = (pre.array() > 0.0).select(dhidden, 0.0);
  g_w1.noalias() = dhidden * x;
  g_b1 = dhidden.rowwise().sum();
  return grad;
}

void per_sample_grad(const MlpModel& model, const Eigen::VectorXd& x,
                     std::uint8_t label, std::span<double> out) {
  if (x.size() != model.input_dim())
    throw std::invalid_argument("input width does not match model input_dim");
  if (out.size() != static_cast<std::size_t>(model.param_count()))
    throw std::invalid_argument("gradient buffer size mismatch");

  const int width = model.width();
  const int input_dim = model.input_dim();
  const Eigen::VectorXd pre = model.w1() * x + model.b1();
  const Eigen::VectorXd hidden = pre.cwiseMax(0.0);
  const Eigen::Vector2d logits = model.w2() * hidden + model.b2();

  const double mx = logits.maxCoeff();
  const Eigen::Vector2d exps = (logits.array() - mx).exp();
  Eigen::Vector2d dlogits = exps / exps.sum();
  dlogits[label] -= 1.0;

  Eigen::Map<Eigen::MatrixXd> g_w1(out.data(), width, input_dim);
  Eigen::Map<Eigen::VectorXd> g_b1(out.data() + static_cast<std::int64_t>(width) * input_dim, width);
  Eigen::Map<Eigen::MatrixXd> g_w2(
      out.data() + static_cast<std::int64_t>(width) * input_dim + width, 2, width);
  Eigen::Map<Eigen::VectorXd> g_b2(
      out.data() + static_cast<std::int64_t>(width) * input_dim + width + 2 * width, 2);

  g_w2.noalias() = dlogits * hidden.transpose();
  g_b2 = dlogits;
  Eigen::VectorXd dhidden = model.w2().transpose() * dlogits;
  for (int i = 0; i < width; ++i) {
    if (pre[i] <= 0.0) dhidden[i] = 0.0;
  }
  g_w1.noalias() = dhidden * x.transpose();
  g_b1 = dhidden;
}

AdamState::AdamState(std::int64_t n_params, double lr, double beta1,
                     double beta2, double epsilon)
    : first_moment(Eigen::VectorXd::Zero(n_params)),
      second_moment(Eigen::VectorXd::Zero(n_params)),
      lr(lr),
      beta1(beta1),
      beta2(beta2),
      epsilon(epsilon) {}

void adam_step(MlpModel& model, AdamState& state, const GradVector& grad) {
  if (grad.size() != model.param_count() ||
      state.first_moment.size() != grad.size())
    throw std::invalid_argument("gradient/state size mismatch");
  if (!grad.allFinite())
    throw std::runtime_error("nonfinite gradient: update rejected");

  ++state.t;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment =
      state.beta2 * state.second_moment +
      (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  model.params().array() -=
      state.lr * (state.first_moment.array() / bc1) /
      ((state.second_moment.array() / bc2).sqrt() + state.epsilon);
}

}  // namespace quanta::mlp
