#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

namespace quanta::mlp {

std::int64_t param_count(int input_dim, int width);

// Single-hidden-layer ReLU classifier with two output logits. Parameters
// live in one flat vector in checkpoint order [W1 | b1 | W2 | b2]; the maps
// below view segments of it. W1 is width x input_dim, W2 is 2 x width, both
// column-major.
class MlpModel {
 public:
  MlpModel(int input_dim, int width);

  int input_dim() const { return input_dim_; }
  int width() const { return width_; }
  std::int64_t param_count() const { return theta_.size(); }

  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }

  Eigen::Map<Eigen::MatrixXd> w1();
  Eigen::Map<const Eigen::MatrixXd> w1() const;
  Eigen::Map<Eigen::VectorXd> b1();
  Eigen::Map<const Eigen::VectorXd> b1() const;
  Eigen::Map<Eigen::MatrixXd> w2();
  Eigen::Map<const Eigen::MatrixXd> w2() const;
  Eigen::Map<Eigen::VectorXd> b2();
  Eigen::Map<const Eigen::VectorXd> b2() const;

  void zero_output_layer();  // W2 and b2 to zero (uniform-logit start)

 private:
  int input_dim_;
  int width_;
  Eigen::VectorXd theta_;
};

// Kaiming-style uniform init on [-sqrt(6/fan_in), sqrt(6/fan_in)] for the
// weight matrices, zero biases. Deterministic per seed.
MlpModel init_model(int input_dim, int width, std::uint64_t seed);

// Gradient of the mean (or a single sample's) cross-entropy, flattened with
// the same layout as MlpModel::params().
using GradVector = Eigen::VectorXd;

struct ForwardResult {
  double mean_loss = 0.0;          // nats
  Eigen::VectorXd per_sample;      // nats, one per row of x
};

// x: one sample per row (m x input_dim); labels in {0, 1}.
ForwardResult forward_loss(const MlpModel& model, const Eigen::MatrixXd& x,
                           std::span<const std::uint8_t> labels);

// Mean-loss gradient over the batch; exact backprop with a fixed
// accumulation order. Optionally reports the mean loss of the same pass.
GradVector backward(const MlpModel& model, const Eigen::MatrixXd& x,
                    std::span<const std::uint8_t> labels,
                    double* mean_loss = nullptr);

// Gradient of one sample's loss w.r.t. every parameter, written to `out`
// (size param_count).
void per_sample_grad(const MlpModel& model, const Eigen::VectorXd& x,
                     std::uint8_t label, std::span<double> out);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::int64_t n_params, double lr = 1e-3,
                     double beta1 = 0.9, double beta2 = 0.999,
                     double epsilon = 1e-8);
};

// Standard bias-corrected Adam update. Rejects nonfinite gradients.
void adam_step(MlpModel& model, AdamState& state, const GradVector& grad);

}  // namespace quanta::mlp
