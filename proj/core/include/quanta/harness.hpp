#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quanta/mlp.hpp"
#include "quanta/parity.hpp"
#include "quanta/stats.hpp"

namespace quanta::harness {

enum class Axis { Params, Data, Steps };
enum class LossUnit { Bits, Nats };

inline constexpr double kLn2 = 0.6931471805599453094;

struct SweepConfig {
  // task
  std::uint32_t n_tasks = 100;
  std::uint32_t n = 50;
  std::uint32_t k = 3;
  double alpha = 0.4;

  Axis axis = Axis::Params;
  std::vector<int> widths = {10, 20, 50, 100, 200};
  std::vector<std::uint64_t> dataset_sizes = {};  // Data axis
  int data_width = 200;  // width used when the axis is Data or Steps

  std::uint64_t batch_size = 4096;
  std::int64_t total_steps = 30000;
  std::int64_t eval_every = 250;
  std::uint32_t eval_per_task = 200;
  std::vector<std::uint64_t> seeds = {0};
  LossUnit loss_unit = LossUnit::Bits;

  // Output layer starts at zero so the first checkpoint sits at the uniform
  // predictor (ln 2 nats); recorded in the manifest.
  bool zero_output_init = true;
  bool include_post_early_stop = true;
  double convergence_threshold_bits = 0.1;

  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  int threads = 1;

  void validate() const;
};

// Desk-scale defaults above; the paper-scale profile is opt-in.
SweepConfig paper_profile(Axis axis);
SweepConfig desk_profile(Axis axis);

// One training run at one scale point.
struct RunResult {
  double scale = 0.0;       // parameter count (Params/Steps) or D (Data)
  int width = 0;
  std::uint64_t dataset_size = 0;  // 0 for online training
  std::uint64_t seed = 0;
  bool diverged = false;

  std::vector<std::int64_t> checkpoint_steps;
  std::vector<double> checkpoint_mean_nats;
  // checkpoint_subtask_nats[c][i]: subtask i+1 loss at checkpoint c.
  std::vector<std::vector<double>> checkpoint_subtask_nats;

  std::int64_t early_stop_step = 0;
  std::size_t early_stop_index = 0;

  const std::vector<double>& final_subtask_nats() const {
    return checkpoint_subtask_nats.back();
  }
  const std::vector<double>& early_stop_subtask_nats() const {
    return checkpoint_subtask_nats[early_stop_index];
  }
  double final_mean_nats() const { return checkpoint_mean_nats.back(); }
  double early_stop_mean_nats() const {
    return checkpoint_mean_nats[early_stop_index];
  }
};

struct SubtaskCurve {
  std::uint32_t subtask_id = 0;  // 1-based rank
  double frequency = 0.0;
  std::vector<std::pair<double, double>> losses;  // (scale coordinate, nats)
};

struct SweepRecord {
  SweepConfig config;
  std::string config_hash;          // content hash of the canonical config
  std::vector<double> frequencies;  // Zipf pmf over subtasks
  std::vector<RunResult> runs;      // ordered by (scale, seed)

  // Per-subtask loss against the sweep's scale coordinate (final checkpoint,
  // averaged over seeds).
  std::vector<SubtaskCurve> subtask_curves() const;
};

SweepRecord run_param_sweep(const SweepConfig& config);
SweepRecord run_data_sweep(const SweepConfig& config);

// One training run through the exact sweep code path, returning the final
// model (for checkpointing or gradient analysis). dataset_size = 0 trains
// online; otherwise a fixed multi-epoch training set of that size is used.
struct TrainedRun {
  RunResult result;
  mlp::MlpModel model;
  std::vector<double> frequencies;
};
TrainedRun train_single(const SweepConfig& config, int width,
                        std::uint64_t dataset_size, std::uint64_t seed);

// Single-run series of (step, loss): scaling in training time from the
// checkpoints of one single-epoch run.
struct StepSeries {
  std::vector<std::int64_t> steps;
  std::vector<double> mean_nats;
  std::vector<SubtaskCurve> subtasks;  // scale coordinate = step
};

StepSeries track_step_scaling(const RunResult& run, const SweepRecord& record);

// First checkpoint at which the curve dips below the threshold.
std::optional<std::int64_t> subtask_convergence_step(const SubtaskCurve& curve,
                                                     double threshold_bits = 0.1);

// Learned-subtask counts per scale point. On the Data axis with
// include_post_early_stop set, a subtask counts if it crossed the threshold
// at any checkpoint; otherwise the early-stopped (Data) or final (Params)
// losses are used.
std::vector<int> count_learned_subtasks(const SweepRecord& record,
                                        double threshold_bits = 0.1);

// Number of scale intervals whose loss drop exceeds drop_threshold times the
// total drop: 0 = flat, 1 = step-like (monogenic), >= 2 = gradual (polygenic).
int polygenicity_score(std::span<const double> scales,
                       std::span<const double> losses,
                       double drop_threshold = 0.2);

// Mean-loss power-law fit over scale points: diverged runs are excluded, as
// are leading points still within 2% of the untrained baseline (ln 2).
struct ScalingFit {
  stats::PowerLawFit fit;
  std::vector<double> scales;  // points actually fitted
  std::vector<double> losses;  // nats
};
ScalingFit fit_mean_scaling(const SweepRecord& record);

// Re-exported fit/histogram machinery (shared with the analysis module).
using stats::fit_power_law;
using stats::loss_histogram;
using stats::PowerLawFit;

}  // namespace quanta::harness
