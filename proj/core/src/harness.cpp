#include "quanta/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "quanta/parallel.hpp"
#include "quanta/rng.hpp"
#include "quanta/theory.hpp"

namespace quanta::harness {

void SweepConfig::validate() const {
  if (n_tasks < 1 || n < 1 || k < 1 || k > n)
    throw std::invalid_argument("invalid task shape");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (total_steps < 1 || eval_every < 1 || total_steps % eval_every != 0)
    throw std::invalid_argument("eval_every must divide total_steps");
  if (eval_per_task < 1) throw std::invalid_argument("eval_per_task must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("need at least one seed");
  if (axis == Axis::Params && widths.empty())
    throw std::invalid_argument("Params axis needs a nonempty width list");
  if (axis == Axis::Data && dataset_sizes.empty())
    throw std::invalid_argument("Data axis needs a nonempty dataset size list");
  if ((axis == Axis::Data || axis == Axis::Steps) && data_width < 1)
    throw std::invalid_argument("data_width must be >= 1");
  if (!(convergence_threshold_bits > 0.0))
    throw std::invalid_argument("convergence threshold must be positive");
}

SweepConfig desk_profile(Axis axis) {
  SweepConfig cfg;
  cfg.axis = axis;
  if (axis == Axis::Data) {
    cfg.dataset_sizes = {10000, 31623, 100000, 316228, 1000000};
  }
  return cfg;
}

SweepConfig paper_profile(Axis axis) {
  SweepConfig cfg;
  cfg.axis = axis;
  cfg.n_tasks = 500;
  cfg.n = 100;
  cfg.k = 3;
  cfg.alpha = 0.4;
  cfg.batch_size = 20000;
  cfg.total_steps = 200000;
  cfg.eval_every = 1000;
  cfg.widths = {10, 20, 50, 100, 200, 500};
  cfg.data_width = 500;
  if (axis == Axis::Data) {
    cfg.dataset_sizes = {10000, 50000, 200000, 1000000, 5000000};
  }
  return cfg;
}

namespace {

std::vector<double> subtask_frequencies(const SweepConfig& cfg) {
  const auto dist = theory::QuantaDistribution::finite(cfg.alpha, cfg.n_tasks);
  std::vector<double> freq(cfg.n_tasks);
  for (std::uint32_t i = 0; i < cfg.n_tasks; ++i)
    freq[i] = theory::zipf_pmf(i + 1, dist);
  return freq;
}

// Stratified evaluation state reused across checkpoints of one run.
struct Evaluator {
  Eigen::MatrixXd x;                    // dense eval inputs
  std::vector<std::uint8_t> labels;
  std::uint32_t n_tasks = 0;
  std::uint32_t per_task = 0;
  const std::vector<double>* frequencies = nullptr;

  // Returns per-subtask mean losses (nats); mean is their p-weighted sum.
  std::vector<double> subtask_losses(const mlp::MlpModel& model) const {
    const auto fwd = mlp::forward_loss(model, x, labels);
    std::vector<double> out(n_tasks, 0.0);
    for (std::uint32_t t = 0; t < n_tasks; ++t) {
      double sum = 0.0;
      const std::size_t base = static_cast<std::size_t>(t) * per_task;
      for (std::uint32_t j = 0; j < per_task; ++j)
        sum += fwd.per_sample[static_cast<Eigen::Index>(base + j)];
      out[t] = sum / per_task;
    }
    return out;
  }

  double weighted_mean(const std::vector<double>& subtask_nats) const {
    double mean = 0.0;
    for (std::uint32_t t = 0; t < n_tasks; ++t)
      mean += (*frequencies)[t] * subtask_nats[t];
    return mean;
  }
};

struct RunPlan {
  int width = 0;
  std::uint64_t dataset_size = 0;  // 0: online sampling
  std::uint64_t seed = 0;
};

RunResult run_training(const SweepConfig& cfg, const parity::TaskSpec& spec,
                       const Evaluator& evaluator, const RunPlan& plan,
                       mlp::MlpModel* final_model = nullptr) {
  RunResult result;
  result.width = plan.width;
  result.dataset_size = plan.dataset_size;
  result.seed = plan.seed;
  result.scale = plan.dataset_size > 0
                     ? static_cast<double>(plan.dataset_size)
                     : static_cast<double>(
                           mlp::param_count(spec.input_dim(), plan.width));

  const std::uint64_t init_seed =
      derive_seed(plan.seed, "init", static_cast<std::uint64_t>(plan.width));
  mlp::MlpModel model = mlp::init_model(spec.input_dim(), plan.width, init_seed);
  if (cfg.zero_output_init) model.zero_output_layer();
  mlp::AdamState adam(model.param_count(), cfg.adam_lr, cfg.adam_beta1,
                      cfg.adam_beta2, cfg.adam_eps);

  const std::uint64_t data_seed = derive_seed(plan.seed, "data");

  // Multi-epoch state (Data axis): fixed training set + shuffled order.
  parity::SampleBatch train_set;
  std::vector<std::uint32_t> order;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  const bool online = plan.dataset_size == 0;
  std::uint64_t batch = cfg.batch_size;
  if (!online) {
    train_set = parity::draw_batch(spec, plan.dataset_size, data_seed);
    batch = std::min<std::uint64_t>(cfg.batch_size, plan.dataset_size);
    order.resize(plan.dataset_size);
    std::iota(order.begin(), order.end(), 0u);
  }

  auto reshuffle = [&](std::uint64_t epoch_idx) {
    RngStream rng(derive_seed(plan.seed, "shuffle"), epoch_idx);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
      std::swap(order[i], order[j]);
    }
  };
  if (!online) reshuffle(0);

  Eigen::MatrixXd x(batch, spec.input_dim());
  std::vector<std::uint8_t> y(batch);

  for (std::int64_t step = 1; step <= cfg.total_steps; ++step) {
    if (online) {
      const auto fresh = parity::draw_batch(
          spec, batch, data_seed,
          static_cast<std::uint64_t>(step - 1) * batch);
      x = parity::to_dense(fresh, 0, batch);
      std::copy(fresh.labels.begin(), fresh.labels.end(), y.begin());
    } else {
      std::vector<std::uint32_t> rows(batch);
      for (std::uint64_t i = 0; i < batch; ++i) {
        if (cursor == order.size()) {
          cursor = 0;
          reshuffle(++epoch);
        }
        rows[i] = order[cursor++];
        y[i] = train_set.labels[rows[i]];
      }
      parity::to_dense_into(train_set, rows, x);
    }

    double train_loss = 0.0;
    const auto grad = mlp::backward(model, x, y, &train_loss);
    if (!std::isfinite(train_loss) || !grad.allFinite()) {
      result.diverged = true;
      break;
    }
    mlp::adam_step(model, adam, grad);

    if (step % cfg.eval_every == 0) {
      auto subtask = evaluator.subtask_losses(model);
      result.checkpoint_steps.push_back(step);
      result.checkpoint_mean_nats.push_back(evaluator.weighted_mean(subtask));
      result.checkpoint_subtask_nats.push_back(std::move(subtask));
    }
  }

  if (result.checkpoint_steps.empty()) {
    // Diverged before the first checkpoint: record the failure state.
    auto subtask = evaluator.subtask_losses(model);
    result.checkpoint_steps.push_back(0);
    result.checkpoint_mean_nats.push_back(evaluator.weighted_mean(subtask));
    result.checkpoint_subtask_nats.push_back(std::move(subtask));
  }

  const auto best = std::min_element(result.checkpoint_mean_nats.begin(),
                                     result.checkpoint_mean_nats.end());
  result.early_stop_index =
      static_cast<std::size_t>(best - result.checkpoint_mean_nats.begin());
  result.early_stop_step = result.checkpoint_steps[result.early_stop_index];
  if (final_model) *final_model = std::move(model);
  return result;
}

Evaluator make_evaluator(const SweepConfig& cfg, const parity::TaskSpec& spec,
                         const std::vector<double>& frequencies,
                         std::uint64_t master) {
  const auto eval_set =
      parity::fixed_eval_set(spec, cfg.eval_per_task, derive_seed(master, "eval"));
  Evaluator evaluator;
  evaluator.x = parity::to_dense(eval_set, 0, eval_set.m);
  evaluator.labels = eval_set.labels;
  evaluator.n_tasks = cfg.n_tasks;
  evaluator.per_task = cfg.eval_per_task;
  evaluator.frequencies = &frequencies;
  return evaluator;
}

SweepRecord run_sweep(const SweepConfig& cfg, std::vector<RunPlan> plans) {
  SweepRecord record;
  record.config = cfg;
  record.frequencies = subtask_frequencies(cfg);

  const std::uint64_t master = cfg.seeds.front();
  const auto spec = parity::build_task_spec(cfg.n_tasks, cfg.n, cfg.k, cfg.alpha,
                                            derive_seed(master, "task"));
  const Evaluator evaluator =
      make_evaluator(cfg, spec, record.frequencies, master);

  record.runs.resize(plans.size());
  parallel_jobs(plans.size(), cfg.threads, [&](std::size_t i) {
    record.runs[i] = run_training(cfg, spec, evaluator, plans[i]);
  });
  return record;
}

}  // namespace

SweepRecord run_param_sweep(const SweepConfig& config) {
  config.validate();
  if (config.axis != Axis::Params)
    throw std::invalid_argument("run_param_sweep requires the Params axis");
  std::vector<RunPlan> plans;
  for (int width : config.widths)
    for (std::uint64_t seed : config.seeds) plans.push_back({width, 0, seed});
  return run_sweep(config, std::move(plans));
}

SweepRecord run_data_sweep(const SweepConfig& config) {
  config.validate();
  if (config.axis != Axis::Data)
    throw std::invalid_argument("run_data_sweep requires the Data axis");
  std::vector<RunPlan> plans;
  for (std::uint64_t d : config.dataset_sizes)
    for (std::uint64_t seed : config.seeds)
      plans.push_back({config.data_width, d, seed});
  return run_sweep(config, std::move(plans));
}

TrainedRun train_single(const SweepConfig& config, int width,
                        std::uint64_t dataset_size, std::uint64_t seed) {
  config.validate();
  TrainedRun out{RunResult{}, mlp::MlpModel(1, 1), {}};
  out.frequencies = subtask_frequencies(config);
  const auto spec =
      parity::build_task_spec(config.n_tasks, config.n, config.k, config.alpha,
                              derive_seed(config.seeds.front(), "task"));
  const Evaluator evaluator =
      make_evaluator(config, spec, out.frequencies, config.seeds.front());
  out.result = run_training(config, spec, evaluator,
                            RunPlan{width, dataset_size, seed}, &out.model);
  return out;
}

std::vector<SubtaskCurve> SweepRecord::subtask_curves() const {
  // Average final losses over seeds at each scale.
  std::map<double, std::pair<std::vector<double>, int>> by_scale;
  for (const auto& run : runs) {
    auto& [sum, count] = by_scale[run.scale];
    if (sum.empty()) sum.assign(config.n_tasks, 0.0);
    const auto& fin = run.final_subtask_nats();
    for (std::uint32_t t = 0; t < config.n_tasks; ++t) sum[t] += fin[t];
    ++count;
  }
  std::vector<SubtaskCurve> curves(config.n_tasks);
  for (std::uint32_t t = 0; t < config.n_tasks; ++t) {
    curves[t].subtask_id = t + 1;
    curves[t].frequency = frequencies[t];
    for (const auto& [scale, entry] : by_scale) {
      curves[t].losses.emplace_back(scale, entry.first[t] / entry.second);
    }
  }
  return curves;
}

StepSeries track_step_scaling(const RunResult& run, const SweepRecord& record) {
  if (run.checkpoint_steps.empty())
    throw std::invalid_argument("run has no checkpoints");
  StepSeries series;
  series.steps = run.checkpoint_steps;
  series.mean_nats = run.checkpoint_mean_nats;
  const std::uint32_t n_tasks = record.config.n_tasks;
  series.subtasks.resize(n_tasks);
  for (std::uint32_t t = 0; t < n_tasks; ++t) {
    series.subtasks[t].subtask_id = t + 1;
    series.subtasks[t].frequency = record.frequencies[t];
    for (std::size_t c = 0; c < run.checkpoint_steps.size(); ++c) {
      series.subtasks[t].losses.emplace_back(
          static_cast<double>(run.checkpoint_steps[c]),
          run.checkpoint_subtask_nats[c][t]);
    }
  }
  return series;
}

std::optional<std::int64_t> subtask_convergence_step(const SubtaskCurve& curve,
                                                     double threshold_bits) {
  if (!(threshold_bits > 0.0))
    throw std::invalid_argument("threshold must be positive");
  const double threshold_nats = threshold_bits * kLn2;
  for (const auto& [step, nats] : curve.losses) {
    if (nats < threshold_nats) return static_cast<std::int64_t>(step);
  }
  return std::nullopt;
}

std::vector<int> count_learned_subtasks(const SweepRecord& record,
                                        double threshold_bits) {
  if (!(threshold_bits > 0.0))
    throw std::invalid_argument("threshold must be positive");
  const double threshold_nats = threshold_bits * kLn2;
  std::vector<int> counts;
  counts.reserve(record.runs.size());
  for (const auto& run : record.runs) {
    int learned = 0;
    for (std::uint32_t t = 0; t < record.config.n_tasks; ++t) {
      double loss;
      if (record.config.axis == Axis::Data) {
        if (record.config.include_post_early_stop) {
          loss = std::numeric_limits<double>::infinity();
          for (const auto& ckpt : run.checkpoint_subtask_nats)
            loss = std::min(loss, ckpt[t]);
        } else {
          loss = run.early_stop_subtask_nats()[t];
        }
      } else {
        loss = run.final_subtask_nats()[t];
      }
      if (loss < threshold_nats) ++learned;
    }
    counts.push_back(learned);
  }
  return counts;
}

int polygenicity_score(std::span<const double> scales,
                       std::span<const double> losses, double drop_threshold) {
  if (scales.size() != losses.size()) throw std::invalid_argument("size mismatch");
  if (scales.size() < 2)
    throw std::invalid_argument("need at least two scale points");
  if (!(drop_threshold > 0.0))
    throw std::invalid_argument("drop threshold must be positive");

  const double total = losses.front() - losses.back();
  if (!(total > 0.0)) return 0;
  int drops = 0;
  for (std::size_t i = 0; i + 1 < losses.size(); ++i) {
    if (losses[i] - losses[i + 1] > drop_threshold * total) ++drops;
  }
  return drops;
}

ScalingFit fit_mean_scaling(const SweepRecord& record) {
  // Mean over seeds at each scale, diverged runs excluded.
  std::map<double, std::pair<double, int>> by_scale;
  for (const auto& run : record.runs) {
    if (run.diverged) continue;
    const double loss = record.config.axis == Axis::Data
                            ? run.early_stop_mean_nats()
                            : run.final_mean_nats();
    auto& [sum, count] = by_scale[run.scale];
    sum += loss;
    ++count;
  }

  ScalingFit out;
  for (const auto& [scale, entry] : by_scale) {
    out.scales.push_back(scale);
    out.losses.push_back(entry.first / entry.second);
  }
  // Drop leading points that are still at the untrained baseline.
  while (out.scales.size() > 3 && out.losses.front() > 0.98 * kLn2) {
    out.scales.erase(out.scales.begin());
    out.losses.erase(out.losses.begin());
  }
  out.fit = stats::fit_power_law(out.scales, out.losses);
  return out;
}

}  // namespace quanta::harness
