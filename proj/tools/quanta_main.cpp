// Command-line front end: theory curves, dataset generation, scaling sweeps,
// gradient clustering, the toy cluster model, and plot rendering. Every
// subcommand resolves its configuration, runs, writes artifacts, and finishes
// by writing manifest.json (the commit point).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "quanta/cluster_analysis.hpp"
#include "quanta/format.hpp"
#include "quanta/harness.hpp"
#include "quanta/io.hpp"
#include "quanta/manifest.hpp"
#include "quanta/mlp.hpp"
#include "quanta/parity.hpp"
#include "quanta/qdg.hpp"
#include "quanta/rng.hpp"
#include "quanta/stats.hpp"
#include "quanta/svg.hpp"
#include "quanta/theory.hpp"

namespace {

constexpr const char* kToolVersion = "quanta 0.1.0";

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware default
  std::string out_dir = ".";
  std::string profile = "desk";
};

int resolved_threads(const GlobalOptions& g) {
  if (const char* env = std::getenv("QUANTA_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  if (g.threads > 0) return g.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string join_args(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

quanta::manifest::ExperimentManifest start_manifest(
    const std::string& command, const nlohmann::json& config,
    std::map<std::string, std::uint64_t> seeds) {
  quanta::manifest::ExperimentManifest m;
  m.tool_version = kToolVersion;
  m.command = command;
  m.config = config;
  m.seeds = std::move(seeds);
  m.started_at = quanta::manifest::now_iso8601_utc();
  return m;
}

void finish_manifest(quanta::manifest::ExperimentManifest& m,
                     const std::string& out_dir) {
  m.finished_at = quanta::manifest::now_iso8601_utc();
  const std::string path = out_dir + "/manifest.json";
  m.save(path);
  std::printf("wrote %s\n", path.c_str());
}

void ensure_out_dir(const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
}

// "lo:hi" or "lo:hi:count"
void parse_range(const std::string& text, double& lo, double& hi, int& count) {
  const auto first = text.find(':');
  if (first == std::string::npos)
    throw CLI::ValidationError("range", "expected lo:hi[:count]");
  const auto second = text.find(':', first + 1);
  lo = std::stod(text.substr(0, first));
  if (second == std::string::npos) {
    hi = std::stod(text.substr(first + 1));
  } else {
    hi = std::stod(text.substr(first + 1, second - first - 1));
    count = std::stoi(text.substr(second + 1));
  }
  if (!(hi >= lo)) throw CLI::ValidationError("range", "hi must be >= lo");
}

quanta::theory::LossProfile parse_loss_profile(const std::string& text) {
  using quanta::theory::LossProfile;
  if (text == "logfreq") return LossProfile::log_freq();
  if (text.rfind("logoffset:", 0) == 0)
    return LossProfile::log_offset(std::stod(text.substr(10)));
  if (text.rfind("constant:", 0) == 0) {
    const std::string rest = text.substr(9);
    const auto comma = rest.find(',');
    if (comma == std::string::npos)
      throw CLI::ValidationError("loss-profile", "expected constant:a,b");
    return LossProfile::constant(std::stod(rest.substr(0, comma)),
                                 std::stod(rest.substr(comma + 1)));
  }
  throw CLI::ValidationError(
      "loss-profile", "expected constant:a,b | logfreq | logoffset:C");
}

const char* profile_name(const quanta::theory::LossProfile& p) {
  switch (p.kind) {
    case quanta::theory::ProfileKind::Constant: return "constant";
    case quanta::theory::ProfileKind::LogFreq: return "logfreq";
    case quanta::theory::ProfileKind::LogOffset: return "logoffset";
  }
  return "?";
}

// ---------------- theory ----------------

int cmd_theory(const GlobalOptions& g, const std::string& command,
               const std::string& alpha_text, const std::string& profile_text,
               const std::string& n_range, const std::string& axis,
               double capacity, double tau, double t_first, bool bits) {
  using namespace quanta::theory;
  ensure_out_dir(g.out_dir);

  const double alpha = std::stod(alpha_text);
  const auto dist = QuantaDistribution::infinite(alpha);
  const auto profile = parse_loss_profile(profile_text);

  double lo = 1, hi = 10000;
  int count = 60;
  parse_range(n_range, lo, hi, count);

  ScaleAxis scale_axis = ScaleAxis::Params;
  bool n_axis = axis == "n";
  if (axis == "params") scale_axis = ScaleAxis::Params;
  else if (axis == "data") scale_axis = ScaleAxis::DataMultiEpoch;
  else if (axis == "steps") scale_axis = ScaleAxis::Steps;
  else if (!n_axis)
    throw CLI::ValidationError("axis", "expected n|params|data|steps");

  const auto pred =
      ScalingPrediction::for_axis(n_axis ? ScaleAxis::Params : scale_axis, dist,
                                  capacity, tau, t_first);

  nlohmann::json config = {{"alpha", alpha},
                           {"profile", profile_text},
                           {"range", n_range},
                           {"axis", axis},
                           {"capacity", capacity},
                           {"tau", tau},
                           {"t_first", t_first},
                           {"bits", bits}};
  auto manifest = start_manifest(command, config, {});
  const std::string hash = manifest.content_hash();

  const double unit = bits ? kNatsToBits : 1.0;
  quanta::io::CsvBuilder csv(
      {"n_or_scale", "axis", "alpha", "profile", "loss_exact", "loss_closed"},
      hash);

  std::vector<double> xs;
  if (count < 2) count = 2;
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    const double v = lo * std::pow(hi / lo, t);
    xs.push_back(v);
  }
  std::set<std::uint64_t> seen;  // dedupe after flooring on the n axis
  for (double v : xs) {
    double exact, closed;
    if (n_axis) {
      const auto n = static_cast<std::uint64_t>(std::llround(v));
      if (!seen.insert(n).second) continue;
      exact = expected_loss_exact(n, dist, profile);
      closed = n >= 1 ? expected_loss_closed(n, dist, profile) : exact;
      csv.cell(static_cast<std::uint64_t>(n))
          .cell(std::string(axis))
          .cell(alpha)
          .cell(std::string(profile_name(profile)))
          .cell(exact * unit)
          .cell(closed * unit)
          .end_row();
      continue;
    }
    std::uint64_t n_learned;
    switch (scale_axis) {
      case ScaleAxis::Params:
        closed = loss_vs_params(v, pred, dist, profile);
        n_learned = static_cast<std::uint64_t>(v / capacity);
        break;
      case ScaleAxis::DataMultiEpoch:
        closed = loss_vs_data(v, pred, dist, profile);
        n_learned = floor_power_inverse(v / (tau * zeta(alpha + 1.0)), alpha + 1.0);
        break;
      default:
        closed = loss_vs_steps(v, pred, dist, profile);
        n_learned = floor_power_inverse(v / t_first, alpha + 1.0);
        break;
    }
    exact = expected_loss_exact(n_learned, dist, profile);
    csv.cell(v)
        .cell(std::string(axis))
        .cell(alpha)
        .cell(std::string(profile_name(profile)))
        .cell(exact * unit)
        .cell(closed * unit)
        .end_row();
  }

  const std::string out = g.out_dir + "/theory.csv";
  csv.save(out);
  manifest.outputs.push_back(out);
  finish_manifest(manifest, g.out_dir);
  return 0;
}

// ---------------- gen ----------------

int cmd_gen(const GlobalOptions& g, const std::string& command,
            std::uint32_t n_tasks, std::uint32_t n, std::uint32_t k,
            double alpha, std::uint64_t m, std::uint64_t per_task,
            const std::string& out_name, bool csv_mode) {
  ensure_out_dir(g.out_dir);
  const auto spec = quanta::parity::build_task_spec(
      n_tasks, n, k, alpha, quanta::derive_seed(g.seed, "task"));
  const std::uint64_t data_seed = quanta::derive_seed(g.seed, "data");

  const auto batch = per_task > 0
                         ? quanta::parity::fixed_eval_set(spec, per_task, data_seed)
                         : quanta::parity::draw_batch(spec, m, data_seed);

  nlohmann::json config = {{"n_tasks", n_tasks}, {"n", n},
                           {"k", k},             {"alpha", alpha},
                           {"m", batch.m},       {"per_task", per_task},
                           {"csv", csv_mode}};
  auto manifest = start_manifest(command, config,
                                 {{"master", g.seed},
                                  {"task", spec.seed},
                                  {"data", data_seed}});
  const std::string hash = manifest.content_hash();

  const std::string out = g.out_dir + "/" + out_name;
  if (csv_mode) {
    quanta::io::CsvBuilder csv({"row", "subtask_id", "label", "bits"}, hash);
    for (std::size_t r = 0; r < batch.m; ++r) {
      std::string bits;
      bits.reserve(batch.input_dim());
      for (std::uint32_t j = 0; j < batch.input_dim(); ++j)
        bits += batch.bit(r, j) ? '1' : '0';
      csv.cell(static_cast<std::uint64_t>(r))
          .cell(static_cast<std::uint64_t>(batch.subtask_ids[r]))
          .cell(static_cast<std::uint64_t>(batch.labels[r]))
          .cell(bits)
          .end_row();
    }
    csv.save(out);
  } else {
    quanta::io::save_batch(out, batch, alpha, g.seed, hash);
  }
  manifest.outputs.push_back(out);
  finish_manifest(manifest, g.out_dir);
  return 0;
}

// ---------------- sweep ----------------

void write_sweep_plots(const quanta::harness::SweepRecord& record,
                       const std::string& out_dir, const std::string& hash,
                       quanta::manifest::ExperimentManifest& manifest) {
  using namespace quanta;
  const char* axis_label = record.config.axis == harness::Axis::Data
                               ? "training samples D"
                               : "parameters N";

  svg::PlotSpec mean_plot;
  mean_plot.title = "mean test loss scaling";
  mean_plot.x_label = axis_label;
  mean_plot.y_label = "mean test loss (bits)";
  mean_plot.x_scale = svg::AxisScale::Log;
  mean_plot.y_scale = svg::AxisScale::Log;
  svg::Series mean_series;
  mean_series.label = "mean loss";
  mean_series.markers = true;
  for (const auto& run : record.runs) {
    if (run.diverged) continue;
    const double nats = record.config.axis == harness::Axis::Data
                            ? run.early_stop_mean_nats()
                            : run.final_mean_nats();
    mean_series.points.emplace_back(run.scale,
                                    std::max(nats / harness::kLn2, 1e-12));
  }
  mean_plot.series.push_back(mean_series);
  mean_plot.manifest_hash = hash;
  const std::string mean_path = out_dir + "/mean_loss.svg";
  svg::emit_svg(mean_plot, mean_path);
  manifest.outputs.push_back(mean_path);

  svg::PlotSpec spaghetti;
  spaghetti.title = "per-subtask scaling";
  spaghetti.x_label = axis_label;
  spaghetti.y_label = "subtask test loss (bits)";
  spaghetti.x_scale = svg::AxisScale::Log;
  spaghetti.y_scale = svg::AxisScale::Log;
  spaghetti.manifest_hash = hash;
  for (const auto& curve : record.subtask_curves()) {
    svg::Series s;
    s.stroke_width = 0.8;
    for (const auto& [scale, nats] : curve.losses)
      s.points.emplace_back(scale, std::max(nats / harness::kLn2, 1e-6));
    spaghetti.series.push_back(std::move(s));
  }
  const std::string sub_path = out_dir + "/subtask_loss.svg";
  svg::emit_svg(spaghetti, sub_path);
  manifest.outputs.push_back(sub_path);
}

int cmd_sweep(const GlobalOptions& g, const std::string& command,
              const std::string& axis_name, const std::string& config_path) {
  using namespace quanta;
  ensure_out_dir(g.out_dir);

  harness::Axis axis;
  if (axis_name == "params") axis = harness::Axis::Params;
  else if (axis_name == "data") axis = harness::Axis::Data;
  else if (axis_name == "steps") axis = harness::Axis::Steps;
  else throw CLI::ValidationError("sweep", "expected params|data|steps");

  harness::SweepConfig cfg = g.profile == "paper"
                                 ? harness::paper_profile(axis)
                                 : harness::desk_profile(axis);
  if (!config_path.empty()) {
    const auto j = nlohmann::json::parse(io::read_text_file(config_path));
    cfg = io::sweep_config_from_json(j);
    cfg.axis = axis;
  }
  cfg.seeds = {g.seed};
  cfg.threads = resolved_threads(g);
  cfg.validate();

  auto manifest =
      start_manifest(command, io::sweep_config_to_json(cfg),
                     {{"master", g.seed},
                      {"task", derive_seed(g.seed, "task")},
                      {"data", derive_seed(g.seed, "data")},
                      {"eval", derive_seed(g.seed, "eval")},
                      {"init", derive_seed(g.seed, "init")},
                      {"shuffle", derive_seed(g.seed, "shuffle")}});
  const std::string hash = manifest.content_hash();

  harness::SweepRecord record;
  if (axis == harness::Axis::Data) {
    record = harness::run_data_sweep(cfg);
  } else if (axis == harness::Axis::Params) {
    record = harness::run_param_sweep(cfg);
  } else {
    // Steps axis: one online run at data_width, reported per checkpoint.
    harness::SweepConfig one = cfg;
    one.axis = harness::Axis::Params;
    one.widths = {cfg.data_width};
    record = harness::run_param_sweep(one);
    record.config.axis = harness::Axis::Steps;
  }
  record.config_hash = hash;

  auto written = io::write_sweep_outputs(record, g.out_dir, hash);
  manifest.outputs.insert(manifest.outputs.end(), written.begin(), written.end());

  if (axis == harness::Axis::Steps) {
    const auto series = harness::track_step_scaling(record.runs.front(), record);
    io::CsvBuilder csv({"step", "mean_loss_nats", "mean_loss_bits"}, hash);
    for (std::size_t i = 0; i < series.steps.size(); ++i) {
      csv.cell(series.steps[i])
          .cell(series.mean_nats[i])
          .cell(series.mean_nats[i] / harness::kLn2)
          .end_row();
    }
    const std::string path = g.out_dir + "/steps.csv";
    csv.save(path);
    manifest.outputs.push_back(path);
  }

  write_sweep_plots(record, g.out_dir, hash, manifest);
  finish_manifest(manifest, g.out_dir);
  return 0;
}

// ---------------- train (single model checkpoint for qdg) ----------------

int cmd_train(const GlobalOptions& g, const std::string& command,
              std::uint32_t n_tasks, std::uint32_t n, std::uint32_t k,
              double alpha, int width, std::uint64_t batch,
              std::int64_t steps, const std::string& out_name) {
  using namespace quanta;
  ensure_out_dir(g.out_dir);

  harness::SweepConfig cfg;
  cfg.n_tasks = n_tasks;
  cfg.n = n;
  cfg.k = k;
  cfg.alpha = alpha;
  cfg.widths = {width};
  cfg.batch_size = batch;
  cfg.total_steps = steps;
  cfg.eval_every = steps;  // single evaluation at the end
  cfg.eval_per_task = 8;
  cfg.seeds = {g.seed};
  cfg.threads = 1;
  cfg.validate();

  auto manifest = start_manifest(command, io::sweep_config_to_json(cfg),
                                 {{"master", g.seed}});
  const std::string hash = manifest.content_hash();

  const auto trained = harness::train_single(cfg, width, 0, g.seed);
  std::printf("final mean test loss: %.4f bits%s\n",
              trained.result.final_mean_nats() / harness::kLn2,
              trained.result.diverged ? " (diverged)" : "");

  const std::string out = g.out_dir + "/" + out_name;
  io::save_model(out, trained.model, hash);
  manifest.outputs.push_back(out);
  finish_manifest(manifest, g.out_dir);
  return 0;
}

// ---------------- qdg ----------------

int cmd_qdg(const GlobalOptions& g, const std::string& command,
            const std::string& model_path, const std::string& data_path,
            std::uint32_t n_clusters, double loss_filter, bool dump_affinity) {
  using namespace quanta;
  ensure_out_dir(g.out_dir);

  const auto model = io::load_model(model_path);
  const auto batch = io::load_batch(data_path);

  nlohmann::json config = {{"model", model_path},
                           {"data", data_path},
                           {"n_clusters", n_clusters},
                           {"loss_filter_nats", loss_filter},
                           {"affinity_dump", dump_affinity}};
  auto manifest = start_manifest(
      command, config,
      {{"master", g.seed}, {"kmeans", derive_seed(g.seed, "kmeans")}});
  const std::string hash = manifest.content_hash();

  const auto grads = qdg::build_grad_matrix(model, batch, loss_filter);
  const auto cosine = qdg::cosine_affinity(grads);
  const auto angular = qdg::angular_affinity(cosine);
  const auto assignment =
      qdg::spectral_cluster(angular, n_clusters, derive_seed(g.seed, "kmeans"));

  {
    io::CsvBuilder csv({"sample_id", "cluster", "ground_truth"}, hash);
    for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
      csv.cell(static_cast<std::int64_t>(grads.sample_ids[i]))
          .cell(static_cast<std::uint64_t>(assignment.labels[i]))
          .cell(static_cast<std::uint64_t>(grads.ground_truth[i]))
          .end_row();
    }
    const std::string path = g.out_dir + "/labels.csv";
    csv.save(path);
    manifest.outputs.push_back(path);
  }

  if (dump_affinity) {
    const std::string path = g.out_dir + "/affinity.bin";
    io::save_affinity(path, angular, hash);
    manifest.outputs.push_back(path);
  }

  {
    // Block-ordered similarity heatmap: reorder samples by cluster label.
    const auto m = angular.values.rows();
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) {
                       return assignment.labels[a] < assignment.labels[b];
                     });
    Eigen::MatrixXd reordered(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        reordered(i, j) = angular.values(order[i], order[j]);
    const std::string path = g.out_dir + "/similarity.svg";
    svg::emit_heatmap(reordered, 0.4, 0.7, "angular similarity (cluster order)",
                      path, hash);
    manifest.outputs.push_back(path);
  }

  const double purity = qdg::cluster_purity(assignment, grads.ground_truth);
  std::printf("samples=%td clusters=%u purity=%.4f dropped=%zu\n",
              static_cast<std::ptrdiff_t>(grads.rows.rows()),
              n_clusters, purity, grads.dropped_zero_norm);

  finish_manifest(manifest, g.out_dir);
  return 0;
}

// ---------------- toy ----------------

int cmd_toy(const GlobalOptions& g, const std::string& command,
            const std::string& config_path, const std::string& alphas_text,
            const std::string& window_text) {
  using namespace quanta;
  ensure_out_dir(g.out_dir);

  cluster::ToyModelConfig cfg;  // desk defaults
  if (g.profile == "paper") {
    cfg.n_subtasks = 1000;
    cfg.amplitude = 1000.0;
    cfg.dim = 1000;
    cfg.sigma = 2.0;
    cfg.k_list = {100, 200, 500};
  }
  if (!config_path.empty())
    cfg = io::toy_config_from_json(
        nlohmann::json::parse(io::read_text_file(config_path)));
  cfg.seed = g.seed;

  double wlo = 10, whi = 300;
  if (g.profile == "paper") { wlo = 100; whi = 1000; }
  int unused = 0;
  if (!window_text.empty()) parse_range(window_text, wlo, whi, unused);

  nlohmann::json config = io::toy_config_to_json(cfg);
  config["window"] = {static_cast<std::size_t>(wlo), static_cast<std::size_t>(whi)};
  config["alphas"] = alphas_text;
  auto manifest = start_manifest(command, config, {{"master", g.seed}});
  const std::string hash = manifest.content_hash();

  if (!alphas_text.empty()) {
    // Alpha-recovery sweep mode.
    std::vector<double> alphas;
    std::stringstream ss(alphas_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) alphas.push_back(std::stod(tok));
    const auto rows = cluster::alpha_recovery_sweep(
        alphas, cfg, static_cast<std::size_t>(wlo),
        static_cast<std::size_t>(whi), resolved_threads(g));
    io::CsvBuilder csv({"alpha", "envelope_slope", "error"}, hash);
    for (const auto& row : rows)
      csv.cell(row.alpha).cell(row.slope).cell(row.error).end_row();
    const std::string path = g.out_dir + "/alpha_recovery.csv";
    csv.save(path);
    manifest.outputs.push_back(path);
    finish_manifest(manifest, g.out_dir);
    return 0;
  }

  const auto curves = cluster::toy_cluster_sweep(cfg);
  {
    io::CsvBuilder csv({"k", "rank", "size"}, hash);
    for (const auto& curve : curves) {
      for (std::size_t r = 0; r < curve.sizes.size(); ++r) {
        csv.cell(static_cast<std::uint64_t>(curve.n_clusters))
            .cell(static_cast<std::uint64_t>(r + 1))
            .cell(curve.sizes[r])
            .end_row();
      }
    }
    const std::string path = g.out_dir + "/rankfreq.csv";
    csv.save(path);
    manifest.outputs.push_back(path);
  }
  {
    const auto fit = cluster::envelope_slope(curves, static_cast<std::size_t>(wlo),
                                             static_cast<std::size_t>(whi));
    io::CsvBuilder csv({"window_lo", "window_hi", "slope", "intercept", "r2"},
                       hash);
    csv.cell(static_cast<std::uint64_t>(fit.lo))
        .cell(static_cast<std::uint64_t>(fit.hi))
        .cell(fit.slope)
        .cell(fit.intercept)
        .cell(fit.r_squared)
        .end_row();
    const std::string path = g.out_dir + "/envelope.csv";
    csv.save(path);
    manifest.outputs.push_back(path);

    svg::PlotSpec plot;
    plot.title = "rank-frequency curves and envelope fit";
    plot.x_label = "cluster rank";
    plot.y_label = "cluster size";
    plot.x_scale = svg::AxisScale::Log;
    plot.y_scale = svg::AxisScale::Log;
    plot.manifest_hash = hash;
    for (const auto& curve : curves) {
      svg::Series s;
      s.label = "k=" + std::to_string(curve.n_clusters);
      for (std::size_t r = 0; r < curve.sizes.size(); ++r)
        s.points.emplace_back(static_cast<double>(r + 1),
                              static_cast<double>(curve.sizes[r]));
      plot.series.push_back(std::move(s));
    }
    svg::Series fit_series;
    fit_series.label = "envelope fit";
    fit_series.color = "#000000";
    for (double r = fit.lo; r <= fit.hi; r *= 1.25)
      fit_series.points.emplace_back(r, fit.intercept * std::pow(r, fit.slope));
    plot.series.push_back(std::move(fit_series));
    const std::string svg_path = g.out_dir + "/envelope.svg";
    svg::emit_svg(plot, svg_path);
    manifest.outputs.push_back(svg_path);
  }
  finish_manifest(manifest, g.out_dir);
  return 0;
}

// ---------------- envelope ----------------

int cmd_envelope(const GlobalOptions& g, const std::string& command,
                 const std::vector<std::string>& curve_files,
                 const std::string& window_text) {
  using namespace quanta;
  ensure_out_dir(g.out_dir);

  std::vector<cluster::RankFrequencyCurve> curves;
  for (const auto& file : curve_files) {
    const auto table = io::read_csv(file);
    const auto k_col = table.column("k");
    const auto rank_col = table.column("rank");
    const auto size_col = table.column("size");
    std::map<std::uint32_t, std::map<std::size_t, std::uint64_t>> grouped;
    for (const auto& row : table.rows) {
      grouped[static_cast<std::uint32_t>(std::stoul(row[k_col]))]
             [std::stoul(row[rank_col])] = std::stoull(row[size_col]);
    }
    for (const auto& [k, ranks] : grouped) {
      cluster::RankFrequencyCurve curve;
      curve.n_clusters = k;
      for (const auto& [rank, size] : ranks) {
        if (rank != curve.sizes.size() + 1)
          throw std::runtime_error("rank column must be contiguous from 1 in " +
                                   file);
        curve.sizes.push_back(size);
      }
      curves.push_back(std::move(curve));
    }
  }

  double wlo = 10, whi = 300;
  int unused = 0;
  if (!window_text.empty()) parse_range(window_text, wlo, whi, unused);

  nlohmann::json config = {{"curves", curve_files},
                           {"window", {wlo, whi}}};
  auto manifest = start_manifest(command, config, {});
  const std::string hash = manifest.content_hash();

  const auto fit = cluster::envelope_slope(curves, static_cast<std::size_t>(wlo),
                                           static_cast<std::size_t>(whi));
  io::CsvBuilder csv({"window_lo", "window_hi", "slope", "intercept", "r2"}, hash);
  csv.cell(static_cast<std::uint64_t>(fit.lo))
      .cell(static_cast<std::uint64_t>(fit.hi))
      .cell(fit.slope)
      .cell(fit.intercept)
      .cell(fit.r_squared)
      .end_row();
  const std::string path = g.out_dir + "/envelope.csv";
  csv.save(path);
  manifest.outputs.push_back(path);
  std::printf("envelope slope %.4f over ranks [%zu, %zu] (r2=%.4f)\n", fit.slope,
              fit.lo, fit.hi, fit.r_squared);
  finish_manifest(manifest, g.out_dir);
  return 0;
}

// ---------------- plot ----------------

int cmd_plot(const GlobalOptions& g, const std::string& command,
             const std::string& input, const std::string& x_col,
             const std::string& y_col, const std::string& series_col,
             bool logx, bool logy, const std::string& out_name) {
  using namespace quanta;
  ensure_out_dir(g.out_dir);

  const auto table = io::read_csv(input);
  const auto xi = table.column(x_col);
  const auto yi = table.column(y_col);

  nlohmann::json config = {{"input", input}, {"x", x_col},
                           {"y", y_col},     {"series", series_col},
                           {"logx", logx},   {"logy", logy}};
  auto manifest = start_manifest(command, config, {});
  const std::string hash = manifest.content_hash();

  svg::PlotSpec plot;
  plot.title = input;
  plot.x_label = x_col;
  plot.y_label = y_col;
  plot.x_scale = logx ? svg::AxisScale::Log : svg::AxisScale::Linear;
  plot.y_scale = logy ? svg::AxisScale::Log : svg::AxisScale::Linear;
  plot.manifest_hash = hash;

  if (series_col.empty()) {
    svg::Series s;
    s.label = y_col;
    s.markers = true;
    for (const auto& row : table.rows)
      s.points.emplace_back(std::stod(row[xi]), std::stod(row[yi]));
    plot.series.push_back(std::move(s));
  } else {
    const auto si = table.column(series_col);
    std::map<std::string, svg::Series> grouped;
    for (const auto& row : table.rows) {
      auto& s = grouped[row[si]];
      s.label = series_col + "=" + row[si];
      s.points.emplace_back(std::stod(row[xi]), std::stod(row[yi]));
    }
    for (auto& [key, series] : grouped) plot.series.push_back(std::move(series));
  }

  const std::string out = g.out_dir + "/" + out_name;
  svg::emit_svg(plot, out);
  manifest.outputs.push_back(out);
  finish_manifest(manifest, g.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantization-model scaling experiments"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--seed", g.seed, "master seed (expands to named sub-seeds)");
  app.add_option("--threads", g.threads,
                 "worker threads (0 = hardware; env QUANTA_THREADS overrides)");
  app.add_option("--out-dir", g.out_dir, "artifact directory");
  app.add_option("--profile", g.profile, "scale profile: desk | paper")
      ->check(CLI::IsMember({"desk", "paper"}));

  const std::string command = join_args(argc, argv);

  // theory
  auto* theory = app.add_subcommand("theory", "analytic loss and scaling curves");
  std::string th_alpha = "0.4", th_profile = "constant:0,1", th_n = "1:10000",
              th_axis = "n";
  double th_capacity = 1.0, th_tau = 1.0, th_t1 = 1.0;
  bool th_bits = false;
  theory->add_option("--alpha", th_alpha, "Zipf exponent alpha");
  theory->add_option("--loss-profile,--profile", th_profile,
                     "constant:a,b | logfreq | logoffset:C");
  theory->add_option("--n", th_n, "rank or scale range lo:hi[:count]");
  theory->add_option("--axis", th_axis, "n | params | data | steps");
  theory->add_option("--capacity", th_capacity, "parameters per learned rank");
  theory->add_option("--tau", th_tau, "data threshold per rank");
  theory->add_option("--t1", th_t1, "steps to learn the first rank");
  theory->add_flag("--bits", th_bits, "report losses in bits instead of nats");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a parity dataset file");
  std::uint32_t gn_tasks = 100, gn = 50, gk = 3;
  double galpha = 0.4;
  std::uint64_t gm = 10000, gper_task = 0;
  std::string gout = "data.bin";
  bool gcsv = false;
  gen->add_option("--n-tasks", gn_tasks, "number of subtasks");
  gen->add_option("--n", gn, "task bits");
  gen->add_option("--k", gk, "parity arity");
  gen->add_option("--alpha", galpha, "Zipf exponent");
  gen->add_option("--m", gm, "samples (Zipf-distributed subtasks)");
  gen->add_option("--per-task", gper_task,
                  "stratified mode: samples per subtask (overrides --m)");
  gen->add_option("--out", gout, "output file name");
  gen->add_flag("--csv", gcsv, "write CSV debug format instead of binary");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a scaling sweep");
  std::string sweep_axis, sweep_config;
  sweep->add_option("axis", sweep_axis, "params | data | steps")->required();
  sweep->add_option("--config", sweep_config, "JSON config file");

  // train
  auto* train = app.add_subcommand("train", "train one model to a checkpoint");
  std::uint32_t tn_tasks = 100, tn = 50, tk = 3;
  double talpha = 0.4;
  int twidth = 200;
  std::uint64_t tbatch = 4096;
  std::int64_t tsteps = 30000;
  std::string tout = "model.bin";
  train->add_option("--n-tasks", tn_tasks, "number of subtasks");
  train->add_option("--n", tn, "task bits");
  train->add_option("--k", tk, "parity arity");
  train->add_option("--alpha", talpha, "Zipf exponent");
  train->add_option("--width", twidth, "hidden width");
  train->add_option("--batch", tbatch, "batch size");
  train->add_option("--steps", tsteps, "training steps");
  train->add_option("--out", tout, "checkpoint file name");

  // qdg
  auto* qdg_cmd = app.add_subcommand("qdg", "gradient clustering on a checkpoint");
  std::string qmodel, qdata;
  std::uint32_t qclusters = 30;
  double qfilter = 0.1;
  bool qaffinity = false;
  qdg_cmd->add_option("--model", qmodel, "model checkpoint")->required();
  qdg_cmd->add_option("--data", qdata, "dataset file")->required();
  qdg_cmd->add_option("--n-clusters", qclusters, "spectral cluster count");
  qdg_cmd->add_option("--loss-filter", qfilter, "per-sample loss cutoff (nats)");
  qdg_cmd->add_flag("--affinity-out", qaffinity, "also write affinity.bin");

  // toy
  auto* toy = app.add_subcommand("toy", "gaussian toy cluster model");
  std::string toy_config, toy_alphas, toy_window;
  toy->add_option("--config", toy_config, "JSON config file");
  toy->add_option("--alphas", toy_alphas,
                  "comma list: run the alpha-recovery sweep instead");
  toy->add_option("--window", toy_window, "envelope fit window lo:hi");

  // envelope
  auto* envelope = app.add_subcommand("envelope", "fit an envelope to curves");
  std::vector<std::string> env_curves;
  std::string env_window;
  envelope->add_option("--curves", env_curves, "rankfreq.csv files")
      ->required()
      ->expected(-1);
  envelope->add_option("--window", env_window, "rank window lo:hi");

  // plot
  auto* plot = app.add_subcommand("plot", "render a CSV as an SVG plot");
  std::string p_input, p_x, p_y, p_series, p_out = "plot.svg";
  bool p_logx = false, p_logy = false;
  plot->add_option("--input", p_input, "CSV file")->required();
  plot->add_option("--x", p_x, "x column")->required();
  plot->add_option("--y", p_y, "y column")->required();
  plot->add_option("--series", p_series, "group-by column");
  plot->add_flag("--logx", p_logx, "log x axis");
  plot->add_flag("--logy", p_logy, "log y axis");
  plot->add_option("--out", p_out, "output SVG name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*theory)
      return cmd_theory(g, command, th_alpha, th_profile, th_n, th_axis,
                        th_capacity, th_tau, th_t1, th_bits);
    if (*gen)
      return cmd_gen(g, command, gn_tasks, gn, gk, galpha, gm, gper_task, gout,
                     gcsv);
    if (*sweep) return cmd_sweep(g, command, sweep_axis, sweep_config);
    if (*train)
      return cmd_train(g, command, tn_tasks, tn, tk, talpha, twidth, tbatch,
                       tsteps, tout);
    if (*qdg_cmd)
      return cmd_qdg(g, command, qmodel, qdata, qclusters, qfilter, qaffinity);
    if (*toy) return cmd_toy(g, command, toy_config, toy_alphas, toy_window);
    if (*envelope) return cmd_envelope(g, command, env_curves, env_window);
    if (*plot)
      return cmd_plot(g, command, p_input, p_x, p_y, p_series, p_logx, p_logy,
                      p_out);
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", {{"type", "runtime"}, {"message", e.what()}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
  return 0;
}
