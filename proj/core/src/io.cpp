#include "quanta/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "quanta/format.hpp"
#include "quanta/stats.hpp"

namespace quanta::io {

namespace {

constexpr std::uint32_t kDatasetMagic = 0x53445051;  // "QPDS"
constexpr std::uint32_t kModelMagic = 0x504C4D51;    // "QMLP"
constexpr std::uint32_t kAffinityMagic = 0x46464151; // "QAFF"
constexpr std::uint32_t kFormatVersion = 1;

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : f_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!f_) throw std::runtime_error("cannot open " + path + " for writing");
  }
  void u32(std::uint32_t v) { put(&v, sizeof v); }
  void u64(std::uint64_t v) { put(&v, sizeof v); }
  void f64(double v) { put(&v, sizeof v); }
  void bytes(const void* data, std::size_t n) { put(data, n); }
  void hash64(const std::string& hex) {
    char buf[64] = {};
    std::memcpy(buf, hex.data(), std::min<std::size_t>(hex.size(), 64));
    put(buf, 64);
  }
  void close() {
    f_.close();
    if (!f_) throw std::runtime_error("write failed: " + path_);
  }

 private:
  void put(const void* data, std::size_t n) {
    f_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!f_) throw std::runtime_error("write failed: " + path_);
  }
  std::ofstream f_;
  std::string path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path)
      : f_(path, std::ios::binary), path_(path) {
    if (!f_) throw std::runtime_error("cannot open " + path);
  }
  std::uint32_t u32() { std::uint32_t v; get(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; get(&v, sizeof v); return v; }
  double f64() { double v; get(&v, sizeof v); return v; }
  void bytes(void* data, std::size_t n) { get(data, n); }
  std::string hash64() {
    char buf[65] = {};
    get(buf, 64);
    return std::string(buf, strnlen(buf, 64));
  }

 private:
  void get(void* data, std::size_t n) {
    f_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (f_.gcount() != static_cast<std::streamsize>(n))
      throw std::runtime_error("truncated file: " + path_);
  }
  std::ifstream f_;
  std::string path_;
};

void expect_header(BinaryReader& r, std::uint32_t magic, const char* what) {
  if (r.u32() != magic)
    throw std::runtime_error(std::string("not a ") + what + " file");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw std::runtime_error(std::string("unsupported ") + what +
                             " version " + std::to_string(version));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::runtime_error("CSV column not found: " + name);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(line);
      continue;
    }
    if (!have_header) {
      table.header = split_csv_line(line);
      have_header = true;
    } else {
      table.rows.push_back(split_csv_line(line));
    }
  }
  if (!have_header) throw std::runtime_error("CSV has no header row: " + path);
  return table;
}

CsvBuilder::CsvBuilder(std::vector<std::string> header, std::string manifest_hash)
    : columns_(header.size()) {
  if (header.empty()) throw std::invalid_argument("CSV needs a header");
  if (!manifest_hash.empty()) body_ += "# manifest:" + manifest_hash + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) body_ += ',';
    body_ += header[i];
  }
  body_ += '\n';
}

CsvBuilder& CsvBuilder::cell(const std::string& value) {
  if (in_row_ >= columns_) throw std::logic_error("row has too many cells");
  if (in_row_) body_ += ',';
  body_ += value;
  ++in_row_;
  return *this;
}

CsvBuilder& CsvBuilder::cell(double value) { return cell(format_g17(value)); }
CsvBuilder& CsvBuilder::cell(std::int64_t value) {
  return cell(std::to_string(value));
}
CsvBuilder& CsvBuilder::cell(std::uint64_t value) {
  return cell(std::to_string(value));
}

CsvBuilder& CsvBuilder::end_row() {
  if (in_row_ != columns_) throw std::logic_error("row is missing cells");
  body_ += '\n';
  in_row_ = 0;
  return *this;
}

void CsvBuilder::save(const std::string& path) const {
  if (in_row_ != 0) throw std::logic_error("unterminated CSV row");
  write_text_file(path, body_);
}

void save_batch(const std::string& path, const parity::SampleBatch& batch,
                double alpha, std::uint64_t seed,
                const std::string& manifest_hash) {
  BinaryWriter w(path);
  w.u32(kDatasetMagic);
  w.u32(kFormatVersion);
  w.hash64(manifest_hash);
  w.u32(batch.n_tasks);
  w.u32(batch.n);
  w.u32(0);  // reserved: parity arity lives in the task spec
  w.f64(alpha);
  w.u64(seed);
  w.u64(batch.m);
  w.bytes(batch.bits.data(), batch.bits.size() * sizeof(std::uint64_t));
  w.bytes(batch.labels.data(), batch.labels.size());
  w.close();
}

parity::SampleBatch load_batch(const std::string& path, double* alpha,
                               std::uint64_t* seed) {
  BinaryReader r(path);
  expect_header(r, kDatasetMagic, "dataset");
  r.hash64();
  parity::SampleBatch batch;
  batch.n_tasks = r.u32();
  batch.n = r.u32();
  r.u32();
  const double a = r.f64();
  const std::uint64_t s = r.u64();
  if (alpha) *alpha = a;
  if (seed) *seed = s;
  batch.m = r.u64();
  batch.words_per_row = (batch.input_dim() + 63) / 64;
  batch.bits.resize(batch.m * batch.words_per_row);
  r.bytes(batch.bits.data(), batch.bits.size() * sizeof(std::uint64_t));
  batch.labels.resize(batch.m);
  r.bytes(batch.labels.data(), batch.labels.size());

  // Recover subtask ids from the one-hot control prefix.
  batch.subtask_ids.resize(batch.m);
  for (std::size_t row = 0; row < batch.m; ++row) {
    std::uint32_t id = 0;
    for (std::uint32_t j = 0; j < batch.n_tasks; ++j) {
      if (batch.bit(row, j)) {
        id = j + 1;
        break;
      }
    }
    if (id == 0) throw std::runtime_error("row without a control bit: " + path);
    batch.subtask_ids[row] = id;
  }
  return batch;
}

void save_model(const std::string& path, const mlp::MlpModel& model,
                const std::string& manifest_hash) {
  BinaryWriter w(path);
  w.u32(kModelMagic);
  w.u32(kFormatVersion);
  w.hash64(manifest_hash);
  w.u32(static_cast<std::uint32_t>(model.input_dim()));
  w.u32(static_cast<std::uint32_t>(model.width()));
  w.bytes(model.params().data(),
          static_cast<std::size_t>(model.param_count()) * sizeof(double));
  w.close();
}

mlp::MlpModel load_model(const std::string& path) {
  BinaryReader r(path);
  expect_header(r, kModelMagic, "model checkpoint");
  r.hash64();
  const auto input_dim = static_cast<int>(r.u32());
  const auto width = static_cast<int>(r.u32());
  mlp::MlpModel model(input_dim, width);
  r.bytes(model.params().data(),
          static_cast<std::size_t>(model.param_count()) * sizeof(double));
  if (!model.params().allFinite())
    throw std::runtime_error("checkpoint contains nonfinite parameters");
  return model;
}

void save_affinity(const std::string& path, const qdg::AffinityMatrix& affinity,
                   const std::string& manifest_hash) {
  BinaryWriter w(path);
  w.u32(kAffinityMagic);
  w.u32(kFormatVersion);
  w.hash64(manifest_hash);
  w.u64(static_cast<std::uint64_t>(affinity.values.rows()));
  w.u32(static_cast<std::uint32_t>(affinity.kind));
  w.bytes(affinity.values.data(),
          static_cast<std::size_t>(affinity.values.size()) * sizeof(double));
  w.close();
}

qdg::AffinityMatrix load_affinity(const std::string& path) {
  BinaryReader r(path);
  expect_header(r, kAffinityMagic, "affinity");
  r.hash64();
  const auto m = static_cast<Eigen::Index>(r.u64());
  qdg::AffinityMatrix affinity;
  affinity.kind = static_cast<qdg::AffinityKind>(r.u32());
  affinity.values.resize(m, m);
  r.bytes(affinity.values.data(),
          static_cast<std::size_t>(affinity.values.size()) * sizeof(double));
  return affinity;
}

namespace {

const char* axis_name(harness::Axis axis) {
  switch (axis) {
    case harness::Axis::Params: return "params";
    case harness::Axis::Data: return "data";
    case harness::Axis::Steps: return "steps";
  }
  return "params";
}

harness::Axis axis_from_name(const std::string& name) {
  if (name == "params") return harness::Axis::Params;
  if (name == "data") return harness::Axis::Data;
  if (name == "steps") return harness::Axis::Steps;
  throw std::runtime_error("unknown axis: " + name);
}

}  // namespace

nlohmann::json sweep_config_to_json(const harness::SweepConfig& cfg) {
  nlohmann::json j;
  j["n_tasks"] = cfg.n_tasks;
  j["n"] = cfg.n;
  j["k"] = cfg.k;
  j["alpha"] = cfg.alpha;
  j["axis"] = axis_name(cfg.axis);
  j["widths"] = cfg.widths;
  j["dataset_sizes"] = cfg.dataset_sizes;
  j["data_width"] = cfg.data_width;
  j["batch_size"] = cfg.batch_size;
  j["total_steps"] = cfg.total_steps;
  j["eval_every"] = cfg.eval_every;
  j["eval_per_task"] = cfg.eval_per_task;
  j["seeds"] = cfg.seeds;
  j["loss_unit"] = cfg.loss_unit == harness::LossUnit::Bits ? "bits" : "nats";
  j["zero_output_init"] = cfg.zero_output_init;
  j["include_post_early_stop"] = cfg.include_post_early_stop;
  j["convergence_threshold_bits"] = cfg.convergence_threshold_bits;
  j["adam_lr"] = cfg.adam_lr;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["threads"] = cfg.threads;
  return j;
}

harness::SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  harness::SweepConfig cfg;
  cfg.n_tasks = j.value("n_tasks", cfg.n_tasks);
  cfg.n = j.value("n", cfg.n);
  cfg.k = j.value("k", cfg.k);
  cfg.alpha = j.value("alpha", cfg.alpha);
  if (j.contains("axis")) cfg.axis = axis_from_name(j.at("axis").get<std::string>());
  cfg.widths = j.value("widths", cfg.widths);
  cfg.dataset_sizes = j.value("dataset_sizes", cfg.dataset_sizes);
  cfg.data_width = j.value("data_width", cfg.data_width);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.total_steps = j.value("total_steps", cfg.total_steps);
  cfg.eval_every = j.value("eval_every", cfg.eval_every);
  cfg.eval_per_task = j.value("eval_per_task", cfg.eval_per_task);
  cfg.seeds = j.value("seeds", cfg.seeds);
  if (j.contains("loss_unit")) {
    const auto unit = j.at("loss_unit").get<std::string>();
    if (unit == "bits") cfg.loss_unit = harness::LossUnit::Bits;
    else if (unit == "nats") cfg.loss_unit = harness::LossUnit::Nats;
    else throw std::runtime_error("unknown loss unit: " + unit);
  }
  cfg.zero_output_init = j.value("zero_output_init", cfg.zero_output_init);
  cfg.include_post_early_stop =
      j.value("include_post_early_stop", cfg.include_post_early_stop);
  cfg.convergence_threshold_bits =
      j.value("convergence_threshold_bits", cfg.convergence_threshold_bits);
  cfg.adam_lr = j.value("adam_lr", cfg.adam_lr);
  cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

nlohmann::json toy_config_to_json(const cluster::ToyModelConfig& cfg) {
  nlohmann::json j;
  j["n_subtasks"] = cfg.n_subtasks;
  j["amplitude"] = cfg.amplitude;
  j["alpha"] = cfg.alpha;
  j["dim"] = cfg.dim;
  j["sigma"] = cfg.sigma;
  j["k_list"] = cfg.k_list;
  j["seed"] = cfg.seed;
  return j;
}

cluster::ToyModelConfig toy_config_from_json(const nlohmann::json& j) {
  cluster::ToyModelConfig cfg;
  cfg.n_subtasks = j.value("n_subtasks", cfg.n_subtasks);
  cfg.amplitude = j.value("amplitude", cfg.amplitude);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.dim = j.value("dim", cfg.dim);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.k_list = j.value("k_list", cfg.k_list);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

nlohmann::json sweep_record_to_json(const harness::SweepRecord& record) {
  nlohmann::json j;
  j["config"] = sweep_config_to_json(record.config);
  j["config_hash"] = record.config_hash;
  j["frequencies"] = record.frequencies;
  j["runs"] = nlohmann::json::array();
  for (const auto& run : record.runs) {
    nlohmann::json r;
    r["scale"] = run.scale;
    r["width"] = run.width;
    r["dataset_size"] = run.dataset_size;
    r["seed"] = run.seed;
    r["diverged"] = run.diverged;
    r["checkpoint_steps"] = run.checkpoint_steps;
    r["checkpoint_mean_nats"] = run.checkpoint_mean_nats;
    r["checkpoint_subtask_nats"] = run.checkpoint_subtask_nats;
    r["early_stop_step"] = run.early_stop_step;
    r["early_stop_index"] = run.early_stop_index;
    j["runs"].push_back(std::move(r));
  }
  return j;
}

harness::SweepRecord sweep_record_from_json(const nlohmann::json& j) {
  harness::SweepRecord record;
  record.config = sweep_config_from_json(j.at("config"));
  record.config_hash = j.value("config_hash", "");
  record.frequencies = j.at("frequencies").get<std::vector<double>>();
  for (const auto& r : j.at("runs")) {
    harness::RunResult run;
    run.scale = r.at("scale").get<double>();
    run.width = r.at("width").get<int>();
    run.dataset_size = r.at("dataset_size").get<std::uint64_t>();
    run.seed = r.at("seed").get<std::uint64_t>();
    run.diverged = r.at("diverged").get<bool>();
    run.checkpoint_steps = r.at("checkpoint_steps").get<std::vector<std::int64_t>>();
    run.checkpoint_mean_nats =
        r.at("checkpoint_mean_nats").get<std::vector<double>>();
    run.checkpoint_subtask_nats =
        r.at("checkpoint_subtask_nats").get<std::vector<std::vector<double>>>();
    run.early_stop_step = r.at("early_stop_step").get<std::int64_t>();
    run.early_stop_index = r.at("early_stop_index").get<std::size_t>();
    record.runs.push_back(std::move(run));
  }
  return record;
}

std::vector<std::string> write_sweep_outputs(const harness::SweepRecord& record,
                                             const std::string& out_dir,
                                             const std::string& manifest_hash) {
  std::vector<std::string> written;

  {
    nlohmann::json j = sweep_record_to_json(record);
    j["manifest_hash"] = manifest_hash;
    const std::string path = out_dir + "/record.json";
    write_text_file(path, j.dump(2) + "\n");
    written.push_back(path);
  }

  {
    CsvBuilder csv({"scale", "subtask_id", "freq", "loss_bits"}, manifest_hash);
    for (const auto& curve : record.subtask_curves()) {
      for (const auto& [scale, nats] : curve.losses) {
        csv.cell(scale)
            .cell(static_cast<std::uint64_t>(curve.subtask_id))
            .cell(curve.frequency)
            .cell(nats / harness::kLn2)
            .end_row();
      }
    }
    const std::string path = out_dir + "/curves.csv";
    csv.save(path);
    written.push_back(path);
  }

  {
    CsvBuilder csv({"scale", "seed", "diverged", "mean_loss_nats",
                    "mean_loss_bits", "learned_subtasks", "early_stop_step"},
                   manifest_hash);
    const auto learned = harness::count_learned_subtasks(
        record, record.config.convergence_threshold_bits);
    for (std::size_t i = 0; i < record.runs.size(); ++i) {
      const auto& run = record.runs[i];
      const double nats = record.config.axis == harness::Axis::Data
                              ? run.early_stop_mean_nats()
                              : run.final_mean_nats();
      csv.cell(run.scale)
          .cell(run.seed)
          .cell(std::string(run.diverged ? "1" : "0"))
          .cell(nats)
          .cell(nats / harness::kLn2)
          .cell(static_cast<std::int64_t>(learned[i]))
          .cell(run.early_stop_step)
          .end_row();
    }
    const std::string path = out_dir + "/means.csv";
    csv.save(path);
    written.push_back(path);
  }

  {
    CsvBuilder csv({"axis", "exponent", "prefactor", "r2"}, manifest_hash);
    try {
      const auto scaling = harness::fit_mean_scaling(record);
      csv.cell(std::string(axis_name(record.config.axis)))
          .cell(scaling.fit.exponent)
          .cell(scaling.fit.prefactor)
          .cell(scaling.fit.r_squared)
          .end_row();
    } catch (const std::exception&) {
      // Too few usable points: leave only the header.
    }
    const std::string path = out_dir + "/fits.csv";
    csv.save(path);
    written.push_back(path);
  }

  return written;
}

}  // namespace quanta::io
