#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "quanta/cluster_analysis.hpp"
#include "quanta/harness.hpp"
#include "quanta/mlp.hpp"
#include "quanta/parity.hpp"
#include "quanta/qdg.hpp"

namespace quanta::io {

// ---- text ----

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Minimal CSV sheet: one header row, homogeneous string cells, comment lines
// (leading '#') preserved separately when reading.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  std::size_t column(const std::string& name) const;  // throws if missing
};

CsvTable read_csv(const std::string& path);

// CSV assembly with locale-independent 17-significant-digit doubles. The
// manifest hash, when present, is embedded as a '#' comment line above the
// header so payload bytes stay reproducible.
class CsvBuilder {
 public:
  explicit CsvBuilder(std::vector<std::string> header,
                      std::string manifest_hash = "");
  CsvBuilder& cell(const std::string& value);
  CsvBuilder& cell(double value);
  CsvBuilder& cell(std::int64_t value);
  CsvBuilder& cell(std::uint64_t value);
  CsvBuilder& end_row();
  const std::string& str() const { return body_; }
  void save(const std::string& path) const;

 private:
  std::string body_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

// ---- versioned little-endian binaries ----

// Dataset file: header (magic, version, manifest hash, n_tasks, n, k, alpha,
// seed, m) + packed rows + labels. Subtask ids are recovered from the one-hot
// control prefix on load.
void save_batch(const std::string& path, const parity::SampleBatch& batch,
                double alpha, std::uint64_t seed,
                const std::string& manifest_hash = "");
parity::SampleBatch load_batch(const std::string& path, double* alpha = nullptr,
                               std::uint64_t* seed = nullptr);

// Model checkpoint: header + f64 parameter segments in W1, b1, W2, b2 order.
void save_model(const std::string& path, const mlp::MlpModel& model,
                const std::string& manifest_hash = "");
mlp::MlpModel load_model(const std::string& path);

// Affinity matrix snapshot.
void save_affinity(const std::string& path, const qdg::AffinityMatrix& affinity,
                   const std::string& manifest_hash = "");
qdg::AffinityMatrix load_affinity(const std::string& path);

// ---- config JSON ----

nlohmann::json sweep_config_to_json(const harness::SweepConfig& cfg);
harness::SweepConfig sweep_config_from_json(const nlohmann::json& j);

nlohmann::json toy_config_to_json(const cluster::ToyModelConfig& cfg);
cluster::ToyModelConfig toy_config_from_json(const nlohmann::json& j);

// ---- sweep artifacts ----

// Writes record.json, curves.csv (scale, subtask_id, freq, loss_bits),
// means.csv (both units), and fits.csv into out_dir. Returns the files
// written.
std::vector<std::string> write_sweep_outputs(const harness::SweepRecord& record,
                                             const std::string& out_dir,
                                             const std::string& manifest_hash);

nlohmann::json sweep_record_to_json(const harness::SweepRecord& record);
harness::SweepRecord sweep_record_from_json(const nlohmann::json& j);

}  // namespace quanta::io
