#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "quanta/io.hpp"
#include "quanta/manifest.hpp"

using namespace quanta;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("quanta_test_" + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("csv builder produces parseable locale-free output") {
  io::CsvBuilder csv({"a", "b", "c"}, "cafe1234");
  csv.cell(1.0 / 3.0).cell(std::int64_t{-7}).cell(std::string("x")).end_row();
  csv.cell(0.1).cell(std::uint64_t{42}).cell(std::string("y")).end_row();

  TempDir dir;
  const auto path = dir.file("t.csv");
  csv.save(path);

  const auto table = io::read_csv(path);
  REQUIRE(table.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.comments.size() == 1);
  CHECK(table.comments[0].find("cafe1234") != std::string::npos);
  // 17 significant digits round-trip exactly.
  CHECK(std::stod(table.rows[0][0]) == 1.0 / 3.0);
  CHECK(std::stod(table.rows[1][0]) == 0.1);
  CHECK(table.column("b") == 1);
  CHECK_THROWS_AS(table.column("nope"), std::runtime_error);
}

TEST_CASE("csv builder enforces row shape") {
  io::CsvBuilder csv({"a", "b"});
  csv.cell(1.0);
  CHECK_THROWS_AS(csv.end_row(), std::logic_error);
}

TEST_CASE("dataset file round trip") {
  const auto spec = parity::build_task_spec(6, 70, 3, 0.4, 11);
  const auto batch = parity::draw_batch(spec, 257, 5);

  TempDir dir;
  const auto path = dir.file("d.bin");
  io::save_batch(path, batch, spec.alpha, spec.seed, "abc123");

  double alpha = 0.0;
  std::uint64_t seed = 0;
  const auto loaded = io::load_batch(path, &alpha, &seed);
  CHECK(alpha == spec.alpha);
  CHECK(seed == spec.seed);
  CHECK(loaded.n_tasks == batch.n_tasks);
  CHECK(loaded.n == batch.n);
  CHECK(loaded.m == batch.m);
  CHECK(loaded.bits == batch.bits);
  CHECK(loaded.labels == batch.labels);
  // Subtask ids recovered from the control bits.
  CHECK(loaded.subtask_ids == batch.subtask_ids);
}

TEST_CASE("model checkpoint round trip is bit exact") {
  const auto model = mlp::init_model(23, 9, 3);
  TempDir dir;
  const auto path = dir.file("m.bin");
  io::save_model(path, model, "");
  const auto loaded = io::load_model(path);
  CHECK(loaded.input_dim() == 23);
  CHECK(loaded.width() == 9);
  CHECK(loaded.params() == model.params());
}

TEST_CASE("corrupt magic is rejected") {
  TempDir dir;
  const auto path = dir.file("bad.bin");
  io::write_text_file(path, "not a real file, just text padding 0123456789");
  CHECK_THROWS_AS(io::load_model(path), std::runtime_error);
  CHECK_THROWS_AS(io::load_batch(path), std::runtime_error);
}

TEST_CASE("affinity round trip") {
  qdg::AffinityMatrix aff;
  aff.kind = qdg::AffinityKind::Angular;
  aff.values.resize(3, 3);
  aff.values << 1.0, 0.25, 0.5, 0.25, 1.0, 0.75, 0.5, 0.75, 1.0;
  TempDir dir;
  const auto path = dir.file("a.bin");
  io::save_affinity(path, aff);
  const auto loaded = io::load_affinity(path);
  CHECK(loaded.kind == qdg::AffinityKind::Angular);
  CHECK(loaded.values == aff.values);
}

TEST_CASE("sweep config json round trip is the identity") {
  harness::SweepConfig cfg;
  cfg.alpha = 0.7;
  cfg.widths = {5, 10};
  cfg.axis = harness::Axis::Data;
  cfg.dataset_sizes = {100, 200};
  cfg.seeds = {3, 4};
  cfg.loss_unit = harness::LossUnit::Nats;
  cfg.zero_output_init = false;

  const auto j = io::sweep_config_to_json(cfg);
  const auto back = io::sweep_config_from_json(j);
  CHECK(io::sweep_config_to_json(back) == j);

  // Round trip through text too.
  const auto reparsed =
      io::sweep_config_from_json(nlohmann::json::parse(j.dump()));
  CHECK(io::sweep_config_to_json(reparsed) == j);
}

TEST_CASE("toy config json round trip") {
  cluster::ToyModelConfig cfg;
  cfg.n_subtasks = 77;
  cfg.alpha = 1.3;
  cfg.k_list = {10, 20};
  const auto j = io::toy_config_to_json(cfg);
  CHECK(io::toy_config_to_json(io::toy_config_from_json(j)) == j);
}

TEST_CASE("sweep record json round trip") {
  harness::SweepRecord record;
  record.config = harness::SweepConfig{};
  record.config.n_tasks = 2;
  record.config_hash = "deadbeef";
  record.frequencies = {0.7, 0.3};
  harness::RunResult run;
  run.scale = 100.0;
  run.width = 10;
  run.seed = 1;
  run.checkpoint_steps = {10, 20};
  run.checkpoint_mean_nats = {0.6, 0.3};
  run.checkpoint_subtask_nats = {{0.6, 0.7}, {0.2, 0.5}};
  run.early_stop_index = 1;
  run.early_stop_step = 20;
  record.runs.push_back(run);

  const auto j = io::sweep_record_to_json(record);
  const auto back = io::sweep_record_from_json(j);
  CHECK(io::sweep_record_to_json(back) == j);
}

TEST_CASE("manifest content hash ignores timestamps") {
  manifest::ExperimentManifest m;
  m.tool_version = "quanta 0.1.0";
  m.command = "quanta theory --alpha 0.4";
  m.config = {{"alpha", 0.4}};
  m.seeds = {{"master", 7}};
  m.started_at = "2026-01-01T00:00:00Z";
  m.finished_at = "2026-01-01T00:05:00Z";

  manifest::ExperimentManifest later = m;
  later.started_at = "2026-02-02T00:00:00Z";
  later.finished_at = "2026-02-02T00:00:01Z";
  CHECK(m.content_hash() == later.content_hash());

  manifest::ExperimentManifest different = m;
  different.seeds["master"] = 8;
  CHECK(m.content_hash() != different.content_hash());

  TempDir dir;
  const auto path = dir.file("manifest.json");
  m.save(path);
  const auto loaded = manifest::ExperimentManifest::load(path);
  CHECK(loaded.content_hash() == m.content_hash());
  CHECK(loaded.command == m.command);
}

TEST_CASE("sha256 known answer") {
  CHECK(manifest::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(manifest::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("write_sweep_outputs emits the artifact set") {
  harness::SweepRecord record;
  record.config = harness::SweepConfig{};
  record.config.n_tasks = 2;
  record.frequencies = {0.7, 0.3};
  for (double scale : {100.0, 200.0, 400.0}) {
    harness::RunResult run;
    run.scale = scale;
    run.width = static_cast<int>(scale);
    run.seed = 0;
    run.checkpoint_steps = {10};
    run.checkpoint_mean_nats = {0.5 * std::pow(scale / 100.0, -0.4)};
    run.checkpoint_subtask_nats = {
        {run.checkpoint_mean_nats[0], run.checkpoint_mean_nats[0]}};
    record.runs.push_back(run);
  }

  TempDir dir;
  const auto written = io::write_sweep_outputs(record, dir.path.string(), "h0");
  REQUIRE(written.size() == 4);
  for (const auto& f : written) CHECK(std::filesystem::exists(f));

  const auto curves = io::read_csv(dir.file("curves.csv"));
  CHECK(curves.header ==
        std::vector<std::string>{"scale", "subtask_id", "freq", "loss_bits"});
  CHECK(curves.rows.size() == 6);  // 2 subtasks x 3 scales

  const auto fits = io::read_csv(dir.file("fits.csv"));
  REQUIRE(fits.rows.size() == 1);
  CHECK(std::stod(fits.rows[0][fits.column("exponent")]) ==
        doctest::Approx(-0.4).epsilon(1e-6));
}
