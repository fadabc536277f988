#include "quanta/parity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "quanta/rng.hpp"
#include "quanta/theory.hpp"

namespace quanta::parity {

namespace {

// Cumulative Zipf weights over ranks 1..n_tasks, normalized to end at 1.
std::vector<double> subtask_cdf(std::uint32_t n_tasks, double alpha) {
  std::vector<double> cdf(n_tasks);
  double acc = 0.0;
  for (std::uint32_t i = 0; i < n_tasks; ++i) {
    acc += std::pow(static_cast<double>(i + 1), -(alpha + 1.0));
    cdf[i] = acc;
  }
  for (double& c : cdf) c /= acc;
  cdf.back() = 1.0;
  return cdf;
}

std::uint32_t sample_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto idx = static_cast<std::size_t>(it - cdf.begin());
  return static_cast<std::uint32_t>(std::min(idx, cdf.size() - 1)) + 1;
}

void set_bit(SampleBatch& b, std::size_t row, std::size_t pos) {
  b.bits[row * b.words_per_row + pos / 64] |= (std::uint64_t{1} << (pos % 64));
}

// Fills the task-bit payload of a row from uniform words and returns the
// parity of the given subset.
std::uint8_t fill_task_bits(SampleBatch& batch, std::size_t row, RngStream& rng,
                            const std::vector<std::uint16_t>& subset) {
  const std::uint32_t n = batch.n;
  const std::uint32_t n_tasks = batch.n_tasks;
  std::uint64_t word = 0;
  int have = 0;
  for (std::uint32_t j = 0; j < n; ++j) {
    if (have == 0) {
      word = rng.next_u64();
      have = 64;
    }
    if (word & 1u) set_bit(batch, row, n_tasks + j);
    word >>= 1;
    --have;
  }
  std::uint8_t parity = 0;
  for (std::uint16_t idx : subset) {
    parity ^= static_cast<std::uint8_t>(batch.bit(row, n_tasks + idx - 1));
  }
  return parity;
}

SampleBatch make_empty(const TaskSpec& spec, std::size_t m) {
  SampleBatch batch;
  batch.n_tasks = spec.n_tasks;
  batch.n = spec.n;
  batch.m = m;
  batch.words_per_row = (spec.input_dim() + 63) / 64;
  batch.bits.assign(m * batch.words_per_row, 0);
  batch.labels.assign(m, 0);
  batch.subtask_ids.assign(m, 0);
  return batch;
}

}  // namespace

TaskSpec build_task_spec(std::uint32_t n_tasks, std::uint32_t n, std::uint32_t k,
                         double alpha, std::uint64_t seed) {
  if (n_tasks < 1 || n < 1) throw std::invalid_argument("n_tasks and n must be >= 1");
  if (k < 1 || k > n) throw std::invalid_argument("parity arity k must satisfy 1 <= k <= n");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");

  TaskSpec spec{n_tasks, n, k, alpha, seed, {}};
  spec.subsets.resize(n_tasks);
  std::vector<std::uint16_t> pool(n);
  for (std::uint32_t i = 0; i < n_tasks; ++i) {
    RngStream rng(seed, i);
    std::iota(pool.begin(), pool.end(), std::uint16_t{1});
    // Partial Fisher-Yates: the first k entries become the subset.
    for (std::uint32_t j = 0; j < k; ++j) {
      const auto pick = j + rng.next_below(n - j);
      std::swap(pool[j], pool[pick]);
    }
    spec.subsets[i].assign(pool.begin(), pool.begin() + k);
    std::sort(spec.subsets[i].begin(), spec.subsets[i].end());
  }
  return spec;
}

int parity_label(std::span<const std::uint8_t> task_bits,
                 std::span<const std::uint16_t> subset) {
  int parity = 0;
  for (std::uint16_t idx : subset) {
    if (idx < 1 || idx > task_bits.size())
      throw std::out_of_range("subset index outside task bits");
    parity ^= (task_bits[idx - 1] & 1);
  }
  return parity;
}

SampleBatch draw_batch(const TaskSpec& spec, std::size_t m, std::uint64_t rng_seed,
                       std::uint64_t row_offset) {
  if (m < 1) throw std::invalid_argument("batch size must be >= 1");
  SampleBatch batch = make_empty(spec, m);
  const auto cdf = subtask_cdf(spec.n_tasks, spec.alpha);
  for (std::size_t r = 0; r < m; ++r) {
    RngStream rng(rng_seed, row_offset + r);
    const std::uint32_t task = sample_cdf(cdf, rng.next_double());
    batch.subtask_ids[r] = task;
    set_bit(batch, r, task - 1);
    batch.labels[r] = fill_task_bits(batch, r, rng, spec.subsets[task - 1]);
  }
  return batch;
}

SampleBatch fixed_eval_set(const TaskSpec& spec, std::size_t per_task,
                           std::uint64_t rng_seed) {
  if (per_task < 1) throw std::invalid_argument("per_task must be >= 1");
  SampleBatch batch = make_empty(spec, per_task * spec.n_tasks);
  for (std::uint32_t task = 1; task <= spec.n_tasks; ++task) {
    for (std::size_t j = 0; j < per_task; ++j) {
      const std::size_t r = static_cast<std::size_t>(task - 1) * per_task + j;
      RngStream rng(rng_seed, r);
      batch.subtask_ids[r] = task;
      set_bit(batch, r, task - 1);
      batch.labels[r] = fill_task_bits(batch, r, rng, spec.subsets[task - 1]);
    }
  }
  return batch;
}

namespace {

inline void expand_row(const SampleBatch& batch, std::size_t row,
                       Eigen::MatrixXd& out, Eigen::Index out_row) {
  const std::size_t dim = batch.input_dim();
  const std::uint64_t* words = batch.bits.data() + row * batch.words_per_row;
  for (std::size_t j = 0; j < dim; ++j) {
    out(out_row, static_cast<Eigen::Index>(j)) =
        static_cast<double>((words[j / 64] >> (j % 64)) & 1u);
  }
}

}  // namespace

Eigen::MatrixXd to_dense(const SampleBatch& batch, std::size_t begin,
                         std::size_t count) {
  if (begin + count > batch.m) throw std::out_of_range("row range outside batch");
  Eigen::MatrixXd x(count, batch.input_dim());
  for (std::size_t i = 0; i < count; ++i) {
    expand_row(batch, begin + i, x, static_cast<Eigen::Index>(i));
  }
  return x;
}

void to_dense_into(const SampleBatch& batch, std::span<const std::uint32_t> rows,
                   Eigen::MatrixXd& out) {
  if (out.rows() != static_cast<Eigen::Index>(rows.size()) ||
      out.cols() != static_cast<Eigen::Index>(batch.input_dim()))
    throw std::invalid_argument("output matrix shape mismatch");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= batch.m) throw std::out_of_range("row index outside batch");
    expand_row(batch, rows[i], out, static_cast<Eigen::Index>(i));
  }
}

}  // namespace quanta::parity
