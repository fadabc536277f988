#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace quanta::parity {

// Multitask sparse parity problem definition. Subsets are reconstructed
// byte-identically from (n_tasks, n, k, seed); alpha only shapes the sampling
// distribution over subtasks.
struct TaskSpec {
  std::uint32_t n_tasks = 1;
  std::uint32_t n = 1;  // task-bit count
  std::uint32_t k = 1;  // parity arity
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint16_t>> subsets;  // 1-based indices, sorted

  std::uint32_t input_dim() const { return n_tasks + n; }
};

TaskSpec build_task_spec(std::uint32_t n_tasks, std::uint32_t n, std::uint32_t k,
                         double alpha, std::uint64_t seed);

// Parity (sum mod 2) of the subset entries of task_bits. Subset indices are
// 1-based into task_bits.
int parity_label(std::span<const std::uint8_t> task_bits,
                 std::span<const std::uint16_t> subset);

// A batch of samples with bit-packed inputs. Row layout: bits [0, n_tasks)
// are the one-hot control prefix, bits [n_tasks, n_tasks + n) the uniform
// task payload.
struct SampleBatch {
  std::uint32_t n_tasks = 0;
  std::uint32_t n = 0;
  std::size_t m = 0;
  std::size_t words_per_row = 0;
  std::vector<std::uint64_t> bits;       // m * words_per_row, LSB-first
  std::vector<std::uint8_t> labels;      // m
  std::vector<std::uint32_t> subtask_ids;  // m, 1-based

  std::uint32_t input_dim() const { return n_tasks + n; }
  bool bit(std::size_t row, std::size_t pos) const {
    const std::uint64_t word = bits[row * words_per_row + pos / 64];
    return (word >> (pos % 64)) & 1u;
  }
};

// Zipf-distributed subtask ids, uniform task bits, parity labels. Each row is
// keyed by (rng_seed, row_offset + row) so generation is reproducible under
// any batching or threading arrangement.
SampleBatch draw_batch(const TaskSpec& spec, std::size_t m, std::uint64_t rng_seed,
                       std::uint64_t row_offset = 0);

// Exactly per_task samples for every subtask, in subtask order. Used for
// low-variance per-subtask loss estimates.
SampleBatch fixed_eval_set(const TaskSpec& spec, std::size_t per_task,
                           std::uint64_t rng_seed);

// Expands rows [begin, begin+count) to a dense {0,1} matrix, one sample per
// row, for the model boundary.
Eigen::MatrixXd to_dense(const SampleBatch& batch, std::size_t begin,
                         std::size_t count);

// Expands an arbitrary row selection into a preallocated matrix
// (rows.size() x input_dim).
void to_dense_into(const SampleBatch& batch, std::span<const std::uint32_t> rows,
                   Eigen::MatrixXd& out);

}  // namespace quanta::parity
