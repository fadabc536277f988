#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "quanta/qdg.hpp"
#include "quanta/stats.hpp"

namespace quanta::cluster {

// Cluster sizes sorted descending; empty clusters omitted. Sizes sum to the
// number of clustered samples.
struct RankFrequencyCurve {
  std::uint32_t n_clusters = 0;
  std::vector<std::uint64_t> sizes;
};

RankFrequencyCurve rank_frequency(const qdg::ClusterAssignment& assignment);

struct EnvelopeFit {
  std::size_t lo = 1;  // fitted rank window (1-based, inclusive)
  std::size_t hi = 1;
  double slope = 0.0;
  double intercept = 0.0;  // prefactor of the fitted power law
  double r_squared = 0.0;
  std::size_t n_curves = 0;
};

// Pointwise-max envelope across curves, fitted as a power law of rank over
// [lo, hi] (intersected with the ranks any curve reaches).
EnvelopeFit envelope_slope(std::span<const RankFrequencyCurve> curves,
                           std::size_t lo, std::size_t hi);

// Gaussian cluster model for probing envelope-slope bias: subtask i carries
// n_i = floor(amplitude / i^alpha) vectors drawn from N(m_i, sigma^2 I_d)
// with m_i ~ N(0, I_d). Subtasks with n_i = 0 are dropped.
struct ToyModelConfig {
  std::uint32_t n_subtasks = 300;
  double amplitude = 300.0;
  double alpha = 1.0;
  std::uint32_t dim = 300;
  double sigma = 2.0;
  std::vector<std::uint32_t> k_list = {30, 60, 150};
  std::uint64_t seed = 0;
};

struct ToyGradients {
  Eigen::MatrixXd vectors;                  // sum(n_i) x dim
  std::vector<std::uint32_t> ground_truth;  // subtask per row, 1-based
};

ToyGradients gen_toy_gradients(const ToyModelConfig& cfg);

// 1 + cosine similarity, in [0, 2]. Throws on zero vectors.
double toy_similarity(std::span<const double> x, std::span<const double> y);

// Full pairwise toy similarity used directly as the spectral affinity.
qdg::AffinityMatrix toy_affinity(const ToyGradients& gradients);

// One rank-frequency curve per entry of cfg.k_list, sharing a single spectral
// embedding of the toy similarity matrix.
std::vector<RankFrequencyCurve> toy_cluster_sweep(const ToyModelConfig& cfg);

struct AlphaRecoveryRow {
  double alpha = 0.0;
  double slope = 0.0;  // fitted envelope slope
  double error = 0.0;  // slope - (-alpha)
};

// Repeats the toy sweep for each alpha and reports the envelope-slope error.
// Rows are computed as independent jobs when threads > 1.
std::vector<AlphaRecoveryRow> alpha_recovery_sweep(std::span<const double> alphas,
                                                   const ToyModelConfig& base,
                                                   std::size_t window_lo,
                                                   std::size_t window_hi,
                                                   int threads = 1);

}  // namespace quanta::cluster
