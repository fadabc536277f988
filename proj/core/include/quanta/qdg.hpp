#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "quanta/mlp.hpp"
#include "quanta/parity.hpp"

namespace quanta::qdg {

// Row-normalized per-sample gradients of retained samples. Rows have unit
// Euclidean norm; samples whose raw gradient is exactly zero are dropped
// before normalization.
struct GradMatrix {
  Eigen::MatrixXd rows;                    // m x param_count
  std::vector<std::int64_t> sample_ids;    // original row indices
  std::vector<std::uint32_t> ground_truth;  // subtask ids (parity), 1-based
  std::size_t dropped_zero_norm = 0;
};

// Keeps samples with per-sample loss < loss_filter_nats, then fills one
// normalized gradient row per sample over all model parameters.
GradMatrix build_grad_matrix(const mlp::MlpModel& model,
                             const parity::SampleBatch& samples,
                             double loss_filter_nats = 0.1);

enum class AffinityKind { Cosine, Angular, General };

struct AffinityMatrix {
  Eigen::MatrixXd values;  // symmetric
  AffinityKind kind = AffinityKind::Cosine;
};

// Gram matrix of the normalized gradient rows, entries clamped to [-1, 1].
AffinityMatrix cosine_affinity(const GradMatrix& grads);

// Elementwise 1 - arccos(c)/pi, mapping cosines to [0, 1] with unit diagonal.
AffinityMatrix angular_affinity(const AffinityMatrix& cosine);

struct ClusterAssignment {
  std::vector<std::uint32_t> labels;  // in [0, n_clusters); may skip values
  std::uint32_t n_clusters = 0;
  std::uint64_t seed = 0;
  std::vector<double> eigenvalues;  // smallest n_clusters + 1 Laplacian values
  double kmeans_inertia = 0.0;
  int ql_iterations = 0;
};

// Precomputed spectral embedding of one affinity matrix; lets several
// n_clusters settings reuse a single eigendecomposition.
class SpectralModel {
 public:
  explicit SpectralModel(const AffinityMatrix& affinity);

  ClusterAssignment cluster(std::uint32_t n_clusters, std::uint64_t seed) const;
  const Eigen::VectorXd& laplacian_eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& laplacian_eigenvectors() const { return eigenvectors_; }
  int ql_iterations() const { return ql_iterations_; }

 private:
  Eigen::VectorXd eigenvalues_;   // ascending
  Eigen::MatrixXd eigenvectors_;  // columns
  int ql_iterations_ = 0;
};

// Symmetric-normalized Laplacian L = I - D^{-1/2} A D^{-1/2}, eigenvectors of
// the n_clusters smallest eigenvalues, row-normalized embedding, then k-means
// (plus-plus init, 10 restarts, 300 iterations).
ClusterAssignment spectral_cluster(const AffinityMatrix& affinity,
                                   std::uint32_t n_clusters, std::uint64_t seed);

// Fraction of samples whose cluster's majority ground-truth class matches
// their own.
double cluster_purity(const ClusterAssignment& assignment,
                      std::span<const std::uint32_t> ground_truth);

}  // namespace quanta::qdg
