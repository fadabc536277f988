#include "quanta/qdg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "quanta/eigensolver.hpp"
#include "quanta/kmeans.hpp"

namespace quanta::qdg {

GradMatrix build_grad_matrix(const mlp::MlpModel& model,
                             const parity::SampleBatch& samples,
                             double loss_filter_nats) {
  if (samples.m == 0) throw std::invalid_argument("empty sample batch");
  if (samples.input_dim() != static_cast<std::uint32_t>(model.input_dim()))
    throw std::invalid_argument("sample width does not match model input_dim");

  // Per-sample losses in blocks, keeping indices below the filter.
  std::vector<std::int64_t> kept;
  constexpr std::size_t kBlock = 4096;
  for (std::size_t begin = 0; begin < samples.m; begin += kBlock) {
    const std::size_t count = std::min(kBlock, samples.m - begin);
    const Eigen::MatrixXd x = parity::to_dense(samples, begin, count);
    const auto fwd = mlp::forward_loss(
        model, x, std::span<const std::uint8_t>(samples.labels).subspan(begin, count));
    for (std::size_t i = 0; i < count; ++i) {
      if (fwd.per_sample[static_cast<Eigen::Index>(i)] < loss_filter_nats)
        kept.push_back(static_cast<std::int64_t>(begin + i));
    }
  }
  if (kept.empty())
    throw std::runtime_error("no samples pass the loss filter");

  GradMatrix result;
  const auto p = model.param_count();
  result.rows.resize(static_cast<Eigen::Index>(kept.size()), p);
  Eigen::VectorXd grad(p);
  Eigen::Index out_row = 0;
  for (std::int64_t idx : kept) {
    const Eigen::MatrixXd x = parity::to_dense(samples, static_cast<std::size_t>(idx), 1);
    mlp::per_sample_grad(model, x.row(0).transpose(), samples.labels[idx],
                         std::span<double>(grad.data(), static_cast<std::size_t>(p)));
    const double norm = grad.norm();
    if (norm == 0.0) {
      ++result.dropped_zero_norm;
      continue;
    }
    result.rows.row(out_row) = grad.transpose() / norm;
    result.sample_ids.push_back(idx);
    result.ground_truth.push_back(samples.subtask_ids[idx]);
    ++out_row;
  }
  result.rows.conservativeResize(out_row, p);
  if (out_row == 0)
    throw std::runtime_error("all retained samples had zero gradients");
  return result;
}

AffinityMatrix cosine_affinity(const GradMatrix& grads) {
  AffinityMatrix affinity;
  affinity.kind = AffinityKind::Cosine;
  affinity.values.noalias() = grads.rows * grads.rows.transpose();
  // Exact symmetry, then clamp round-off excursions outside [-1, 1].
  affinity.values = 0.5 * (affinity.values + affinity.values.transpose()).eval();
  affinity.values = affinity.values.cwiseMin(1.0).cwiseMax(-1.0);
  return affinity;
}

AffinityMatrix angular_affinity(const AffinityMatrix& cosine) {
  if (cosine.kind != AffinityKind::Cosine)
    throw std::invalid_argument("angular affinity expects a cosine matrix");
  AffinityMatrix angular;
  angular.kind = AffinityKind::Angular;
  angular.values =
      cosine.values.unaryExpr([](double c) { return 1.0 - std::acos(c) / M_PI; });
  angular.values.diagonal().setOnes();
  return angular;
}

SpectralModel::SpectralModel(const AffinityMatrix& affinity) {
  const Eigen::MatrixXd& a = affinity.values;
  if (a.rows() != a.cols()) throw std::invalid_argument("affinity must be square");
  const Eigen::Index m = a.rows();

  const Eigen::VectorXd degrees = a.rowwise().sum();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(degrees[i] > 0.0))
      throw std::runtime_error("isolated node: affinity row " +
                               std::to_string(i) + " has nonpositive degree");
  }
  const Eigen::VectorXd inv_sqrt = degrees.array().rsqrt();

  Eigen::MatrixXd laplacian =
      (-a).cwiseProduct(inv_sqrt * inv_sqrt.transpose());
  laplacian.diagonal().array() += 1.0;

  auto eig = linalg::symmetric_eigen(laplacian);
  eigenvalues_ = std::move(eig.eigenvalues);
  eigenvectors_ = std::move(eig.eigenvectors);
  ql_iterations_ = eig.ql_iterations;
}

ClusterAssignment SpectralModel::cluster(std::uint32_t n_clusters,
                                         std::uint64_t seed) const {
  const Eigen::Index m = eigenvectors_.rows();
  if (n_clusters < 1 || static_cast<Eigen::Index>(n_clusters) > m)
    throw std::invalid_argument("n_clusters must be in [1, n_samples]");

  ClusterAssignment assignment;
  assignment.n_clusters = n_clusters;
  assignment.seed = seed;
  assignment.ql_iterations = ql_iterations_;
  const Eigen::Index n_eig =
      std::min<Eigen::Index>(static_cast<Eigen::Index>(n_clusters) + 1, m);
  assignment.eigenvalues.assign(eigenvalues_.data(), eigenvalues_.data() + n_eig);

  if (n_clusters == 1) {
    assignment.labels.assign(static_cast<std::size_t>(m), 0);
    return assignment;
  }

  Eigen::MatrixXd embedding = eigenvectors_.leftCols(n_clusters);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  auto km = quanta::cluster::kmeans(embedding, n_clusters, seed, 10, 300);
  assignment.labels = std::move(km.labels);
  assignment.kmeans_inertia = km.inertia;
  return assignment;
}

ClusterAssignment spectral_cluster(const AffinityMatrix& affinity,
                                   std::uint32_t n_clusters, std::uint64_t seed) {
  return SpectralModel(affinity).cluster(n_clusters, seed);
}

double cluster_purity(const ClusterAssignment& assignment,
                      std::span<const std::uint32_t> ground_truth) {
  if (assignment.labels.size() != ground_truth.size())
    throw std::invalid_argument("label/ground-truth length mismatch");
  if (assignment.labels.empty()) throw std::invalid_argument("empty assignment");

  std::map<std::uint32_t, std::map<std::uint32_t, std::size_t>> contingency;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    ++contingency[assignment.labels[i]][ground_truth[i]];
  }
  std::size_t majority_total = 0;
  for (const auto& entry : contingency) {
    std::size_t best = 0;
    for (const auto& class_count : entry.second)
      best = std::max(best, class_count.second);
    majority_total += best;
  }
  return static_cast<double>(majority_total) /
         static_cast<double>(ground_truth.size());
}

}  // namespace quanta::qdg
