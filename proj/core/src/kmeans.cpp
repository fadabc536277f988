#include "quanta/kmeans.hpp"

#include <limits>
#include <stdexcept>

#include "quanta/rng.hpp"

namespace quanta::cluster {

namespace {

// Squared distances from every point to every center via the expansion
// |x - c|^2 = |x|^2 - 2 x.c + |c|^2 (one gemm per call).
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points,
                                  const Eigen::VectorXd& point_norms,
                                  const Eigen::MatrixXd& centers) {
  const Eigen::VectorXd center_norms = centers.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * (points * centers.transpose());
  d2.colwise() += point_norms;
  d2.rowwise() += center_norms.transpose();
  return d2.cwiseMax(0.0);
}

Eigen::MatrixXd plus_plus_init(const Eigen::MatrixXd& points, std::uint32_t k,
                               RngStream& rng) {
  const auto m = static_cast<std::size_t>(points.rows());
  Eigen::MatrixXd centers(k, points.cols());
  const auto first = static_cast<Eigen::Index>(rng.next_below(m));
  centers.row(0) = points.row(first);

  Eigen::VectorXd min_d2 =
      (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (std::uint32_t c = 1; c < k; ++c) {
    const double total = min_d2.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      // Sample proportional to squared distance from the chosen centers.
      double u = rng.next_double() * total;
      pick = points.rows() - 1;
      for (Eigen::Index i = 0; i < points.rows(); ++i) {
        u -= min_d2[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.next_below(m));
    }
    centers.row(c) = points.row(pick);
    const Eigen::VectorXd d2 =
        (points.rowwise() - centers.row(c)).rowwise().squaredNorm();
    min_d2 = min_d2.cwiseMin(d2);
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, std::uint32_t k,
                    std::uint64_t seed, int restarts, int max_iter) {
  const Eigen::Index m = points.rows();
  if (m < 1) throw std::invalid_argument("kmeans needs at least one point");
  if (k < 1 || static_cast<Eigen::Index>(k) > m)
    throw std::invalid_argument("n_clusters must be in [1, n_points]");

  const Eigen::VectorXd point_norms = points.rowwise().squaredNorm();
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < restarts; ++restart) {
    RngStream rng(seed, static_cast<std::uint64_t>(restart));
    Eigen::MatrixXd centers = plus_plus_init(points, k, rng);
    std::vector<std::uint32_t> labels(m, 0);
    std::vector<std::uint32_t> prev(m, std::numeric_limits<std::uint32_t>::max());

    int iter = 0;
    double inertia = 0.0;
    for (; iter < max_iter; ++iter) {
      const Eigen::MatrixXd d2 = squared_distances(points, point_norms, centers);
      inertia = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index arg;
        inertia += d2.row(i).minCoeff(&arg);
        labels[i] = static_cast<std::uint32_t>(arg);
      }
      if (labels == prev) break;
      prev = labels;

      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      std::vector<std::int64_t> counts(k, 0);
      for (Eigen::Index i = 0; i < m; ++i) {
        sums.row(labels[i]) += points.row(i);
        ++counts[labels[i]];
      }
      for (std::uint32_t c = 0; c < k; ++c) {
        if (counts[c] > 0) centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      }
    }

    if (inertia < best.inertia) {
      best.labels = labels;
      best.centers = centers;
      best.inertia = inertia;
      best.iterations = iter;
    }
  }
  return best;
}

}  // namespace quanta::cluster
