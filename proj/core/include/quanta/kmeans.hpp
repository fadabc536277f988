#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace quanta::cluster {

struct KMeansResult {
  std::vector<std::uint32_t> labels;  // one per point
  Eigen::MatrixXd centers;            // k x d (rows for empty clusters kept)
  double inertia = 0.0;               // sum of squared distances to centers
  int iterations = 0;                 // Lloyd iterations of the winning restart
};

// Lloyd's algorithm with plus-plus initialization, several restarts, and the
// best-inertia labeling returned. Points are rows. Fully deterministic per
// (points, k, seed). Empty clusters are allowed and keep their last center.
KMeansResult kmeans(const Eigen::MatrixXd& points, std::uint32_t k,
                    std::uint64_t seed, int restarts = 10, int max_iter = 300);

}  // namespace quanta::cluster
