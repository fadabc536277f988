#include <doctest.h>

#include <cmath>
#include <map>

#include "quanta/cluster_analysis.hpp"

using namespace quanta::cluster;
using quanta::qdg::ClusterAssignment;

TEST_CASE("rank_frequency counts and sorts") {
  ClusterAssignment a;
  a.n_clusters = 3;
  a.labels = {0, 0, 1, 2, 0};
  const auto curve = rank_frequency(a);
  CHECK(curve.sizes == std::vector<std::uint64_t>{3, 1, 1});

  ClusterAssignment same;
  same.n_clusters = 4;
  same.labels = std::vector<std::uint32_t>(17, 2);
  CHECK(rank_frequency(same).sizes == std::vector<std::uint64_t>{17});

  // Empty clusters are omitted; sizes sum to the sample count.
  ClusterAssignment gappy;
  gappy.n_clusters = 6;
  gappy.labels = {5, 5, 0, 3, 3, 3};
  const auto g = rank_frequency(gappy);
  CHECK(g.sizes == std::vector<std::uint64_t>{3, 2, 1});
  std::uint64_t total = 0;
  for (auto s : g.sizes) total += s;
  CHECK(total == gappy.labels.size());
}

TEST_CASE("rank_frequency is invariant under label renaming") {
  ClusterAssignment a, b;
  a.n_clusters = 4;
  a.labels = {0, 0, 1, 1, 1, 3};
  b.n_clusters = 4;
  b.labels = {2, 2, 0, 0, 0, 1};  // same partition, relabeled
  CHECK(rank_frequency(a).sizes == rank_frequency(b).sizes);
}

TEST_CASE("envelope fits an exact power law") {
  RankFrequencyCurve curve;
  curve.n_clusters = 100;
  for (std::size_t r = 1; r <= 100; ++r) {
    curve.sizes.push_back(static_cast<std::uint64_t>(
        std::llround(1e6 * std::pow(static_cast<double>(r), -1.4))));
  }
  const std::vector<RankFrequencyCurve> curves = {curve};
  const auto fit = envelope_slope(curves, 1, 100);
  CHECK(std::fabs(fit.slope + 1.4) < 0.01);
  CHECK(fit.r_squared > 0.999);
}

TEST_CASE("envelope is the pointwise maximum") {
  RankFrequencyCurve big, small;
  big.n_clusters = 10;
  small.n_clusters = 10;
  for (std::size_t r = 1; r <= 10; ++r) {
    big.sizes.push_back(2000 / r);
    small.sizes.push_back(1000 / r);
  }
  const std::vector<RankFrequencyCurve> curves = {small, big};
  const auto fit = envelope_slope(curves, 1, 10);
  const std::vector<RankFrequencyCurve> only_big = {big};
  const auto fit_big = envelope_slope(only_big, 1, 10);
  CHECK(fit.slope == doctest::Approx(fit_big.slope));
  CHECK(fit.intercept == doctest::Approx(fit_big.intercept));

  // Window that no curve reaches: error.
  CHECK_THROWS_AS(envelope_slope(curves, 50, 60), std::invalid_argument);
  CHECK_THROWS_AS(envelope_slope(curves, 5, 2), std::invalid_argument);
}

TEST_CASE("gen_toy_gradients sizes and determinism") {
  ToyModelConfig cfg;
  cfg.n_subtasks = 10;
  cfg.amplitude = 1000.0;
  cfg.alpha = 1.0;
  cfg.dim = 8;
  cfg.sigma = 0.3;
  cfg.seed = 4;

  const auto toy = gen_toy_gradients(cfg);
  std::map<std::uint32_t, std::uint64_t> counts;
  for (auto g : toy.ground_truth) ++counts[g];
  CHECK(counts[1] == 1000);
  CHECK(counts[2] == 500);
  CHECK(counts[3] == 333);  // floor(1000/3)
  CHECK(counts[10] == 100);

  const auto again = gen_toy_gradients(cfg);
  CHECK((toy.vectors - again.vectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sigma = 0 collapses each subtask onto its mean") {
  ToyModelConfig cfg;
  cfg.n_subtasks = 5;
  cfg.amplitude = 12.0;
  cfg.alpha = 1.0;
  cfg.dim = 6;
  cfg.sigma = 0.0;
  cfg.seed = 9;
  const auto toy = gen_toy_gradients(cfg);
  for (Eigen::Index i = 1; i < toy.vectors.rows(); ++i) {
    if (toy.ground_truth[i] == toy.ground_truth[i - 1]) {
      CHECK((toy.vectors.row(i) - toy.vectors.row(i - 1)).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }
}

TEST_CASE("subtask sample means concentrate around the drawn center") {
  ToyModelConfig cfg;
  cfg.n_subtasks = 1;
  cfg.amplitude = 4000.0;
  cfg.alpha = 1.0;
  cfg.dim = 4;
  cfg.sigma = 1.0;
  cfg.seed = 12;
  const auto toy = gen_toy_gradients(cfg);
  const auto n = toy.vectors.rows();
  REQUIRE(n == 4000);
  // With sigma = 0 the same seed reproduces the center itself.
  ToyModelConfig center_cfg = cfg;
  center_cfg.sigma = 0.0;
  center_cfg.amplitude = 1.0;
  const auto center_only = gen_toy_gradients(center_cfg);
  const Eigen::VectorXd center = center_only.vectors.row(0);
  const Eigen::VectorXd mean = toy.vectors.colwise().mean();
  const double bound = 3.0 * cfg.sigma / std::sqrt(static_cast<double>(n));
  for (std::uint32_t d = 0; d < cfg.dim; ++d) {
    CHECK(std::fabs(mean[d] - center[d]) < bound * 3.0);
  }
}

TEST_CASE("toy_similarity identities") {
  std::vector<double> x = {1.0, 2.0, -3.0};
  std::vector<double> minus_x = {-1.0, -2.0, 3.0};
  std::vector<double> ortho = {2.0, -1.0, 0.0};
  CHECK(toy_similarity(x, x) == doctest::Approx(2.0));
  CHECK(toy_similarity(x, minus_x) == doctest::Approx(0.0));
  CHECK(toy_similarity(x, ortho) == doctest::Approx(1.0));
  std::vector<double> zero = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(toy_similarity(x, zero), std::domain_error);
}

TEST_CASE("within-subtask similarity exceeds between-subtask similarity") {
  ToyModelConfig cfg;
  cfg.n_subtasks = 12;
  cfg.amplitude = 24.0;
  cfg.alpha = 1.0;
  cfg.dim = 1000;
  cfg.sigma = 2.0;
  cfg.seed = 21;
  const auto toy = gen_toy_gradients(cfg);
  const auto aff = toy_affinity(toy);

  double within = 0.0, between = 0.0;
  std::size_t nw = 0, nb = 0;
  const auto m = toy.vectors.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (toy.ground_truth[i] == toy.ground_truth[j]) {
        within += aff.values(i, j);
        ++nw;
      } else {
        between += aff.values(i, j);
        ++nb;
      }
    }
  }
  within /= static_cast<double>(nw);
  between /= static_cast<double>(nb);
  // Cosine noise scale is ~1/sqrt(d); demand a gap far beyond 5 sigma of the
  // pair-averaged noise.
  const double noise = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  CHECK(within - between > 5.0 * noise / std::sqrt(static_cast<double>(nb)));
  CHECK(within - between > 0.05);
}

TEST_CASE("noiseless toy sweep separates perfectly") {
  ToyModelConfig cfg;
  cfg.n_subtasks = 12;
  cfg.amplitude = 30.0;
  cfg.alpha = 1.0;
  cfg.dim = 64;
  cfg.sigma = 0.0;
  cfg.seed = 2;
  // Retained subtasks: n_i = floor(30/i) >= 1 up to i = 30, capped at 12.
  cfg.k_list = {12};
  const auto curves = toy_cluster_sweep(cfg);
  REQUIRE(curves.size() == 1);

  const auto toy = gen_toy_gradients(cfg);
  const auto aff = toy_affinity(toy);
  const auto assignment =
      quanta::qdg::spectral_cluster(aff, 12, quanta::derive_seed(2, "kmeans", 12));
  CHECK(quanta::qdg::cluster_purity(assignment, toy.ground_truth) >= 0.99);
}

TEST_CASE("k = 1 sweep yields the single-cluster curve") {
  ToyModelConfig cfg;
  cfg.n_subtasks = 4;
  cfg.amplitude = 9.0;
  cfg.alpha = 1.0;
  cfg.dim = 10;
  cfg.sigma = 0.5;
  cfg.seed = 8;
  cfg.k_list = {1};
  const auto curves = toy_cluster_sweep(cfg);
  REQUIRE(curves.size() == 1);
  std::uint64_t total = 9 + 4 + 3 + 2;
  CHECK(curves[0].sizes == std::vector<std::uint64_t>{total});
}

TEST_CASE("alpha recovery rows are reproducible bit-for-bit") {
  ToyModelConfig cfg;
  cfg.n_subtasks = 10;
  cfg.amplitude = 20.0;
  cfg.alpha = 1.0;
  cfg.dim = 16;
  cfg.sigma = 0.5;
  cfg.seed = 3;
  cfg.k_list = {4, 8};
  const std::vector<double> alphas = {0.9, 1.1};
  const auto a = alpha_recovery_sweep(alphas, cfg, 1, 10, 1);
  const auto b = alpha_recovery_sweep(alphas, cfg, 1, 10, 2);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].alpha == b[i].alpha);
    CHECK(a[i].slope == b[i].slope);
    CHECK(a[i].error == b[i].error);
  }
}
