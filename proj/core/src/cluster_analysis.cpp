#include "quanta/cluster_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "quanta/parallel.hpp"
#include "quanta/rng.hpp"

namespace quanta::cluster {

RankFrequencyCurve rank_frequency(const qdg::ClusterAssignment& assignment) {
  if (assignment.labels.empty())
    throw std::invalid_argument("empty cluster assignment");
  std::vector<std::uint64_t> counts(assignment.n_clusters, 0);
  for (std::uint32_t label : assignment.labels) ++counts[label];
  RankFrequencyCurve curve;
  curve.n_clusters = assignment.n_clusters;
  for (std::uint64_t c : counts) {
    if (c > 0) curve.sizes.push_back(c);
  }
  std::sort(curve.sizes.begin(), curve.sizes.end(), std::greater<>());
  return curve;
}

EnvelopeFit envelope_slope(std::span<const RankFrequencyCurve> curves,
                           std::size_t lo, std::size_t hi) {
  if (curves.empty()) throw std::invalid_argument("no curves");
  if (lo < 1 || hi < lo) throw std::invalid_argument("invalid rank window");

  std::size_t max_rank = 0;
  for (const auto& c : curves) max_rank = std::max(max_rank, c.sizes.size());
  const std::size_t eff_hi = std::min(hi, max_rank);
  if (lo > eff_hi)
    throw std::invalid_argument("rank window is empty for these curves");

  std::vector<double> ranks, env;
  for (std::size_t r = lo; r <= eff_hi; ++r) {
    std::uint64_t best = 0;
    for (const auto& c : curves) {
      if (c.sizes.size() >= r) best = std::max(best, c.sizes[r - 1]);
    }
    if (best == 0) continue;
    ranks.push_back(static_cast<double>(r));
    env.push_back(static_cast<double>(best));
  }

  const auto fit = stats::fit_power_law(ranks, env);
  EnvelopeFit out;
  out.lo = lo;
  out.hi = eff_hi;
  out.slope = fit.exponent;
  out.intercept = fit.prefactor;
  out.r_squared = fit.r_squared;
  out.n_curves = curves.size();
  return out;
}

ToyGradients gen_toy_gradients(const ToyModelConfig& cfg) {
  if (cfg.n_subtasks < 1 || cfg.dim < 1 || !(cfg.amplitude > 0.0) ||
      !(cfg.alpha > 0.0) || cfg.sigma < 0.0)
    throw std::invalid_argument("invalid toy model config");

  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  for (std::uint32_t i = 1; i <= cfg.n_subtasks; ++i) {
    const auto n_i = static_cast<std::uint64_t>(
        std::floor(cfg.amplitude / std::pow(static_cast<double>(i), cfg.alpha)));
    if (n_i == 0) break;  // sizes are nonincreasing in i
    counts.push_back(n_i);
    total += n_i;
  }
  if (total == 0) throw std::invalid_argument("toy config yields no vectors");

  ToyGradients out;
  out.vectors.resize(static_cast<Eigen::Index>(total), cfg.dim);
  out.ground_truth.resize(total);

  Eigen::Index row = 0;
  Eigen::VectorXd mean(cfg.dim);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(i + 1));
    for (std::uint32_t dctr = 0; dctr < cfg.dim; ++dctr) mean[dctr] = rng.next_normal();
    for (std::uint64_t j = 0; j < counts[i]; ++j) {
      for (std::uint32_t dctr = 0; dctr < cfg.dim; ++dctr)
        out.vectors(row, dctr) = mean[dctr] + cfg.sigma * rng.next_normal();
      out.ground_truth[static_cast<std::size_t>(row)] =
          static_cast<std::uint32_t>(i + 1);
      ++row;
    }
  }
  return out;
}

double toy_similarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dimension mismatch");
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx += x[i] * x[i];
    yy += y[i] * y[i];
    xy += x[i] * y[i];
  }
  if (xx == 0.0 || yy == 0.0)
    throw std::domain_error("toy similarity undefined for zero vectors");
  return 1.0 + xy / std::sqrt(xx * yy);
}

qdg::AffinityMatrix toy_affinity(const ToyGradients& gradients) {
  Eigen::MatrixXd normalized = gradients.vectors;
  for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
    const double norm = normalized.row(i).norm();
    if (norm == 0.0)
      throw std::domain_error("toy similarity undefined for zero vectors");
    normalized.row(i) /= norm;
  }
  qdg::AffinityMatrix affinity;
  affinity.kind = qdg::AffinityKind::General;
  affinity.values.noalias() = normalized * normalized.transpose();
  affinity.values = 0.5 * (affinity.values + affinity.values.transpose()).eval();
  affinity.values = (affinity.values.array() + 1.0).cwiseMin(2.0).cwiseMax(0.0);
  return affinity;
}

std::vector<RankFrequencyCurve> toy_cluster_sweep(const ToyModelConfig& cfg) {
  if (cfg.k_list.empty()) throw std::invalid_argument("k_list must be nonempty");
  const ToyGradients grads = gen_toy_gradients(cfg);
  const qdg::AffinityMatrix affinity = toy_affinity(grads);
  const qdg::SpectralModel spectral(affinity);

  std::vector<RankFrequencyCurve> curves;
  curves.reserve(cfg.k_list.size());
  for (std::uint32_t k : cfg.k_list) {
    const auto assignment =
        spectral.cluster(k, derive_seed(cfg.seed, "kmeans", k));
    curves.push_back(rank_frequency(assignment));
  }
  return curves;
}

std::vector<AlphaRecoveryRow> alpha_recovery_sweep(std::span<const double> alphas,
                                                   const ToyModelConfig& base,
                                                   std::size_t window_lo,
                                                   std::size_t window_hi,
                                                   int threads) {
  if (alphas.empty()) throw std::invalid_argument("no alpha values");
  std::vector<AlphaRecoveryRow> rows(alphas.size());
  parallel_jobs(alphas.size(), threads, [&](std::size_t i) {
    ToyModelConfig cfg = base;
    cfg.alpha = alphas[i];
    const auto curves = toy_cluster_sweep(cfg);
    const auto fit = envelope_slope(curves, window_lo, window_hi);
    rows[i] = {alphas[i], fit.slope, fit.slope + alphas[i]};
  });
  return rows;
}

}  // namespace quanta::cluster
