#pragma once

#include <span>
#include <vector>

namespace quanta::stats {

struct PowerLawFit {
  double exponent = 0.0;   // slope of log y vs log x
  double prefactor = 0.0;  // exp(intercept)
  double r_squared = 0.0;
};

// Ordinary least squares on (log x, log y). Needs >= 3 strictly positive
// points.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation with average ranks on ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct Histogram {
  std::vector<double> edges;          // size bins+1, strictly increasing
  std::vector<double> density;        // p(L), sums to 1 when weighted by width
  std::vector<double> loss_weighted;  // L * p(L) at bin centers
  std::size_t dropped = 0;            // values outside [edges.front(), edges.back()]
};

// Normalized histogram of per-sample losses plus the loss-weighted density.
// Bins are half-open [e_i, e_{i+1}); the last bin is closed.
Histogram loss_histogram(std::span<const double> losses,
                         std::span<const double> edges);

}  // namespace quanta::stats
