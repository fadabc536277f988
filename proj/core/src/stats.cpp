#include "quanta/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace quanta::stats {

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("size mismatch");
  if (x.size() < 3) throw std::invalid_argument("power-law fit needs >= 3 points");

  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::domain_error("power-law fit needs strictly positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }

  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::domain_error("all x values identical");

  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.prefactor = std::exp(my - fit.exponent * mx);
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("size mismatch");
  if (a.size() < 2) throw std::invalid_argument("need >= 2 points");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const std::size_t n = a.size();
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
    sab += (ra[i] - ma) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Histogram loss_histogram(std::span<const double> losses,
                         std::span<const double> edges) {
  if (losses.empty()) throw std::invalid_argument("no losses to histogram");
  if (edges.size() < 2) throw std::invalid_argument("need >= 2 bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1]))
      throw std::invalid_argument("bin edges must be strictly increasing");
  }

  const std::size_t bins = edges.size() - 1;
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.density.assign(bins, 0.0);
  h.loss_weighted.assign(bins, 0.0);

  std::size_t kept = 0;
  for (double v : losses) {
    if (v < edges.front() || v > edges.back()) {
      ++h.dropped;
      continue;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t bin = static_cast<std::size_t>(it - edges.begin());
    bin = bin == 0 ? 0 : bin - 1;
    if (bin >= bins) bin = bins - 1;  // top edge belongs to the last bin
    h.density[bin] += 1.0;
    ++kept;
  }
  if (kept == 0) throw std::invalid_argument("all losses fall outside the bins");

  for (std::size_t i = 0; i < bins; ++i) {
    const double width = edges[i + 1] - edges[i];
    h.density[i] /= static_cast<double>(kept) * width;
    const double center = 0.5 * (edges[i] + edges[i + 1]);
    h.loss_weighted[i] = center * h.density[i];
  }
  return h;
}

}  // namespace quanta::stats
