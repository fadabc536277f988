#include <doctest.h>

#include <cmath>
#include <vector>

#include "quanta/stats.hpp"
#include "quanta/theory.hpp"

using namespace quanta::theory;

namespace {

// Brute-force series oracle: ascending-magnitude partial sum to M plus a
// midpoint integral tail. Independent of the Euler-Maclaurin machinery in
// the implementation.
double zeta_oracle(double s, std::uint64_t m_terms = 100000000ULL) {
  double sum = 0.0;
  for (std::uint64_t k = m_terms; k >= 1; --k) {
    sum += std::pow(static_cast<double>(k), -s);
  }
  const double m = static_cast<double>(m_terms) + 0.5;
  return sum + std::pow(m, 1.0 - s) / (s - 1.0);
}

// Direct tail-mass oracle for sum_{k>n} p_k.
double tail_mass_oracle(double s, std::uint64_t n, double z,
                        std::uint64_t m_terms = 10000000ULL) {
  double sum = 0.0;
  for (std::uint64_t k = m_terms; k > n; --k) {
    sum += std::pow(static_cast<double>(k), -s);
  }
  const double m = static_cast<double>(m_terms) + 0.5;
  return (sum + std::pow(m, 1.0 - s) / (s - 1.0)) / z;
}

}  // namespace

TEST_CASE("zeta matches known identities") {
  CHECK(zeta(2.0) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-9));
  CHECK(std::fabs(zeta(60.0) - 1.0) < 1e-15);
  CHECK(zeta(3.0) == doctest::Approx(1.2020569031595942854).epsilon(1e-11));
  CHECK_THROWS_AS(zeta(1.0), std::domain_error);
  CHECK_THROWS_AS(zeta(0.5), std::domain_error);
}

TEST_CASE("zeta(1.4) agrees with the brute-force series oracle" *
          doctest::timeout(120)) {
  const double oracle = zeta_oracle(1.4);
  CHECK(std::fabs(zeta(1.4) - oracle) <= 1e-9);
}

TEST_CASE("zipf_pmf basics") {
  const auto single = QuantaDistribution::finite(0.7, 1);
  CHECK(zipf_pmf(1, single) == doctest::Approx(1.0).epsilon(1e-15));

  const auto two = QuantaDistribution::finite(1.0, 2);
  CHECK(zipf_pmf(2, two) == doctest::Approx(0.2).epsilon(1e-12));

  // k=1 on infinite support: 1/zeta(1.4), checked against the series oracle.
  const auto inf = QuantaDistribution::infinite(0.4);
  const double oracle = zeta_oracle(1.4, 10000000ULL);
  CHECK(zipf_pmf(1, inf) == doctest::Approx(1.0 / oracle).epsilon(1e-9));

  CHECK_THROWS_AS(zipf_pmf(3, two), std::domain_error);
  CHECK_THROWS_AS(zipf_pmf(0, two), std::domain_error);
}

TEST_CASE("zipf_pmf sums to one") {
  const auto fin = QuantaDistribution::finite(0.4, 500);
  double total = 0.0;
  for (std::uint64_t k = 1; k <= 500; ++k) total += zipf_pmf(k, fin);
  CHECK(std::fabs(total - 1.0) < 1e-12);

  // Infinite support: the n = 0 loss of the Constant(0,1) profile is the
  // total mass.
  const auto inf = QuantaDistribution::infinite(0.4);
  CHECK(expected_loss_exact(0, inf, LossProfile::constant(0.0, 1.0)) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("expected_loss_exact matches the brute-force tail oracle") {
  const auto dist = QuantaDistribution::infinite(0.4);
  const auto profile = LossProfile::constant(0.0, 1.0);
  const double z = zeta_oracle(1.4, 10000000ULL);
  const double oracle = tail_mass_oracle(1.4, 10, z);
  CHECK(std::fabs(expected_loss_exact(10, dist, profile) - oracle) <= 1e-8);
}

TEST_CASE("expected_loss_exact limits") {
  const auto dist = QuantaDistribution::infinite(0.7);
  const auto profile = LossProfile::constant(0.25, 1.5);
  CHECK(expected_loss_exact(0, dist, profile) ==
        doctest::Approx(1.5).epsilon(1e-8));
  CHECK(expected_loss_exact(100000000ULL, dist, profile) ==
        doctest::Approx(0.25).epsilon(1e-6));
  CHECK(limit_loss(dist, profile) == 0.25);
  CHECK(limit_loss(dist, LossProfile::log_freq()) == 0.0);
}

TEST_CASE("expected_loss_exact is nonincreasing in n for every profile") {
  const auto dist = QuantaDistribution::infinite(0.4);
  const std::vector<LossProfile> profiles = {
      LossProfile::constant(0.1, 0.9), LossProfile::log_freq(),
      LossProfile::log_offset(3.0)};
  for (const auto& profile : profiles) {
    double prev = expected_loss_exact(0, dist, profile);
    for (std::uint64_t n : {1, 2, 3, 5, 10, 50, 100, 1000, 10000, 100000}) {
      const double cur = expected_loss_exact(n, dist, profile);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
  // Finite support too.
  const auto fin = QuantaDistribution::finite(0.4, 64);
  double prev = expected_loss_exact(0, fin, LossProfile::log_offset(2.0));
  for (std::uint64_t n = 1; n <= 64; ++n) {
    const double cur = expected_loss_exact(n, fin, LossProfile::log_offset(2.0));
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("closed form: exact power-law ratio for the Constant profile") {
  const auto dist = QuantaDistribution::infinite(0.4);
  const auto profile = LossProfile::constant(0.2, 1.0);
  for (std::uint64_t n : {1, 7, 100, 5000}) {
    const double r = (expected_loss_closed(2 * n, dist, profile) - 0.2) /
                     (expected_loss_closed(n, dist, profile) - 0.2);
    CHECK(r == doctest::Approx(std::pow(2.0, -0.4)).epsilon(1e-12));
  }
}

TEST_CASE("closed form tracks the exact series") {
  const auto dist = QuantaDistribution::infinite(0.4);
  {
    const auto profile = LossProfile::constant(0.0, 1.0);
    const double exact = expected_loss_exact(100, dist, profile);
    const double closed = expected_loss_closed(100, dist, profile);
    CHECK(std::fabs(closed - exact) / exact < 0.02);
  }
  {
    const auto profile = LossProfile::log_freq();
    const double exact = expected_loss_exact(1000, dist, profile);
    const double closed = expected_loss_closed(1000, dist, profile);
    CHECK(std::fabs(closed - exact) / exact < 0.05);
  }
}

TEST_CASE("closed form rejects finite support and n = 0") {
  const auto fin = QuantaDistribution::finite(0.4, 10);
  CHECK_THROWS_AS(expected_loss_closed(5, fin, LossProfile::constant(0, 1)),
                  std::invalid_argument);
  const auto inf = QuantaDistribution::infinite(0.4);
  CHECK_THROWS_AS(expected_loss_closed(0, inf, LossProfile::constant(0, 1)),
                  std::domain_error);
}

TEST_CASE("log-log slope of the exact loss approaches -alpha") {
  for (double alpha : {0.2, 0.4, 1.0}) {
    const auto dist = QuantaDistribution::infinite(alpha);
    const auto profile = LossProfile::constant(0.0, 1.0);
    std::vector<double> ns, losses;
    for (double x = 2.0; x <= 4.0 + 1e-9; x += 0.1) {
      const auto n = static_cast<std::uint64_t>(std::llround(std::pow(10.0, x)));
      ns.push_back(static_cast<double>(n));
      losses.push_back(expected_loss_exact(n, dist, profile));
    }
    const auto fit = quanta::stats::fit_power_law(ns, losses);
    CHECK(std::fabs(fit.exponent + alpha) < 0.02);
  }
}

TEST_CASE("LogFreq slope has a logarithmic correction but stays near -alpha") {
  const double alpha = 0.4;
  const auto dist = QuantaDistribution::infinite(alpha);
  const auto profile = LossProfile::log_freq();
  std::vector<double> ns, losses;
  for (double x = 2.0; x <= 4.0 + 1e-9; x += 0.1) {
    const auto n = static_cast<std::uint64_t>(std::llround(std::pow(10.0, x)));
    ns.push_back(static_cast<double>(n));
    losses.push_back(expected_loss_exact(n, dist, profile));
  }
  const auto fit = quanta::stats::fit_power_law(ns, losses);
  CHECK(std::fabs(fit.exponent + alpha) < 0.1);
}

TEST_CASE("scaling predictions carry the exponent identities") {
  for (double alpha : {0.2, 0.4, 1.0, 2.5}) {
    const auto dist = QuantaDistribution::infinite(alpha);
    const auto params = ScalingPrediction::for_axis(ScaleAxis::Params, dist);
    const auto data = ScalingPrediction::for_axis(ScaleAxis::DataMultiEpoch, dist);
    const auto steps = ScalingPrediction::for_axis(ScaleAxis::Steps, dist);
    CHECK(std::fabs(params.exponent - alpha) < 1e-12);
    CHECK(std::fabs(data.exponent - alpha / (alpha + 1.0)) < 1e-12);
    CHECK(std::fabs(steps.exponent - alpha / (alpha + 1.0)) < 1e-12);
  }
}

TEST_CASE("loss_vs_params floor semantics") {
  const auto dist = QuantaDistribution::infinite(0.4);
  const auto profile = LossProfile::constant(0.0, 1.0);
  const auto pred = ScalingPrediction::for_axis(ScaleAxis::Params, dist, 1.0);

  // Capacity one: identical to the closed form at n = N.
  CHECK(loss_vs_params(500.0, pred, dist, profile) ==
        doctest::Approx(expected_loss_closed(500, dist, profile)).epsilon(1e-12));
  // Below one quantum of capacity: baseline loss.
  const auto pred_c10 = ScalingPrediction::for_axis(ScaleAxis::Params, dist, 10.0);
  CHECK(loss_vs_params(5.0, pred_c10, dist, profile) ==
        doctest::Approx(1.0).epsilon(1e-9));
  // Doubling N scales the reducible loss by 2^-alpha (floor-exact sizes).
  const double l1 = loss_vs_params(4000.0, pred, dist, profile);
  const double l2 = loss_vs_params(8000.0, pred, dist, profile);
  CHECK(l2 / l1 == doctest::Approx(std::pow(2.0, -0.4)).epsilon(1e-9));
  // Matches the exact series within the integral-approximation error.
  const double exact = expected_loss_exact(500, dist, profile);
  CHECK(std::fabs(loss_vs_params(500.0, pred, dist, profile) - exact) / exact <
        0.02);
}

TEST_CASE("loss_vs_data matches the brute-force threshold search") {
  const double alpha = 0.4;
  const auto dist = QuantaDistribution::infinite(alpha);
  const auto profile = LossProfile::constant(0.0, 1.0);
  const auto pred =
      ScalingPrediction::for_axis(ScaleAxis::DataMultiEpoch, dist, 1.0, 1.0);

  const double d_samples = 1e4;
  // Oracle: largest n with D * p_n >= tau.
  std::uint64_t n_oracle = 0;
  for (std::uint64_t n = 1;; ++n) {
    if (d_samples * zipf_pmf(n, dist) < 1.0) break;
    n_oracle = n;
  }
  CHECK(loss_vs_data(d_samples, pred, dist, profile) ==
        doctest::Approx(expected_loss_closed(n_oracle, dist, profile))
            .epsilon(1e-12));

  // Tiny D: nothing learned.
  CHECK(loss_vs_data(1e-6, pred, dist, profile) ==
        doctest::Approx(1.0).epsilon(1e-9));

  // Scaling D by 2^(alpha+1) doubles n.
  const double z = zeta(alpha + 1.0);
  for (std::uint64_t m : {3, 10, 40}) {
    const double d_for_m = z * std::pow(static_cast<double>(m), alpha + 1.0);
    const double l_m = loss_vs_data(d_for_m, pred, dist, profile);
    const double l_2m =
        loss_vs_data(d_for_m * std::pow(2.0, alpha + 1.0), pred, dist, profile);
    CHECK(l_m == doctest::Approx(expected_loss_closed(m, dist, profile)));
    CHECK(l_2m == doctest::Approx(expected_loss_closed(2 * m, dist, profile)));
  }
}

TEST_CASE("loss_vs_steps inverts the step law") {
  const double alpha = 0.4;
  const auto dist = QuantaDistribution::infinite(alpha);
  const auto profile = LossProfile::constant(0.0, 1.0);
  const auto pred =
      ScalingPrediction::for_axis(ScaleAxis::Steps, dist, 1.0, 1.0, 100.0);

  // Below the first-quantum step count: baseline.
  CHECK(loss_vs_steps(50.0, pred, dist, profile) ==
        doctest::Approx(1.0).epsilon(1e-9));

  // S = T * m^(alpha+1) lands exactly on n = m.
  for (std::uint64_t m : {1, 2, 5, 17, 138}) {
    const double s = 100.0 * std::pow(static_cast<double>(m), alpha + 1.0);
    CHECK(loss_vs_steps(s, pred, dist, profile) ==
          doctest::Approx(expected_loss_closed(m, dist, profile)).epsilon(1e-12));
  }

  // Independent evaluation of the full chain at S = 1e5.
  const auto n_chain =
      static_cast<std::uint64_t>(std::floor(std::pow(1e5 / 100.0, 1.0 / 1.4)));
  CHECK(loss_vs_steps(1e5, pred, dist, profile) ==
        doctest::Approx(expected_loss_closed(n_chain, dist, profile))
            .epsilon(1e-12));
}

TEST_CASE("floor_power_inverse is exact on integer powers") {
  for (double e : {1.4, 2.0, 1.1}) {
    for (std::uint64_t m = 1; m <= 60; ++m) {
      const double ratio = std::pow(static_cast<double>(m), e);
      CHECK(floor_power_inverse(ratio, e) == m);
      CHECK(floor_power_inverse(ratio * 0.999, e) == m - 1);
    }
  }
  CHECK(floor_power_inverse(0.5, 1.4) == 0);
}

TEST_CASE("loss_vs_data and loss_vs_steps have slope -alpha/(alpha+1)") {
  const double alpha = 0.4;
  const auto dist = QuantaDistribution::infinite(alpha);
  const auto profile = LossProfile::constant(0.0, 1.0);
  const auto pred_d =
      ScalingPrediction::for_axis(ScaleAxis::DataMultiEpoch, dist, 1.0, 1.0);
  const auto pred_s =
      ScalingPrediction::for_axis(ScaleAxis::Steps, dist, 1.0, 1.0, 1.0);

  std::vector<double> xs, ld, ls;
  for (double x = 5.0; x <= 8.0 + 1e-9; x += 0.2) {
    const double v = std::pow(10.0, x);
    xs.push_back(v);
    ld.push_back(loss_vs_data(v, pred_d, dist, profile));
    ls.push_back(loss_vs_steps(v, pred_s, dist, profile));
  }
  const auto fit_d = quanta::stats::fit_power_law(xs, ld);
  const auto fit_s = quanta::stats::fit_power_law(xs, ls);
  const double want = -alpha / (alpha + 1.0);
  CHECK(std::fabs(fit_d.exponent - want) < 0.02);
  CHECK(std::fabs(fit_s.exponent - want) < 0.02);
}
