#include "quanta/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace quanta::theory {

namespace {

// Euler-Maclaurin evaluation of sum_{k=M}^inf k^-s. The first omitted
// correction term is O(M^-(s+5)), far below 1e-12 for M >= 512.
double power_tail_at(double s, double m) {
  const double integral = std::pow(m, 1.0 - s) / (s - 1.0);
  const double f = std::pow(m, -s);
  const double fp = -s * std::pow(m, -s - 1.0);
  const double fppp = -s * (s + 1.0) * (s + 2.0) * std::pow(m, -s - 3.0);
  return integral + 0.5 * f - fp / 12.0 + fppp / 720.0;
}

// Euler-Maclaurin evaluation of sum_{k=M}^inf ln(k) k^-s.
double log_power_tail_at(double s, double m) {
  const double lm = std::log(m);
  const double integral =
      std::pow(m, 1.0 - s) * (lm / (s - 1.0) + 1.0 / ((s - 1.0) * (s - 1.0)));
  const double f = lm * std::pow(m, -s);
  const double fp = std::pow(m, -s - 1.0) * (1.0 - s * lm);
  const double fppp = std::pow(m, -s - 3.0) *
                      (-s * (s + 1.0) * (s + 2.0) * lm + 3.0 * s * s + 6.0 * s + 2.0);
  return integral + 0.5 * f - fp / 12.0 + fppp / 720.0;
}

constexpr std::uint64_t kDirectSumCutoff = 4096;

// sum_{k=n+1}^inf k^-s: direct terms up to the cutoff, analytic tail beyond.
double power_series_tail(double s, std::uint64_t n) {
  const std::uint64_t start = n + 1;
  if (start >= kDirectSumCutoff) return power_tail_at(s, static_cast<double>(start));
  double sum = 0.0;
  for (std::uint64_t k = start; k < kDirectSumCutoff; ++k) {
    sum += std::pow(static_cast<double>(k), -s);
  }
  return sum + power_tail_at(s, static_cast<double>(kDirectSumCutoff));
}

// sum_{k=n+1}^inf ln(k) k^-s.
double log_power_series_tail(double s, std::uint64_t n) {
  const std::uint64_t start = n + 1;
  if (start >= kDirectSumCutoff)
    return log_power_tail_at(s, static_cast<double>(start));
  double sum = 0.0;
  for (std::uint64_t k = start; k < kDirectSumCutoff; ++k) {
    const double kd = static_cast<double>(k);
    sum += std::log(kd) * std::pow(kd, -s);
  }
  return sum + log_power_tail_at(s, static_cast<double>(kDirectSumCutoff));
}

double finite_normalizer(double s, std::uint64_t K) {
  double z = 0.0;
  for (std::uint64_t k = K; k >= 1; --k) {  // ascending magnitude
    z += std::pow(static_cast<double>(k), -s);
  }
  return z;
}

void check_profile(const LossProfile& p) {
  switch (p.kind) {
    case ProfileKind::Constant:
      if (!(p.b >= p.a) || !(p.a >= 0.0))
        throw std::invalid_argument("Constant profile requires b >= a >= 0");
      break;
    case ProfileKind::LogOffset:
      if (!(p.offset_c > 1.0))
        throw std::invalid_argument("LogOffset profile requires C > 1");
      break;
    case ProfileKind::LogFreq:
      break;
  }
}

// Entropy of the rank distribution, sum_k (-log p_k) p_k, in nats.
double rank_entropy(const QuantaDistribution& dist) {
  const double s = dist.alpha + 1.0;
  const double z = dist.normalizer();
  if (dist.is_finite()) {
    double h = 0.0;
    for (std::uint64_t k = 1; k <= *dist.support; ++k) {
      const double pk = std::pow(static_cast<double>(k), -s) / z;
      h -= pk * std::log(pk);
    }
    return h;
  }
  // -log p_k = s log k + log Z
  const double log_sum = log_power_series_tail(s, 0);
  return (s * log_sum) / z + std::log(z);
}

}  // namespace

double zeta(double s) {
  if (!(s > 1.0)) throw std::domain_error("zeta(s) requires s > 1");
  double sum = 0.0;
  std::uint64_t k = 1;
  for (; k < kDirectSumCutoff; ++k) {
    const double term = std::pow(static_cast<double>(k), -s);
    sum += term;
    if (term < 1e-18 * sum) {  // remaining terms cannot move the result
      return sum + power_tail_at(s, static_cast<double>(k + 1));
    }
  }
  return sum + power_tail_at(s, static_cast<double>(kDirectSumCutoff));
}

QuantaDistribution QuantaDistribution::infinite(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  return QuantaDistribution{alpha, std::nullopt};
}

QuantaDistribution QuantaDistribution::finite(double alpha, std::uint64_t K) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (K < 1) throw std::invalid_argument("finite support requires K >= 1");
  return QuantaDistribution{alpha, K};
}

double QuantaDistribution::normalizer() const {
  const double s = alpha + 1.0;
  return is_finite() ? finite_normalizer(s, *support) : zeta(s);
}

double zipf_pmf(std::uint64_t k, const QuantaDistribution& dist) {
  if (k < 1 || (dist.is_finite() && k > *dist.support))
    throw std::domain_error("rank outside distribution support");
  const double s = dist.alpha + 1.0;
  return std::pow(static_cast<double>(k), -s) / dist.normalizer();
}

LossProfile LossProfile::constant(double a, double b) {
  LossProfile p{ProfileKind::Constant, a, b, 2.0};
  check_profile(p);
  return p;
}

LossProfile LossProfile::log_freq() { return LossProfile{ProfileKind::LogFreq}; }

LossProfile LossProfile::log_offset(double c) {
  LossProfile p{ProfileKind::LogOffset, 0.0, 1.0, c};
  check_profile(p);
  return p;
}

double expected_loss_exact(std::uint64_t n, const QuantaDistribution& dist,
                           const LossProfile& profile) {
  check_profile(profile);
  const double s = dist.alpha + 1.0;
  const double z = dist.normalizer();

  if (dist.is_finite()) {
    const std::uint64_t K = *dist.support;
    double loss = 0.0;
    for (std::uint64_t k = 1; k <= K; ++k) {
      const double pk = std::pow(static_cast<double>(k), -s) / z;
      double term;
      switch (profile.kind) {
        case ProfileKind::Constant:
          term = (k <= n) ? profile.a : profile.b;
          break;
        case ProfileKind::LogFreq:
          term = (k <= n) ? 0.0 : -std::log(pk);
          break;
        case ProfileKind::LogOffset:
          term = (k <= n) ? -std::log(profile.offset_c * pk) : -std::log(pk);
          break;
        default:
          term = 0.0;
      }
      loss += term * pk;
    }
    return loss;
  }

  // Infinite support: L_n = sum_k a_k p_k + sum_{k>n} (b_k - a_k) p_k.
  const double tail_mass = power_series_tail(s, n) / z;
  switch (profile.kind) {
    case ProfileKind::Constant:
      return profile.a + (profile.b - profile.a) * tail_mass;
    case ProfileKind::LogFreq:
      // b_k - a_k = -log p_k = s log k + log Z
      return (s * log_power_series_tail(s, n)) / z + std::log(z) * tail_mass;
    case ProfileKind::LogOffset:
      // a_k = b_k - log C
      return rank_entropy(dist) - std::log(profile.offset_c) * (1.0 - tail_mass);
  }
  throw std::logic_error("unreachable profile kind");
}

double limit_loss(const QuantaDistribution& dist, const LossProfile& profile) {
  check_profile(profile);
  switch (profile.kind) {
    case ProfileKind::Constant:
      return profile.a;
    case ProfileKind::LogFreq:
      return 0.0;
    case ProfileKind::LogOffset:
      return rank_entropy(dist) - std::log(profile.offset_c);
  }
  throw std::logic_error("unreachable profile kind");
}

double expected_loss_closed(std::uint64_t n, const QuantaDistribution& dist,
                            const LossProfile& profile) {
  check_profile(profile);
  if (dist.is_finite())
    throw std::invalid_argument(
        "closed-form loss is defined for infinite support only");
  if (n < 1) throw std::domain_error("closed-form loss requires n >= 1");

  const double alpha = dist.alpha;
  const double z = zeta(alpha + 1.0);
  const double n_pow = std::pow(static_cast<double>(n), -alpha);

  switch (profile.kind) {
    case ProfileKind::Constant:
      return profile.a + (profile.b - profile.a) * n_pow / (alpha * z);
    case ProfileKind::LogFreq: {
      const double c1 =
          (1.0 + alpha + alpha * std::log(z)) / (alpha * alpha * z);
      const double c2 = (alpha + 1.0) / (alpha * z);
      return n_pow * (c1 + c2 * std::log(static_cast<double>(n)));
    }
    case ProfileKind::LogOffset: {
      const double log_c = std::log(profile.offset_c);
      const double h_approx =
          (1.0 + alpha + alpha * std::log(z)) / (alpha * alpha * z);
      return log_c * n_pow / (alpha * z) - log_c + h_approx;
    }
  }
  throw std::logic_error("unreachable profile kind");
}

ScalingPrediction ScalingPrediction::for_axis(ScaleAxis axis,
                                              const QuantaDistribution& dist,
                                              double capacity_per_quantum,
                                              double data_threshold,
                                              double first_quantum_steps) {
  if (!(capacity_per_quantum > 0.0) || !(data_threshold > 0.0) ||
      !(first_quantum_steps > 0.0))
    throw std::invalid_argument("scaling constants must be positive");
  const double alpha = dist.alpha;
  const double z = zeta(alpha + 1.0);
  ScalingPrediction pred;
  pred.axis = axis;
  pred.capacity_per_quantum = capacity_per_quantum;
  pred.data_threshold = data_threshold;
  pred.first_quantum_steps = first_quantum_steps;
  switch (axis) {
    case ScaleAxis::Params:
      pred.exponent = alpha;
      pred.prefactor = std::pow(capacity_per_quantum, alpha) / (alpha * z);
      break;
    case ScaleAxis::DataMultiEpoch:
      pred.exponent = alpha / (alpha + 1.0);
      pred.prefactor = std::pow(data_threshold * z, pred.exponent) / (alpha * z);
      break;
    case ScaleAxis::Steps:
      pred.exponent = alpha / (alpha + 1.0);
      pred.prefactor = std::pow(first_quantum_steps, pred.exponent) / (alpha * z);
      break;
  }
  return pred;
}

std::uint64_t floor_power_inverse(double ratio, double exponent) {
  if (!(ratio >= 1.0)) return 0;
  const double tol = 1.0 + 1e-12;
  auto fits = [&](std::uint64_t n) {
    return std::pow(static_cast<double>(n), exponent) <= ratio * tol;
  };
  auto guess = static_cast<std::uint64_t>(std::pow(ratio, 1.0 / exponent));
  while (fits(guess + 1)) ++guess;
  while (guess > 1 && !fits(guess)) --guess;
  return guess;
}

namespace {

double closed_or_baseline(std::uint64_t n, const QuantaDistribution& dist,
                          const LossProfile& profile) {
  return n >= 1 ? expected_loss_closed(n, dist, profile)
                : expected_loss_exact(0, dist, profile);
}

}  // namespace

double loss_vs_params(double n_params, const ScalingPrediction& pred,
                      const QuantaDistribution& dist, const LossProfile& profile) {
  const double raw = n_params / pred.capacity_per_quantum;
  const std::uint64_t n =
      raw < 1.0 ? 0 : static_cast<std::uint64_t>(std::floor(raw + 1e-12));
  return closed_or_baseline(n, dist, profile);
}

double loss_vs_data(double n_samples, const ScalingPrediction& pred,
                    const QuantaDistribution& dist, const LossProfile& profile) {
  if (!(n_samples > 0.0)) throw std::domain_error("sample count must be positive");
  const double z = zeta(dist.alpha + 1.0);
  const double ratio = n_samples / (pred.data_threshold * z);
  const std::uint64_t n = floor_power_inverse(ratio, dist.alpha + 1.0);
  return closed_or_baseline(n, dist, profile);
}

double loss_vs_steps(double n_steps, const ScalingPrediction& pred,
                     const QuantaDistribution& dist, const LossProfile& profile) {
  if (!(n_steps > 0.0)) throw std::domain_error("step count must be positive");
  const double ratio = n_steps / pred.first_quantum_steps;
  const std::uint64_t n = floor_power_inverse(ratio, dist.alpha + 1.0);
  return closed_or_baseline(n, dist, profile);
}

}  // namespace quanta::theory
