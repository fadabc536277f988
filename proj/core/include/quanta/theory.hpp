#pragma once

#include <cstdint>
#include <optional>

namespace quanta::theory {

inline constexpr double kNatsToBits = 1.4426950408889634074;  // 1 / ln 2

// Riemann zeta for real s > 1, absolute error <= 1e-9.
// Partial sum plus an Euler-Maclaurin tail correction; the truncation point
// adapts to s so the stated tolerance holds all the way down to s ~ 1 + 1e-6.
double zeta(double s);

// Zipf-like distribution over subtask ranks: pmf(k) = k^-(alpha+1) / Z with
// Z = zeta(alpha+1) on infinite support or the partial sum on finite support.
struct QuantaDistribution {
  double alpha = 1.0;
  std::optional<std::uint64_t> support;  // nullopt: infinite; else K >= 1

  static QuantaDistribution infinite(double alpha);
  static QuantaDistribution finite(double alpha, std::uint64_t K);

  bool is_finite() const { return support.has_value(); }
  // Normalizer Z of the pmf.
  double normalizer() const;
};

double zipf_pmf(std::uint64_t k, const QuantaDistribution& dist);

// Per-rank loss profile: loss is b_k on samples using rank k before that rank
// is learned, a_k after.
//   Constant:  a_k = a, b_k = b          (b >= a >= 0)
//   LogFreq:   a_k = 0, b_k = -log p_k
//   LogOffset: a_k = -log(C p_k), b_k = -log p_k   (C > 1)
enum class ProfileKind { Constant, LogFreq, LogOffset };

struct LossProfile {
  ProfileKind kind = ProfileKind::Constant;
  double a = 0.0;
  double b = 1.0;
  double offset_c = 2.0;

  static LossProfile constant(double a, double b);
  static LossProfile log_freq();
  static LossProfile log_offset(double c);
};

// Expected loss after learning the n most frequent ranks, evaluated from the
// series itself (partial sum + analytic tail on infinite support; abs err
// <= 1e-8). Nonincreasing in n.
double expected_loss_exact(std::uint64_t n, const QuantaDistribution& dist,
                           const LossProfile& profile);

// Loss in the limit of all ranks learned (the exact series value of
// sum_k a_k p_k).
double limit_loss(const QuantaDistribution& dist, const LossProfile& profile);

// Closed-form approximations (integral approximation of the tail). Infinite
// support only; n >= 1.
double expected_loss_closed(std::uint64_t n, const QuantaDistribution& dist,
                            const LossProfile& profile);

enum class ScaleAxis { Params, DataMultiEpoch, Steps };

// Predicted power law for one scaling axis. `exponent` is the positive decay
// rate of (L - L_inf); `prefactor` is the asymptotic coefficient for the
// Constant(0,1) profile.
struct ScalingPrediction {
  ScaleAxis axis = ScaleAxis::Params;
  double exponent = 0.0;
  double prefactor = 0.0;
  double capacity_per_quantum = 1.0;  // parameters consumed per learned rank
  double data_threshold = 1.0;        // samples of rank k needed to learn it
  double first_quantum_steps = 1.0;   // steps to learn the most frequent rank

  static ScalingPrediction for_axis(ScaleAxis axis,
                                    const QuantaDistribution& dist,
                                    double capacity_per_quantum = 1.0,
                                    double data_threshold = 1.0,
                                    double first_quantum_steps = 1.0);
};

// Number of ranks learnable at a given scale (floor semantics), then the
// closed-form loss at that count; n = 0 falls back to the series baseline.
double loss_vs_params(double n_params, const ScalingPrediction& pred,
                      const QuantaDistribution& dist, const LossProfile& profile);
double loss_vs_data(double n_samples, const ScalingPrediction& pred,
                    const QuantaDistribution& dist, const LossProfile& profile);
double loss_vs_steps(double n_steps, const ScalingPrediction& pred,
                     const QuantaDistribution& dist, const LossProfile& profile);

// Largest integer n >= 0 with n^exponent <= ratio (tolerant of pow round-off).
std::uint64_t floor_power_inverse(double ratio, double exponent);

}  // namespace quanta::theory
