// Smooth surrogates for hinge and pointwise-minimum functions.
#pragma once

#include <Eigen/Core>

#include <span>
#include <string_view>

namespace rvopt {

enum class SoftminMethod { LpNorm, LogSumExp };

std::string_view to_string(SoftminMethod method);
/// Accepts "lp" / "lse" (and the long names); throws std::invalid_argument otherwise.
SoftminMethod parse_softmin_method(std::string_view name);

struct SmoothingConfig {
  SoftminMethod method = SoftminMethod::LpNorm;
  double delta = 1.0;     // hinge knee
  double epsilon = 1e-3;  // lp regularizer
  int p_exp = 3;          // lp exponent
  double tau = 1e2;       // log-sum-exp scale

  void validate() const;

  /// Upper bound on softmin(c) - min(c) over all c with n entries, when min(c) >= 0.
  double feasibility_bias(std::size_t n) const;
};

/// Quadratic-then-linear hinge: 0 below zero, a^2/2 up to delta, linear after.
double sigma_delta(double alpha, double delta);
double sigma_delta_derivative(double alpha, double delta);

/// -(1/tau) ln sum exp(-tau c_k), evaluated in shifted form.
double softmin_lse(std::span<const double> c, double tau);
/// Value and d/dc (softmax weights of -tau c). `grad` must have c.size() entries.
double softmin_lse(std::span<const double> c, double tau, std::span<double> grad);

/// ((1/n) sum (c_k^2 + eps^2)^-p)^(-1/(2p)) - eps, evaluated through logarithms.
double softmin_lp(std::span<const double> c, int p_exp, double epsilon);
double softmin_lp(std::span<const double> c, int p_exp, double epsilon, std::span<double> grad);

/// Dispatch on cfg.method.
double softmin(std::span<const double> c, const SmoothingConfig& cfg, std::span<double> grad);

}  // namespace rvopt
