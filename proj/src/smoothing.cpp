#include "rvopt/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rvopt {

std::string_view to_string(SoftminMethod method) {
  switch (method) {
    case SoftminMethod::LpNorm: return "lp";
    case SoftminMethod::LogSumExp: return "lse";
  }
  return "?";
}

SoftminMethod parse_softmin_method(std::string_view name) {
  if (name == "lp" || name == "lpnorm" || name == "LpNorm") return SoftminMethod::LpNorm;
  if (name == "lse" || name == "logsumexp" || name == "LogSumExp") return SoftminMethod::LogSumExp;
  throw std::invalid_argument("unknown softmin method '" + std::string(name) + "' (use lp or lse)");
}

void SmoothingConfig::validate() const {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (p_exp < 1) throw std::invalid_argument("p_exp must be at least 1");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
}

double SmoothingConfig::feasibility_bias(std::size_t n) const {
  if (n <= 1) return 0.0;
  const double dn = static_cast<double>(n);
  if (method == SoftminMethod::LogSumExp) return std::log(dn) / tau;
  return (std::pow(dn, 1.0 / (2.0 * p_exp)) - 1.0) * epsilon;
}

double sigma_delta(double alpha, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("sigma_delta: delta must be positive");
  if (alpha <= 0.0) return 0.0;
  if (alpha <= delta) return 0.5 * alpha * alpha;
  return delta * alpha - 0.5 * delta * delta;
}

double sigma_delta_derivative(double alpha, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("sigma_delta: delta must be positive");
  if (alpha <= 0.0) return 0.0;
  if (alpha <= delta) return alpha;
  return delta;
}

namespace {

void check_input(std::span<const double> c) {
  if (c.empty()) throw std::invalid_argument("softmin of an empty vector");
  for (double v : c) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmin input is not finite");
  }
}

}  // namespace

double softmin_lse(std::span<const double> c, double tau, std::span<double> grad) {
  check_input(c);
  if (!(tau > 0.0)) throw std::invalid_argument("softmin_lse: tau must be positive");
  const std::size_t kmin = static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin());
  const double m = c[kmin];
  // sum = 1 + rest; log1p keeps the tiny corrections from near-ties far apart.
  double rest = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k != kmin) rest += std::exp(-tau * (c[k] - m));
  }
  if (!grad.empty()) {
    for (std::size_t k = 0; k < c.size(); ++k) grad[k] = std::exp(-tau * (c[k] - m)) / (1.0 + rest);
  }
  return m - std::log1p(rest) / tau;
}

double softmin_lse(std::span<const double> c, double tau) { return softmin_lse(c, tau, {}); }

double softmin_lp(std::span<const double> c, int p_exp, double epsilon, std::span<double> grad) {
  check_input(c);
  if (p_exp < 1) throw std::invalid_argument("softmin_lp: p_exp must be at least 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("softmin_lp: epsilon must be positive");
  const double p = p_exp;
  const double eps2 = epsilon * epsilon;
  // L_k = ln(c_k^2 + eps^2); the power mean is dominated by the smallest L_k.
  std::size_t kmin = 0;
  for (std::size_t k = 1; k < c.size(); ++k) {
    if (std::abs(c[k]) < std::abs(c[kmin])) kmin = k;
  }
  const double lmin = std::log(c[kmin] * c[kmin] + eps2);
  double rest = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k != kmin) rest += std::exp(-p * (std::log(c[k] * c[k] + eps2) - lmin));
  }
  const double sum = 1.0 + rest;
  const double n = static_cast<double>(c.size());
  const double mean_root = std::exp(0.5 * lmin - (std::log1p(rest) - std::log(n)) / (2.0 * p));
  if (!grad.empty()) {
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double q = c[k] * c[k] + eps2;
      const double w = std::exp(-p * (std::log(q) - lmin)) / sum;
      grad[k] = mean_root * w * c[k] / q;
    }
  }
  return mean_root - epsilon;
}

double softmin_lp(std::span<const double> c, int p_exp, double epsilon) {
  return softmin_lp(c, p_exp, epsilon, {});
}

double softmin(std::span<const double> c, const SmoothingConfig& cfg, std::span<double> grad) {
  if (cfg.method == SoftminMethod::LogSumExp) return softmin_lse(c, cfg.tau, grad);
  return softmin_lp(c, cfg.p_exp, cfg.epsilon, grad);
}

}  // namespace rvopt
