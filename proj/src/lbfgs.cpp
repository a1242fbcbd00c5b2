#include "rvopt/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace rvopt {
namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

struct LinePoint {
  double a = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
};

// Minimizer of the cubic interpolating (a, phi, dphi) at both ends, clamped to
// the interior of the bracket.
double cubic_step(const LinePoint& lo, const LinePoint& hi) {
  const double left = std::min(lo.a, hi.a);
  const double right = std::max(lo.a, hi.a);
  const double margin = 0.1 * (right - left);
  const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.phi - hi.phi) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.dphi * hi.dphi;
  double a = 0.5 * (left + right);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
    const double denom = hi.dphi - lo.dphi + 2.0 * d2;
    if (denom != 0.0) {
      const double cand = hi.a - (hi.a - lo.a) * (hi.dphi + d2 - d1) / denom;
      if (std::isfinite(cand)) a = cand;
    }
  }
  return std::clamp(a, left + margin, right - margin);
}

class LineSearch {
 public:
  LineSearch(const SmoothFunction& f, const Vector& x, const Vector& dir, double f0, double dphi0,
             const InnerOptions& opt, int& evals)
      : f_(f), x_(x), dir_(dir), f0_(f0), dphi0_(dphi0), opt_(opt), evals_(evals) {
    trial_x_.resize(x.size());
    trial_g_.resize(x.size());
  }

  // Returns true on success; the accepted point is in x_out/g_out/f_out.
  bool run(double a_init, Vector& x_out, Vector& g_out, double& f_out) {
    LinePoint prev{0.0, f0_, dphi0_};
    double a = a_init;
    for (int i = 0; i < opt_.max_line_search; ++i) {
      LinePoint cur = eval(a);
      if (!std::isfinite(cur.phi)) {
        a = 0.5 * (prev.a + a);
        continue;
      }
      if (cur.phi > f0_ + opt_.c1 * a * dphi0_ || (i > 0 && cur.phi >= prev.phi)) {
        return zoom(prev, cur, x_out, g_out, f_out);
      }
      if (std::abs(cur.dphi) <= -opt_.c2 * dphi0_) return accept(x_out, g_out, f_out);
      if (cur.dphi >= 0.0) return zoom(cur, prev, x_out, g_out, f_out);
      prev = cur;
      a *= 2.5;
    }
    return false;
  }

 private:
  LinePoint eval(double a) {
    trial_x_ = x_ + a * dir_;
    trial_f_ = f_(trial_x_, trial_g_);
    ++evals_;
    if (!all_finite(trial_g_)) trial_f_ = std::numeric_limits<double>::infinity();
    return {a, trial_f_, trial_g_.dot(dir_)};
  }

  bool accept(Vector& x_out, Vector& g_out, double& f_out) {
    x_out = trial_x_;
    g_out = trial_g_;
    f_out = trial_f_;
    return true;
  }

  bool zoom(LinePoint lo, LinePoint hi, Vector& x_out, Vector& g_out, double& f_out) {
    for (int i = 0; i < opt_.max_line_search; ++i) {
      if (std::abs(hi.a - lo.a) < 1e-16 * std::max(1.0, std::abs(lo.a))) break;
      const double a = cubic_step(lo, hi);
      LinePoint cur = eval(a);
      if (cur.phi > f0_ + opt_.c1 * a * dphi0_ || cur.phi >= lo.phi) {
        hi = cur;
      } else {
        if (std::abs(cur.dphi) <= -opt_.c2 * dphi0_) return accept(x_out, g_out, f_out);
        if (cur.dphi * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    // Fall back to the best sufficient-decrease point seen, if any.
    if (lo.a > 0.0 && lo.phi < f0_) {
      eval(lo.a);
      return accept(x_out, g_out, f_out);
    }
    return false;
  }

  const SmoothFunction& f_;
  const Vector& x_;
  const Vector& dir_;
  double f0_;
  double dphi0_;
  const InnerOptions& opt_;
  int& evals_;
  Vector trial_x_;
  Vector trial_g_;
  double trial_f_ = 0.0;
};

}  // namespace

InnerResult inner_minimize(const SmoothFunction& f, const Vector& x0, const InnerOptions& opt) {
  InnerResult res;
  res.x = x0;
  Vector g(x0.size());
  double fx = f(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(fx) || !all_finite(g)) {
    throw std::invalid_argument("objective or gradient not finite at the starting point");
  }

  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha(static_cast<std::size_t>(std::max(opt.memory, 1)));
  Vector dir(x0.size());
  Vector x_new(x0.size());
  Vector g_new(x0.size());
  bool retried = false;

  for (;;) {
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    if (res.grad_norm <= opt.tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.max_iterations) break;
    if (opt.should_stop && opt.should_stop()) {
      res.interrupted = true;
      break;
    }

    // Two-loop recursion.
    dir = -g;
    const std::size_t m = s_hist.size();
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(dir);
      dir -= alpha[i] * y_hist[i];
    }
    if (m > 0) dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += (alpha[i] - beta) * s_hist[i];
    }
    double dphi0 = g.dot(dir);
    if (!(dphi0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      dphi0 = -g.squaredNorm();
    }
    const double a_init = m == 0 ? std::min(1.0, 1.0 / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;

    double f_new = fx;
    LineSearch ls(f, res.x, dir, fx, dphi0, opt, res.evaluations);
    if (!ls.run(a_init, x_new, g_new, f_new)) {
      if (!retried && m > 0) {
        // Drop curvature history and retry along steepest descent.
        retried = true;
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      res.line_search_failed = true;
      break;
    }
    retried = false;

    Vector s = x_new - res.x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    res.x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    ++res.iterations;
  }
  res.value = fx;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  return res;
}

}  // namespace rvopt
