#include "rvopt/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rvopt {
namespace {

class StraightCurve final : public ArmCurve {
 public:
  StraightCurve(Vec2 origin, Vec2 direction, double length)
      : origin_(std::move(origin)), dir_(direction.normalized()), length_(length) {}

  Vec2 position(double t) const override { return origin_ + t * dir_; }
  Vec2 tangent(double) const override { return dir_; }
  double length() const override { return length_; }

 private:
  Vec2 origin_;
  Vec2 dir_;
  double length_;
};

class ParametricCurve final : public ArmCurve {
 public:
  ParametricCurve(std::function<Vec2(double)> pos, std::function<Vec2(double)> tan, double length)
      : pos_(std::move(pos)), tan_(std::move(tan)), length_(length) {}

  Vec2 position(double t) const override { return pos_(t); }
  Vec2 tangent(double t) const override { return tan_(t); }
  double length() const override { return length_; }

 private:
  std::function<Vec2(double)> pos_;
  std::function<Vec2(double)> tan_;
  double length_;
};

// 10-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {0.1488743389816312, 0.4333953941292472,
                                            0.6794095682990244, 0.8650633666889845,
                                            0.9739065285171717};
constexpr std::array<double, 5> kGlWeights = {0.2955242247147529, 0.2692667193099963,
                                              0.2190863625159820, 0.1494513172334067,
                                              0.0666713443086881};

// Natural cubic spline through control points, parameterized by chord length
// and then reparameterized to arc length numerically.
class SplineCurve final : public ArmCurve {
 public:
  SplineCurve(const std::vector<Vec2>& pts, std::optional<double> truncate) {
    const std::size_t n = pts.size();
    knots_.resize(n);
    knots_[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double chord = (pts[i] - pts[i - 1]).norm();
      if (chord <= 0.0) throw std::invalid_argument("polyline arm has repeated points");
      knots_[i] = knots_[i - 1] + chord;
    }
    fit(pts);

    // Cumulative arc length on a fine sub-grid of the chord parameter.
    constexpr int kSub = 32;
    sub_u_.reserve((n - 1) * kSub + 1);
    sub_s_.reserve((n - 1) * kSub + 1);
    sub_u_.push_back(0.0);
    sub_s_.push_back(0.0);
    sub_speed_.push_back(deriv(0.0).norm());
    for (std::size_t seg = 0; seg + 1 < n; ++seg) {
      const double h = (knots_[seg + 1] - knots_[seg]) / kSub;
      for (int q = 1; q <= kSub; ++q) {
        const double u = knots_[seg] + q * h;
        const double u_prev = sub_u_.back();
        sub_s_.push_back(sub_s_.back() + speed_integral(u_prev, u));
        sub_u_.push_back(u);
        sub_speed_.push_back(deriv(u).norm());
      }
    }
    sub_u_.back() = knots_.back();
    const double full = sub_s_.back();
    length_ = full;
    if (truncate) {
      if (!(*truncate > 0.0) || *truncate > full * (1.0 + 1e-9)) {
        throw std::invalid_argument("polyline arm length exceeds the spline's arc length");
      }
      length_ = std::min(*truncate, full);
    }
  }

  Vec2 position(double t) const override { return eval(param_at(t)); }

  Vec2 tangent(double t) const override { return deriv(param_at(t)).normalized(); }

  void frame(double t, Vec2& position_out, Vec2& tangent_out) const override {
    const double u = param_at(t);
    position_out = eval(u);
    tangent_out = deriv(u).normalized();
  }

  double length() const override { return length_; }

 private:
  struct Segment {
    Vec2 a, b, c, d;  // a + b h + c h^2 + d h^3
  };

  void fit(const std::vector<Vec2>& pts) {
    const std::size_t n = pts.size();
    const std::size_t m = n - 1;
    segments_.resize(m);
    if (n == 2) {
      segments_[0] = {pts[0], (pts[1] - pts[0]) / knots_[1], Vec2::Zero(), Vec2::Zero()};
      return;
    }
    // Second derivatives M_i with natural end conditions M_0 = M_m = 0.
    std::vector<double> h(m);
    for (std::size_t i = 0; i < m; ++i) h[i] = knots_[i + 1] - knots_[i];
    const std::size_t inner = n - 2;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(inner, inner);
    Eigen::MatrixXd rhs(inner, 2);
    for (std::size_t r = 0; r < inner; ++r) {
      const std::size_t i = r + 1;
      A(r, r) = 2.0 * (h[i - 1] + h[i]);
      if (r > 0) A(r, r - 1) = h[i - 1];
      if (r + 1 < inner) A(r, r + 1) = h[i];
      const Vec2 v = 6.0 * ((pts[i + 1] - pts[i]) / h[i] - (pts[i] - pts[i - 1]) / h[i - 1]);
      rhs.row(r) = v.transpose();
    }
    const Eigen::MatrixXd sol = A.partialPivLu().solve(rhs);
    std::vector<Vec2> M(n, Vec2::Zero());
    for (std::size_t r = 0; r < inner; ++r) M[r + 1] = sol.row(r).transpose();
    for (std::size_t i = 0; i < m; ++i) {
      Segment& sg = segments_[i];
      sg.a = pts[i];
      sg.b = (pts[i + 1] - pts[i]) / h[i] - h[i] * (2.0 * M[i] + M[i + 1]) / 6.0;
      sg.c = M[i] / 2.0;
      sg.d = (M[i + 1] - M[i]) / (6.0 * h[i]);
    }
  }

  std::size_t segment_of(double u) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
    std::size_t idx = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(idx, segments_.size() - 1);
  }

  Vec2 eval(double u) const {
    const std::size_t i = segment_of(u);
    const double h = u - knots_[i];
    const Segment& sg = segments_[i];
    return sg.a + h * (sg.b + h * (sg.c + h * sg.d));
  }

  Vec2 deriv(double u) const {
    const std::size_t i = segment_of(u);
    const double h = u - knots_[i];
    const Segment& sg = segments_[i];
    return sg.b + h * (2.0 * sg.c + 3.0 * h * sg.d);
  }

  // Arc length between u0 and u1 (both inside one sub-interval or close).
  double speed_integral(double u0, double u1) const {
    const double mid = 0.5 * (u0 + u1);
    const double half = 0.5 * (u1 - u0);
    double sum = 0.0;
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      sum += kGlWeights[q] * (deriv(mid + half * kGlNodes[q]).norm() +
                              deriv(mid - half * kGlNodes[q]).norm());
    }
    return sum * half;
  }

  // Chord parameter at arc length t: cubic Hermite guess on the sub-grid, then Newton.
  double param_at(double t) const {
    t = std::clamp(t, 0.0, sub_s_.back());
    auto it = std::upper_bound(sub_s_.begin(), sub_s_.end(), t);
    std::size_t idx = it == sub_s_.begin() ? 0 : static_cast<std::size_t>(it - sub_s_.begin()) - 1;
    idx = std::min(idx, sub_s_.size() - 2);
    const double u0 = sub_u_[idx];
    const double u1 = sub_u_[idx + 1];
    const double s0 = sub_s_[idx];
    const double ds = sub_s_[idx + 1] - s0;
    if (!(ds > 0.0)) return u0;
    const double x = (t - s0) / ds;
    const double h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
    const double h10 = x * (1.0 - x) * (1.0 - x);
    const double h01 = x * x * (3.0 - 2.0 * x);
    const double h11 = x * x * (x - 1.0);
    double u = h00 * u0 + h10 * ds / sub_speed_[idx] + h01 * u1 + h11 * ds / sub_speed_[idx + 1];
    u = std::clamp(u, u0, u1);
    for (int iter = 0; iter < 8; ++iter) {
      const double f = s0 + speed_integral(u0, u) - t;
      if (std::abs(f) <= 1e-13) break;
      u = std::clamp(u - f / std::max(deriv(u).norm(), 1e-300), u0, u1);
    }
    return u;
  }

  std::vector<double> knots_;
  std::vector<Segment> segments_;
  std::vector<double> sub_u_;
  std::vector<double> sub_s_;
  std::vector<double> sub_speed_;
  double length_ = 0.0;
};

}  // namespace

Arm Arm::straight(const Vec2& junction, const Vec2& direction, double length) {
  if (!(length > 0.0)) throw std::invalid_argument("arm length must be positive");
  if (!(direction.norm() > 0.0)) throw std::invalid_argument("arm direction must be nonzero");
  Arm arm(std::make_shared<StraightCurve>(junction, direction, length));
  arm.control_points_ = {junction, junction + length * direction.normalized()};
  arm.straight_ = true;
  return arm;
}

Arm Arm::polyline(const Vec2& junction, std::span<const Vec2> points, std::optional<double> length) {
  if (points.empty()) throw std::invalid_argument("polyline arm needs at least one point");
  std::vector<Vec2> pts;
  pts.reserve(points.size() + 1);
  pts.push_back(junction);
  pts.insert(pts.end(), points.begin(), points.end());
  Arm arm(std::make_shared<SplineCurve>(pts, length));
  arm.control_points_ = std::move(pts);
  return arm;
}

Arm Arm::parametric(std::function<Vec2(double)> position, std::function<Vec2(double)> tangent,
                    double length) {
  if (!(length > 0.0)) throw std::invalid_argument("arm length must be positive");
  return Arm(std::make_shared<ParametricCurve>(std::move(position), std::move(tangent), length));
}

StarGraph::StarGraph(Vec2 junction, std::vector<Arm> arms)
    : junction_(std::move(junction)), arms_(std::move(arms)) {
  if (arms_.empty()) throw std::invalid_argument("star graph needs at least one arm");
  p_max_.resize(static_cast<Eigen::Index>(arms_.size()));
  for (std::size_t j = 0; j < arms_.size(); ++j) {
    if ((arms_[j].position(0.0) - junction_).norm() > 1e-9) {
      throw std::invalid_argument("arm " + std::to_string(j) + " does not start at the junction");
    }
    p_max_[static_cast<Eigen::Index>(j)] = arms_[j].length();
  }
}

double StarGraph::network_distance(std::size_t arm_a, double t_a, std::size_t arm_b,
                                   double t_b) const {
  if (arm_a == arm_b) return std::abs(t_a - t_b);
  return t_a + t_b;
}

void PhysicalParams::validate() const {
  if (!(v_max_A > 0.0) || !(v_max_G > 0.0) || !(kappa > 0.0)) {
    throw std::invalid_argument("speeds and charge rate must be positive");
  }
  if (!(e_min >= 0.0 && e_min < e_max)) throw std::invalid_argument("need 0 <= e_min < e_max");
  if (!(s_min >= 0.0 && s_min < s_max)) throw std::invalid_argument("need 0 <= s_min < s_max");
}

int default_stamp_count(std::size_t task_count, std::size_t arm_count) {
  return static_cast<int>(3 * (task_count + arm_count) + 2);
}

void ProblemInstance::validate() const {
  params.validate();
  if (N < 2) throw std::invalid_argument("stamp count N must be at least 2");
  for (const Vec2* pt : {&r0, &rf}) {
    const double d = project_to_network(graph, *pt).distance;
    if (d > 1e-6) {
      std::ostringstream os;
      os << "endpoint (" << pt->x() << ", " << pt->y() << ") is " << d
         << " km away from the road network";
      throw std::invalid_argument(os.str());
    }
  }
}

DecisionLayout::DecisionLayout(int stamps, int arm_count) : N(stamps), arms(arm_count) {
  if (stamps < 2) throw std::invalid_argument("layout needs N >= 2");
  if (arm_count < 1) throw std::invalid_argument("layout needs at least one arm");
}

DecisionVector::DecisionVector(DecisionLayout layout)
    : layout_(layout), flat_(Vector::Zero(layout.size())) {}

DecisionVector::DecisionVector(DecisionLayout layout, Vector flat)
    : layout_(layout), flat_(std::move(flat)) {
  if (flat_.size() != layout_.size()) {
    throw std::invalid_argument("flat vector length " + std::to_string(flat_.size()) +
                                " does not match layout size " + std::to_string(layout_.size()));
  }
}

namespace {

void check_coordinates(const StarGraph& graph, const Eigen::Ref<const Vector>& p) {
  if (static_cast<std::size_t>(p.size()) != graph.arm_count()) {
    throw std::invalid_argument("network coordinate dimension does not match arm count");
  }
  const Vector& pmax = graph.p_max();
  constexpr double kSlack = 1e-9;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (!(p[j] >= -kSlack && p[j] <= pmax[j] + kSlack)) {
      throw std::invalid_argument("network coordinate outside [0, p_max]");
    }
  }
}

}  // namespace

Vec2 graph_position(const StarGraph& graph, const Eigen::Ref<const Vector>& p) {
  check_coordinates(graph, p);
  Vec2 out = graph.junction();
  for (std::size_t j = 0; j < graph.arm_count(); ++j) {
    const double t = p[static_cast<Eigen::Index>(j)];
    if (t != 0.0) out += graph.point_on(j, t) - graph.junction();
  }
  return out;
}

Eigen::Matrix2Xd graph_position_jacobian(const StarGraph& graph, const Eigen::Ref<const Vector>& p) {
  check_coordinates(graph, p);
  Eigen::Matrix2Xd jac(2, static_cast<Eigen::Index>(graph.arm_count()));
  for (std::size_t j = 0; j < graph.arm_count(); ++j) {
    jac.col(static_cast<Eigen::Index>(j)) = graph.arms()[j].tangent(p[static_cast<Eigen::Index>(j)]);
  }
  return jac;
}

namespace {

// Closest point on a single arm, refined from a dense coarse scan.
std::pair<double, double> closest_on_arm(const Arm& arm, const Vec2& q) {
  const double L = arm.length();
  if (arm.is_straight()) {
    const Vec2 o = arm.position(0.0);
    const Vec2 d = arm.tangent(0.0);
    const double t = std::clamp((q - o).dot(d), 0.0, L);
    return {t, (arm.position(t) - q).norm()};
  }
  const int samples = std::max(64, static_cast<int>(std::ceil(L * 64.0)));
  const double h = L / samples;
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) {
    const double d = (arm.position(i * h) - q).norm();
    if (d < best_d - 1e-15) {
      best_d = d;
      best = i;
    }
  }
  // Golden-section refinement on the bracket around the best sample.
  double a = std::max(0.0, (best - 1) * h);
  double b = std::min(L, (best + 1) * h);
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = (arm.position(c) - q).norm();
  double fd = (arm.position(d) - q).norm();
  for (int iter = 0; iter < 200 && b - a > 1e-13; ++iter) {
    if (fc <= fd) {
      b = d; d = c; fd = fc;
      c = b - kInvPhi * (b - a);
      fc = (arm.position(c) - q).norm();
    } else {
      a = c; c = d; fc = fd;
      d = a + kInvPhi * (b - a);
      fd = (arm.position(d) - q).norm();
    }
  }
  double t = 0.5 * (a + b);
  double dist = (arm.position(t) - q).norm();
  if (best_d < dist) {
    t = best * h;
    dist = best_d;
  }
  return {t, dist};
}

}  // namespace

NetworkProjection project_to_network(const StarGraph& graph, const Vec2& q) {
  if (graph.arm_count() == 0) throw std::invalid_argument("empty road network");
  NetworkProjection out;
  out.distance = std::numeric_limits<double>::infinity();
  constexpr double kTie = 1e-12;
  for (std::size_t j = 0; j < graph.arm_count(); ++j) {
    auto [t, dist] = closest_on_arm(graph.arms()[j], q);
    if (dist < out.distance - kTie) {
      out = {j, t, dist};
    }
  }
  // Every arm contains the junction at t = 0; prefer that representation on ties.
  const double jd = (graph.junction() - q).norm();
  if (jd <= out.distance + kTie) out = {0, 0.0, jd};
  return out;
}

Vector network_coordinates(const StarGraph& graph, std::size_t arm, double t) {
  Vector p = Vector::Zero(static_cast<Eigen::Index>(graph.arm_count()));
  p[static_cast<Eigen::Index>(arm)] = t;
  return p;
}

NetPoint interpolate_on_network(const NetPoint& a, const NetPoint& b, double f) {
  if (a.arm == b.arm) return {a.arm, a.t + (b.t - a.t) * f};
  if (a.t == 0.0) return {b.arm, b.t * f};
  if (b.t == 0.0) return {a.arm, a.t * (1.0 - f)};
  // Through the junction.
  const double d = f * (a.t + b.t);
  if (d <= a.t) return {a.arm, a.t - d};
  return {b.arm, d - a.t};
}

}  // namespace rvopt
