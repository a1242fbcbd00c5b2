// Mission geometry, physical parameters and the decision-vector layout.
#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace rvopt {

using Vec2 = Eigen::Vector2d;
using Vector = Eigen::VectorXd;

/// Arc-length parameterized planar curve. position(0) is the junction.
class ArmCurve {
 public:
  virtual ~ArmCurve() = default;
  virtual Vec2 position(double t) const = 0;
  /// d position / dt; unit length for an arc-length parameterization.
  virtual Vec2 tangent(double t) const = 0;
  virtual double length() const = 0;
  /// Position and tangent together; curves with costly reparameterization override it.
  virtual void frame(double t, Vec2& position_out, Vec2& tangent_out) const {
    position_out = position(t);
    tangent_out = tangent(t);
  }
};

/// One arm of the star-shaped road network.
class Arm {
 public:
  /// Straight segment from `junction` along `direction` (normalized here).
  static Arm straight(const Vec2& junction, const Vec2& direction, double length);

  /// Cubic spline through `junction` followed by `points`, reparameterized to
  /// arc length. If `length` is given the arm is truncated there.
  static Arm polyline(const Vec2& junction, std::span<const Vec2> points,
                      std::optional<double> length = std::nullopt);

  /// Analytic curve supplied by the caller; it must already be arc-length
  /// parameterized.
  static Arm parametric(std::function<Vec2(double)> position,
                        std::function<Vec2(double)> tangent, double length);

  Vec2 position(double t) const { return curve_->position(t); }
  Vec2 tangent(double t) const { return curve_->tangent(t); }
  void frame(double t, Vec2& position_out, Vec2& tangent_out) const { curve_->frame(t, position_out, tangent_out); }
  double length() const { return curve_->length(); }

  /// Control points the arm was built from (junction first). Empty for
  /// parametric arms; used for serialization.
  const std::vector<Vec2>& control_points() const { return control_points_; }
  bool is_straight() const { return straight_; }

 private:
  explicit Arm(std::shared_ptr<const ArmCurve> curve) : curve_(std::move(curve)) {}

  std::shared_ptr<const ArmCurve> curve_;
  std::vector<Vec2> control_points_;
  bool straight_ = false;
};

/// Road network: arms that meet only at a single junction.
class StarGraph {
 public:
  StarGraph(Vec2 junction, std::vector<Arm> arms);

  const Vec2& junction() const { return junction_; }
  const std::vector<Arm>& arms() const { return arms_; }
  std::size_t arm_count() const { return arms_.size(); }
  /// Vector of arm lengths (upper bound of each p entry).
  const Vector& p_max() const { return p_max_; }

  /// Planar position of the point at arc length t on arm j.
  Vec2 point_on(std::size_t arm, double t) const { return arms_[arm].position(t); }

  /// Distance along the network between (arm a, t_a) and (arm b, t_b).
  double network_distance(std::size_t arm_a, double t_a, std::size_t arm_b, double t_b) const;

 private:
  Vec2 junction_;
  std::vector<Arm> arms_;
  Vector p_max_;
};

struct PhysicalParams {
  double v_max_A = 36.0;   // km/h
  double v_max_G = 16.2;   // km/h
  double kappa = 1.5;      // charge rate
  double e_min = 0.0;      // h
  double e_max = 0.4;      // h
  double s_min = 0.0;      // h
  double s_max = 10.0;     // h

  void validate() const;
};

/// Stamp count used when an instance does not fix one.
int default_stamp_count(std::size_t task_count, std::size_t arm_count);

struct ProblemInstance {
  StarGraph graph;
  std::vector<Vec2> uav_tasks;
  Vec2 r0 = Vec2::Zero();
  Vec2 rf = Vec2::Zero();
  PhysicalParams params;
  int N = 2;

  std::size_t task_count() const { return uav_tasks.size(); }
  std::size_t arm_count() const { return graph.arm_count(); }

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Offsets of the structured blocks inside the flat decision vector:
/// [ r^A (2N) | e (N) | p (N*mG) | s (N-1) ].
struct DecisionLayout {
  int N = 0;
  int arms = 0;

  DecisionLayout() = default;
  DecisionLayout(int stamps, int arm_count);

  int size() const { return 2 * N + N + N * arms + (N - 1); }
  int ra(int k) const { return 2 * k; }
  int e(int k) const { return 2 * N + k; }
  int p(int k) const { return 3 * N + k * arms; }
  int p(int k, int j) const { return p(k) + j; }
  int s(int k) const { return 3 * N + N * arms + k; }
  int s_begin() const { return s(0); }

  bool operator==(const DecisionLayout&) const = default;
};

/// Flat optimization variable with structured (0-based) views.
/// The UGV planar position is not stored; it is graph_position(p_k).
class DecisionVector {
 public:
  DecisionVector() = default;
  explicit DecisionVector(DecisionLayout layout);
  DecisionVector(DecisionLayout layout, Vector flat);

  const DecisionLayout& layout() const { return layout_; }
  const Vector& flat() const { return flat_; }
  Vector& flat() { return flat_; }
  int N() const { return layout_.N; }

  Vec2 ra(int k) const { return flat_.segment<2>(layout_.ra(k)); }
  void set_ra(int k, const Vec2& v) { flat_.segment<2>(layout_.ra(k)) = v; }
  double e(int k) const { return flat_[layout_.e(k)]; }
  double& e(int k) { return flat_[layout_.e(k)]; }
  auto p(int k) const { return flat_.segment(layout_.p(k), layout_.arms); }
  auto p(int k) { return flat_.segment(layout_.p(k), layout_.arms); }
  double s(int k) const { return flat_[layout_.s(k)]; }
  double& s(int k) { return flat_[layout_.s(k)]; }

 private:
  DecisionLayout layout_;
  Vector flat_;
};

/// Planar position for network coordinates p: junction + sum_j (arm_j(p_j) - junction).
Vec2 graph_position(const StarGraph& graph, const Eigen::Ref<const Vector>& p);

/// 2 x m^G Jacobian of graph_position; column j is the tangent of arm j at p_j.
Eigen::Matrix2Xd graph_position_jacobian(const StarGraph& graph, const Eigen::Ref<const Vector>& p);

struct NetworkProjection {
  std::size_t arm = 0;
  double t = 0.0;
  double distance = 0.0;
};

/// Closest network point to q; ties go to the lowest arm index, then lowest t.
NetworkProjection project_to_network(const StarGraph& graph, const Vec2& q);

/// Network coordinates of the point at arc length t on `arm`.
Vector network_coordinates(const StarGraph& graph, std::size_t arm, double t);

/// A point on the network as (arm, arc length). t = 0 is the junction for any arm.
struct NetPoint {
  std::size_t arm = 0;
  double t = 0.0;
};

/// Point at fraction f along the shortest network path from a to b.
NetPoint interpolate_on_network(const NetPoint& a, const NetPoint& b, double f);

}  // namespace rvopt
