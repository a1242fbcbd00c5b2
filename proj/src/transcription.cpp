#include "rvopt/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rvopt {

void SparseRows::accumulate_transpose(const Vector& w, Vector& out) const {
  const int n = rows();
  for (int r = 0; r < n; ++r) {
    const double wr = w[r];
    if (wr == 0.0) continue;
    for (int q = row_start[r]; q < row_start[r + 1]; ++q) out[col[q]] += wr * val[q];
  }
}

Eigen::MatrixXd SparseRows::dense(int cols) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows(), cols);
  for (int r = 0; r < rows(); ++r) {
    for (int q = row_start[r]; q < row_start[r + 1]; ++q) m(r, col[q]) += val[q];
  }
  return m;
}

namespace {

Vec2 arm_point_extended(const Arm& arm, double t) {
  if (t < 0.0) return arm.position(0.0) + t * arm.tangent(0.0);
  const double L = arm.length();
  if (t > L) return arm.position(L) + (t - L) * arm.tangent(L);
  return arm.position(t);
}

Vec2 arm_tangent_extended(const Arm& arm, double t) {
  return arm.tangent(std::clamp(t, 0.0, arm.length()));
}

// Position and tangent in one pass over the arms.
void graph_frame_extended(const StarGraph& graph, const Eigen::Ref<const Vector>& p, Vec2& pos,
                          Eigen::Matrix2Xd& jac) {
  pos = graph.junction();
  jac.resize(2, static_cast<Eigen::Index>(graph.arm_count()));
  for (std::size_t j = 0; j < graph.arm_count(); ++j) {
    const Arm& arm = graph.arms()[j];
    const double t = p[static_cast<Eigen::Index>(j)];
    const double L = arm.length();
    Vec2 at;
    Vec2 tan;
    arm.frame(std::clamp(t, 0.0, L), at, tan);
    if (t < 0.0) at += t * tan;
    if (t > L) at += (t - L) * tan;
    if (t != 0.0) pos += at - graph.junction();
    jac.col(static_cast<Eigen::Index>(j)) = tan;
  }
}

std::string stamp_label(const char* name, int k) { return std::string(name) + "[" + std::to_string(k) + "]"; }

std::string stamp_label(const char* name, int k, int j) {
  return std::string(name) + "[" + std::to_string(k) + "," + std::to_string(j) + "]";
}

// Appends rows to one residual group.
class RowWriter {
 public:
  RowWriter(std::vector<double>& values, SparseRows* jac, std::vector<std::string>* labels)
      : values_(values), jac_(jac), labels_(labels) {}

  bool jacobian() const { return jac_ != nullptr; }

  void add(int col, double v) {
    if (jac_) jac_->add(col, v);
  }

  template <class Label>
  void finish(double value, Label&& label) {
    values_.push_back(value);
    if (jac_) jac_->end_row();
    if (labels_) labels_->push_back(label());
  }

 private:
  std::vector<double>& values_;
  SparseRows* jac_;
  std::vector<std::string>* labels_;
};

}  // namespace

Vec2 graph_position_extended(const StarGraph& graph, const Eigen::Ref<const Vector>& p) {
  Vec2 out = graph.junction();
  for (std::size_t j = 0; j < graph.arm_count(); ++j) {
    const double t = p[static_cast<Eigen::Index>(j)];
    if (t != 0.0) out += arm_point_extended(graph.arms()[j], t) - graph.junction();
  }
  return out;
}

Eigen::Matrix2Xd graph_position_jacobian_extended(const StarGraph& graph,
                                                  const Eigen::Ref<const Vector>& p) {
  Eigen::Matrix2Xd jac(2, static_cast<Eigen::Index>(graph.arm_count()));
  for (std::size_t j = 0; j < graph.arm_count(); ++j) {
    jac.col(static_cast<Eigen::Index>(j)) =
        arm_tangent_extended(graph.arms()[j], p[static_cast<Eigen::Index>(j)]);
  }
  return jac;
}

double objective(const DecisionVector& x) {
  double total = 0.0;
  for (int k = 0; k + 1 < x.N(); ++k) total += x.s(k);
  return total;
}

ResidualCounts residual_counts(const ProblemInstance& inst) {
  const int N = inst.N;
  const int m = static_cast<int>(inst.arm_count());
  ResidualCounts c;
  c.smooth_eq = 9 + N;
  c.disjunctive_eq = static_cast<int>(inst.task_count()) + m + (N - 1);
  c.smooth_ineq = 2 * (N - 1) + 2 * N + 2 * (N - 1) + 2 * N * m;
  return c;
}

Transcription::Transcription(const ProblemInstance& inst, const SmoothingConfig& cfg,
                             bool include_disjunctions)
    : inst_(inst),
      cfg_(cfg),
      layout_(inst.N, static_cast<int>(inst.arm_count())),
      disjunctions_(include_disjunctions) {
  cfg_.validate();
}

void Transcription::evaluate(const Vector& xv, ResidualEval& out, bool with_jacobian,
                             std::vector<std::string>* eq_labels,
                             std::vector<std::string>* ineq_labels) const {
  out.clear();
  const DecisionLayout& L = layout_;
  const int N = L.N;
  const int m = L.arms;
  const PhysicalParams& P = inst_.params;
  const StarGraph& G = inst_.graph;
  const Vector& pmax = G.p_max();
  constexpr double nu2 = kNormRegularizer * kNormRegularizer;

  auto ra = [&](int k) { return Vec2(xv[L.ra(k)], xv[L.ra(k) + 1]); };
  auto e = [&](int k) { return xv[L.e(k)]; };
  auto s = [&](int k) { return xv[L.s(k)]; };
  auto p = [&](int k, int j) { return xv[L.p(k, j)]; };

  std::vector<Vec2> gk(static_cast<std::size_t>(N));
  std::vector<Eigen::Matrix2Xd> Jk(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    const auto pk = xv.segment(L.p(k), m);
    graph_frame_extended(G, pk, gk[k], Jk[k]);
  }

  RowWriter eq(out.eq, with_jacobian ? &out.jac_eq : nullptr, eq_labels);
  RowWriter in(out.ineq, with_jacobian ? &out.jac_ineq : nullptr, ineq_labels);
  const char* axis[2] = {"x", "y"};

  // Boundary equalities.
  for (int c = 0; c < 2; ++c) {
    eq.add(L.ra(0) + c, 1.0);
    eq.finish(ra(0)[c] - inst_.r0[c], [&] { return std::string("uav_start.") + axis[c]; });
  }
  for (int c = 0; c < 2; ++c) {
    eq.add(L.ra(N - 1) + c, 1.0);
    eq.finish(ra(N - 1)[c] - inst_.rf[c], [&] { return std::string("uav_end.") + axis[c]; });
  }
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < m; ++j) eq.add(L.p(0, j), Jk[0](c, j));
    eq.finish(gk[0][c] - inst_.r0[c], [&] { return std::string("ugv_start.") + axis[c]; });
  }
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < m; ++j) eq.add(L.p(N - 1, j), Jk[N - 1](c, j));
    eq.finish(gk[N - 1][c] - inst_.rf[c], [&] { return std::string("ugv_end.") + axis[c]; });
  }
  eq.add(L.e(0), 1.0);
  eq.finish(e(0) - P.e_max, [] { return std::string("battery_start"); });

  // Complementarity p^T (1 1^T - I) p = (sum p)^2 - sum p^2.
  for (int k = 0; k < N; ++k) {
    double sum = 0.0, sq = 0.0;
    for (int j = 0; j < m; ++j) {
      sum += p(k, j);
      sq += p(k, j) * p(k, j);
    }
    if (eq.jacobian()) {
      for (int j = 0; j < m; ++j) eq.add(L.p(k, j), 2.0 * (sum - p(k, j)));
    }
    eq.finish(sum * sum - sq, [&] { return stamp_label("complementarity", k); });
  }

  // Speed limits.
  for (int k = 0; k + 1 < N; ++k) {
    const Vec2 d = ra(k + 1) - ra(k);
    const double n = std::sqrt(d.squaredNorm() + nu2);
    if (in.jacobian()) {
      for (int c = 0; c < 2; ++c) {
        in.add(L.ra(k + 1) + c, d[c] / n);
        in.add(L.ra(k) + c, -d[c] / n);
      }
      in.add(L.s(k), -P.v_max_A);
    }
    in.finish(n - P.v_max_A * s(k), [&] { return stamp_label("uav_speed", k); });
  }
  for (int k = 0; k + 1 < N; ++k) {
    double total = 0.0;
    for (int j = 0; j < m; ++j) {
      const double d = p(k + 1, j) - p(k, j);
      const double n = std::sqrt(d * d + nu2);
      total += n;
      if (in.jacobian()) {
        in.add(L.p(k + 1, j), d / n);
        in.add(L.p(k, j), -d / n);
      }
    }
    in.add(L.s(k), -P.v_max_G);
    in.finish(total - P.v_max_G * s(k), [&] { return stamp_label("ugv_speed", k); });
  }

  // Boxes.
  for (int k = 0; k < N; ++k) {
    in.add(L.e(k), -1.0);
    in.finish(P.e_min - e(k), [&] { return stamp_label("battery_lower", k); });
    in.add(L.e(k), 1.0);
    in.finish(e(k) - P.e_max, [&] { return stamp_label("battery_upper", k); });
  }
  for (int k = 0; k + 1 < N; ++k) {
    in.add(L.s(k), -1.0);
    in.finish(P.s_min - s(k), [&] { return stamp_label("duration_lower", k); });
    in.add(L.s(k), 1.0);
    in.finish(s(k) - P.s_max, [&] { return stamp_label("duration_upper", k); });
  }
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < m; ++j) {
      in.add(L.p(k, j), -1.0);
      in.finish(-p(k, j), [&] { return stamp_label("arm_lower", k, j); });
      in.add(L.p(k, j), 1.0);
      in.finish(p(k, j) - pmax[j], [&] { return stamp_label("arm_upper", k, j); });
    }
  }

  if (!disjunctions_) return;

  std::vector<double> c(static_cast<std::size_t>(N));
  std::vector<double> w(static_cast<std::size_t>(N));
  const bool jac = eq.jacobian();

  // Task visits: softmin_k ||r^A_k - a_i||.
  for (std::size_t i = 0; i < inst_.task_count(); ++i) {
    const Vec2& a = inst_.uav_tasks[i];
    for (int k = 0; k < N; ++k) c[k] = std::sqrt((ra(k) - a).squaredNorm() + nu2);
    const double val = softmin(c, cfg_, jac ? std::span<double>(w) : std::span<double>());
    if (jac) {
      for (int k = 0; k < N; ++k) {
        const Vec2 d = ra(k) - a;
        eq.add(L.ra(k), w[k] * d.x() / c[k]);
        eq.add(L.ra(k) + 1, w[k] * d.y() / c[k]);
      }
    }
    eq.finish(val, [&] { return stamp_label("task_visit", static_cast<int>(i)); });
  }

  // Arm-end visits: softmin_k |p_kj - pmax_j|.
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < N; ++k) {
      const double d = p(k, j) - pmax[j];
      c[k] = std::sqrt(d * d + nu2);
    }
    const double val = softmin(c, cfg_, jac ? std::span<double>(w) : std::span<double>());
    if (jac) {
      for (int k = 0; k < N; ++k) eq.add(L.p(k, j), w[k] * (p(k, j) - pmax[j]) / c[k]);
    }
    eq.finish(val, [&] { return stamp_label("arm_visit", j); });
  }

  // Battery: softmin(charge-branch stacked norm, |discharge residual|).
  double bc[2];
  double bw[2];
  for (int k = 0; k + 1 < N; ++k) {
    const double alpha = e(k + 1) - e(k) - P.kappa * s(k);
    const double sig = sigma_delta(alpha, cfg_.delta);
    const double dsig = sigma_delta_derivative(alpha, cfg_.delta);
    const Vec2 d0 = ra(k) - gk[k];
    const Vec2 d1 = ra(k + 1) - gk[k + 1];
    const double c1 = std::sqrt(sig * sig + d0.squaredNorm() + d1.squaredNorm() + nu2);
    const double beta = e(k + 1) - e(k) + s(k);
    const double c2 = std::sqrt(beta * beta + nu2);
    bc[0] = c1;
    bc[1] = c2;
    const double val = softmin(std::span<const double>(bc, 2), cfg_,
                               jac ? std::span<double>(bw, 2) : std::span<double>());
    if (jac) {
      const double a1 = bw[0] / c1;
      const double ss = a1 * sig * dsig;
      eq.add(L.e(k + 1), ss);
      eq.add(L.e(k), -ss);
      eq.add(L.s(k), -P.kappa * ss);
      for (int cc = 0; cc < 2; ++cc) {
        eq.add(L.ra(k) + cc, a1 * d0[cc]);
        eq.add(L.ra(k + 1) + cc, a1 * d1[cc]);
      }
      for (int j = 0; j < m; ++j) {
        eq.add(L.p(k, j), -a1 * (Jk[k](0, j) * d0.x() + Jk[k](1, j) * d0.y()));
        eq.add(L.p(k + 1, j), -a1 * (Jk[k + 1](0, j) * d1.x() + Jk[k + 1](1, j) * d1.y()));
      }
      const double a2 = bw[1] * beta / c2;
      eq.add(L.e(k + 1), a2);
      eq.add(L.e(k), -a2);
      eq.add(L.s(k), a2);
    }
    eq.finish(val, [&] { return stamp_label("battery_mode", k); });
  }
}

namespace {

ResidualBundle to_bundle(const ResidualEval& ev, std::vector<std::string> eq_labels,
                         std::vector<std::string> ineq_labels, int eq_begin) {
  ResidualBundle b;
  const int ne = static_cast<int>(ev.eq.size()) - eq_begin;
  b.eq = Eigen::Map<const Vector>(ev.eq.data() + eq_begin, ne);
  b.eq_labels.assign(eq_labels.begin() + eq_begin, eq_labels.end());
  b.ineq = Eigen::Map<const Vector>(ev.ineq.data(), static_cast<Eigen::Index>(ev.ineq.size()));
  b.ineq_labels = std::move(ineq_labels);
  return b;
}

void check_layout(const DecisionVector& x, const ProblemInstance& inst) {
  if (x.layout() != DecisionLayout(inst.N, static_cast<int>(inst.arm_count()))) {
    throw std::invalid_argument("decision vector layout does not match the instance");
  }
}

}  // namespace

ResidualBundle smooth_residuals(const DecisionVector& x, const ProblemInstance& inst) {
  check_layout(x, inst);
  Transcription tr(inst, SmoothingConfig{}, false);
  ResidualEval ev;
  std::vector<std::string> el, il;
  tr.evaluate(x.flat(), ev, false, &el, &il);
  return to_bundle(ev, std::move(el), std::move(il), 0);
}

ResidualBundle disjunctive_residuals(const DecisionVector& x, const ProblemInstance& inst,
                                     const SmoothingConfig& cfg) {
  check_layout(x, inst);
  Transcription tr(inst, cfg, true);
  ResidualEval ev;
  std::vector<std::string> el, il;
  tr.evaluate(x.flat(), ev, false, &el, &il);
  ResidualBundle b = to_bundle(ev, std::move(el), {}, residual_counts(inst).smooth_eq);
  b.ineq.resize(0);
  return b;
}

std::vector<BatteryBranches> battery_branches(const DecisionVector& x, const ProblemInstance& inst) {
  const int N = x.N();
  const PhysicalParams& P = inst.params;
  std::vector<BatteryBranches> out(static_cast<std::size_t>(N - 1));
  for (int k = 0; k + 1 < N; ++k) {
    const double alpha = std::max(0.0, x.e(k + 1) - x.e(k) - P.kappa * x.s(k));
    const Vec2 d0 = x.ra(k) - graph_position_extended(inst.graph, x.p(k));
    const Vec2 d1 = x.ra(k + 1) - graph_position_extended(inst.graph, x.p(k + 1));
    out[k].charge = std::sqrt(alpha * alpha + d0.squaredNorm() + d1.squaredNorm());
    out[k].discharge = std::abs(x.e(k + 1) - x.e(k) + x.s(k));
  }
  return out;
}

ViolationBreakdown violation_report(const DecisionVector& x, const ProblemInstance& inst) {
  check_layout(x, inst);
  const int N = x.N();
  const int m = static_cast<int>(inst.arm_count());
  const PhysicalParams& P = inst.params;
  const Vector& pmax = inst.graph.p_max();
  ViolationBreakdown v;

  auto abs_sum = [](const Vec2& d) { return std::abs(d.x()) + std::abs(d.y()); };
  auto pos = [](double g) { return std::max(0.0, g); };

  v.smooth_eq += abs_sum(x.ra(0) - inst.r0);
  v.smooth_eq += abs_sum(x.ra(N - 1) - inst.rf);
  v.smooth_eq += abs_sum(graph_position_extended(inst.graph, x.p(0)) - inst.r0);
  v.smooth_eq += abs_sum(graph_position_extended(inst.graph, x.p(N - 1)) - inst.rf);
  v.smooth_eq += std::abs(x.e(0) - P.e_max);
  for (int k = 0; k < N; ++k) {
    const auto pk = x.p(k);
    const double sum = pk.sum();
    v.smooth_eq += std::abs(sum * sum - pk.squaredNorm());
  }

  for (int k = 0; k + 1 < N; ++k) {
    v.smooth_ineq += pos((x.ra(k + 1) - x.ra(k)).norm() - P.v_max_A * x.s(k));
    v.smooth_ineq += pos((x.p(k + 1) - x.p(k)).lpNorm<1>() - P.v_max_G * x.s(k));
    v.smooth_ineq += pos(P.s_min - x.s(k)) + pos(x.s(k) - P.s_max);
  }
  for (int k = 0; k < N; ++k) {
    v.smooth_ineq += pos(P.e_min - x.e(k)) + pos(x.e(k) - P.e_max);
    for (int j = 0; j < m; ++j) v.smooth_ineq += pos(-x.p(k)[j]) + pos(x.p(k)[j] - pmax[j]);
  }

  for (const Vec2& a : inst.uav_tasks) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < N; ++k) best = std::min(best, (x.ra(k) - a).norm());
    v.task_visit += best;
  }
  for (int j = 0; j < m; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < N; ++k) best = std::min(best, std::abs(x.p(k)[j] - pmax[j]));
    v.arm_visit += best;
  }
  for (const BatteryBranches& b : battery_branches(x, inst)) v.battery += std::min(b.charge, b.discharge);

  v.total = v.smooth_eq + v.smooth_ineq + v.task_visit + v.arm_visit + v.battery;
  return v;
}

Vector full_gradient(const DecisionVector& x, const ProblemInstance& inst,
                     const SmoothingConfig& cfg, const ResidualWeights& weights) {
  check_layout(x, inst);
  Transcription tr(inst, cfg, true);
  ResidualEval ev;
  tr.evaluate(x.flat(), ev, true);
  if (weights.eq.size() != static_cast<Eigen::Index>(ev.eq.size()) ||
      weights.ineq.size() != static_cast<Eigen::Index>(ev.ineq.size())) {
    throw std::invalid_argument("residual weights do not match the residual counts");
  }
  Vector g = Vector::Zero(x.layout().size());
  g.segment(x.layout().s_begin(), x.N() - 1).setConstant(weights.objective);
  ev.jac_eq.accumulate_transpose(weights.eq, g);
  ev.jac_ineq.accumulate_transpose(weights.ineq, g);
  return g;
}

NlpProblem::NlpProblem(const ProblemInstance& inst, const SmoothingConfig& cfg)
    : transcription_(inst, cfg, true), cfg_(cfg) {}

double NlpProblem::objective(const Vector& x, Vector* grad) const {
  const DecisionLayout& L = transcription_.layout();
  if (grad) {
    grad->setZero(L.size());
    grad->segment(L.s_begin(), L.N - 1).setConstant(1.0);
  }
  return x.segment(L.s_begin(), L.N - 1).sum();
}

void NlpProblem::residuals(const Vector& x, ResidualEval& out, bool with_jacobian) const {
  transcription_.evaluate(x, out, with_jacobian);
}

double NlpProblem::exact_violation(const Vector& x) const {
  return violation_report(DecisionVector(transcription_.layout(), x), transcription_.instance()).total;
}

std::vector<double> NlpProblem::equality_floor() const {
  const ProblemInstance& inst = transcription_.instance();
  const ResidualCounts counts = residual_counts(inst);
  std::vector<double> floor(static_cast<std::size_t>(counts.smooth_eq), 0.0);
  const double visit_bias = cfg_.feasibility_bias(static_cast<std::size_t>(inst.N));
  for (std::size_t i = 0; i < inst.task_count() + inst.arm_count(); ++i) floor.push_back(visit_bias);
  const double battery_bias = cfg_.feasibility_bias(2);
  for (int k = 0; k + 1 < inst.N; ++k) floor.push_back(battery_bias);
  return floor;
}

}  // namespace rvopt
