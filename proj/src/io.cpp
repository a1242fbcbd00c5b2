#include "rvopt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rvopt {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

Vec2 read_point(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(std::string(what) + " must be a [x, y] pair of numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

double require_number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

json point(const Vec2& v) { return json::array({v.x(), v.y()}); }

}  // namespace

ProblemInstance instance_from_json(const json& j) {
  try {
    const Vec2 junction = read_point(require(j, "junction"), "junction");
    const json& arms_j = require(j, "arms");
    if (!arms_j.is_array() || arms_j.empty()) throw ParseError("'arms' must be a nonempty list");
    std::vector<Arm> arms;
    for (const json& a : arms_j) {
      const json& type = require(a, "type");
      if (type == "straight") {
        arms.push_back(Arm::straight(junction, read_point(require(a, "direction"), "direction"),
                                     require_number(a, "length")));
      } else if (type == "polyline") {
        const json& pts_j = require(a, "points");
        if (!pts_j.is_array() || pts_j.empty()) throw ParseError("polyline 'points' must be a nonempty list");
        std::vector<Vec2> pts;
        for (const json& p : pts_j) pts.push_back(read_point(p, "polyline point"));
        std::optional<double> length;
        if (a.contains("length")) length = require_number(a, "length");
        arms.push_back(Arm::polyline(junction, pts, length));
      } else {
        throw ParseError("arm type must be \"straight\" or \"polyline\"");
      }
    }
    std::vector<Vec2> tasks;
    if (j.contains("uav_tasks")) {
      const json& t = j.at("uav_tasks");
      if (!t.is_array()) throw ParseError("'uav_tasks' must be a list");
      for (const json& p : t) tasks.push_back(read_point(p, "uav task"));
    }
    const json& pj = require(j, "params");
    PhysicalParams params;
    params.v_max_A = require_number(pj, "v_max_A");
    params.v_max_G = require_number(pj, "v_max_G");
    params.kappa = require_number(pj, "kappa");
    params.e_min = require_number(pj, "e_min");
    params.e_max = require_number(pj, "e_max");
    params.s_min = require_number(pj, "s_min");
    params.s_max = require_number(pj, "s_max");
    StarGraph graph(junction, std::move(arms));
    int N = default_stamp_count(tasks.size(), graph.arm_count());
    if (j.contains("N")) {
      if (!j.at("N").is_number_integer()) throw ParseError("'N' must be an integer");
      N = j.at("N").get<int>();
    }
    ProblemInstance inst{std::move(graph), std::move(tasks), read_point(require(j, "r0"), "r0"),
                         read_point(require(j, "rf"), "rf"), params, N};
    inst.validate();
    return inst;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(e.what());
  }
}

json instance_to_json(const ProblemInstance& inst) {
  json arms = json::array();
  for (const Arm& a : inst.graph.arms()) {
    const auto& cp = a.control_points();
    if (cp.empty()) throw std::invalid_argument("parametric arms cannot be serialized");
    if (a.is_straight()) {
      arms.push_back({{"type", "straight"}, {"direction", point((cp[1] - cp[0]).normalized())},
                      {"length", a.length()}});
    } else {
      json pts = json::array();
      for (std::size_t i = 1; i < cp.size(); ++i) pts.push_back(point(cp[i]));
      arms.push_back({{"type", "polyline"}, {"points", pts}, {"length", a.length()}});
    }
  }
  json tasks = json::array();
  for (const Vec2& t : inst.uav_tasks) tasks.push_back(point(t));
  const PhysicalParams& p = inst.params;
  return {{"junction", point(inst.graph.junction())},
          {"arms", arms},
          {"uav_tasks", tasks},
          {"r0", point(inst.r0)},
          {"rf", point(inst.rf)},
          {"params",
           {{"v_max_A", p.v_max_A}, {"v_max_G", p.v_max_G}, {"kappa", p.kappa}, {"e_min", p.e_min},
            {"e_max", p.e_max}, {"s_min", p.s_min}, {"s_max", p.s_max}}},
          {"N", inst.N}};
}

ProblemInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

void write_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << instance_to_json(inst).dump(2) << '\n';
}

json breakdown_to_json(const ViolationBreakdown& v) {
  return {{"smooth_eq", v.smooth_eq}, {"smooth_ineq", v.smooth_ineq}, {"task_visit", v.task_visit},
          {"arm_visit", v.arm_visit}, {"battery", v.battery},         {"total", v.total}};
}

json solution_to_json(const DecisionVector& x, const ProblemInstance& inst) {
  json rows = json::array();
  double t = 0.0;
  for (int k = 0; k < x.N(); ++k) {
    json p = json::array();
    for (Eigen::Index j = 0; j < x.p(k).size(); ++j) p.push_back(x.p(k)[j]);
    json row = {{"k", k + 1},
                {"t", t},
                {"r_A", point(x.ra(k))},
                {"r_G", point(graph_position_extended(inst.graph, x.p(k)))},
                {"p", p},
                {"e", x.e(k)}};
    if (k + 1 < x.N()) {
      row["s"] = x.s(k);
      t += x.s(k);
    }
    rows.push_back(row);
  }
  return {{"objective", objective(x)},
          {"violation", breakdown_to_json(violation_report(x, inst))},
          {"stamps", rows}};
}

void write_solution(const DecisionVector& x, const ProblemInstance& inst,
                    const std::filesystem::path& json_path, const std::filesystem::path& csv_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write " + json_path.string());
    out << solution_to_json(x, inst).dump(2) << '\n';
  }
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());
  const int m = x.layout().arms;
  out << "k,t,ra_x,ra_y,rg_x,rg_y";
  for (int j = 0; j < m; ++j) out << ",p" << j;
  out << ",e,s\n";
  double t = 0.0;
  for (int k = 0; k < x.N(); ++k) {
    const Vec2 rg = graph_position_extended(inst.graph, x.p(k));
    out << (k + 1) << ',' << format_double(t) << ',' << format_double(x.ra(k).x()) << ','
        << format_double(x.ra(k).y()) << ',' << format_double(rg.x()) << ',' << format_double(rg.y());
    for (int j = 0; j < m; ++j) out << ',' << format_double(x.p(k)[j]);
    out << ',' << format_double(x.e(k)) << ',';
    if (k + 1 < x.N()) {
      out << format_double(x.s(k));
      t += x.s(k);
    }
    out << '\n';
  }
}

namespace {

json matrix_rows(const Eigen::MatrixXi& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json assignment_to_json(const BinaryAssignment& a) {
  return {{"U", matrix_rows(a.U)}, {"V", matrix_rows(a.V)}, {"W", a.W}};
}

json oracle_to_json(const OracleResult& r, const ProblemInstance& inst) {
  json j = {{"feasible", r.feasible},
            {"timed_out", r.timed_out},
            {"objective", finite_or_null(r.objective)},
            {"violation", finite_or_null(r.violation)},
            {"lower_bound", finite_or_null(r.lower_bound)},
            {"patterns", r.patterns},
            {"infeasible_patterns", r.infeasible},
            {"bound_pruned", r.bound_pruned},
            {"subproblems", r.subproblems},
            {"wall_s", r.wall_s}};
  if (r.feasible) {
    j["assignment"] = assignment_to_json(r.assignment);
    j["solution"] = solution_to_json(r.x, inst);
  }
  return j;
}

void write_trace_csv(const std::vector<TracePoint>& trace, std::ostream& os) {
  os << "wall_s,objective_h,violation,rho,outer,inner_iters\n";
  for (const TracePoint& p : trace) {
    os << format_double(p.wall_s) << ',' << format_double(p.objective) << ','
       << format_double(p.violation) << ',' << format_double(p.rho) << ',' << p.outer << ','
       << p.inner_iters << '\n';
  }
}

void write_trace_csv(const std::vector<TracePoint>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trace_csv(trace, out);
}

}  // namespace rvopt
