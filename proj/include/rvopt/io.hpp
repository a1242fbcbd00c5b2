// File formats: instance (JSON), solution (JSON + per-stamp CSV), trace (CSV).
#pragma once

#include "rvopt/alm.hpp"
#include "rvopt/minlp_oracle.hpp"
#include "rvopt/model.hpp"
#include "rvopt/transcription.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace rvopt {

/// Raised for malformed instance files (missing fields, wrong types, broken invariants).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ProblemInstance instance_from_json(const nlohmann::json& j);
nlohmann::json instance_to_json(const ProblemInstance& inst);
ProblemInstance read_instance(const std::filesystem::path& path);
void write_instance(const ProblemInstance& inst, const std::filesystem::path& path);

nlohmann::json breakdown_to_json(const ViolationBreakdown& v);

/// Per-stamp rows plus objective and violation breakdown.
nlohmann::json solution_to_json(const DecisionVector& x, const ProblemInstance& inst);
void write_solution(const DecisionVector& x, const ProblemInstance& inst,
                    const std::filesystem::path& json_path, const std::filesystem::path& csv_path);

/// Columns: wall_s, objective_h, violation, rho, outer, inner_iters.
void write_trace_csv(const std::vector<TracePoint>& trace, std::ostream& os);
void write_trace_csv(const std::vector<TracePoint>& trace, const std::filesystem::path& path);

/// Binaries as 0/1 row lists (U and V indexed [stamp][task or arm]).
nlohmann::json assignment_to_json(const BinaryAssignment& a);
/// Optimum, binaries, search counters and timing. Infinite values become null.
nlohmann::json oracle_to_json(const OracleResult& r, const ProblemInstance& inst);

/// Shortest decimal representation that round-trips.
std::string format_double(double v);

}  // namespace rvopt
