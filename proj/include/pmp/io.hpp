#pragma once

#include "pmp/planner.hpp"
#include "pmp/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pmp {

using Json = nlohmann::json;

/// Malformed input; the message names the offending field (and line for syntax errors).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json box_to_json(const Box& b);
Box box_from_json(const Json& j, const std::string& field);

/// Scenario schema:
///   {"name": str, "sigma": num, "robots": [{
///      "dynamics": "single_integrator_2d" | "unicycle" | "custom_affine",
///      "state_box": box, "control_box": box, "speed_bound": num, "lipschitz": num,
///      "goal": box | [box], "obstacles": [box], "start": [num],
///      "A": [[num]], "B": [[num]], "c": [num]   (custom_affine only)}]}
///   box = {"min": [num], "max": [num]}
Scenario scenario_from_json(const Json& j);
Json scenario_to_json(const Scenario& sc);
/// Parses and validates. Throws ParseError or ValidationError.
Scenario load_scenario(const std::string& path);

/// FNV-1a 64 over the compact sorted-key JSON of the scenario.
std::uint64_t scenario_hash(const Scenario& sc);
std::string hash_hex(std::uint64_t h);

/// Either {"stages": [{"h", "eps", "budget"?}], "gamma"?, "window"?} or
/// {"h0", "count", "eps_rule": "sqrt_h" | "sqrt_h_over_m_plus", "gamma"?, "window"?}.
Schedule schedule_from_json(const Json& j, const Scenario& sc);
Json schedule_to_json(const Schedule& s);
Schedule load_schedule(const std::string& path, const Scenario& sc);

/// Array of arrays; +inf is written as the string "inf".
Json pareto_to_json(const ParetoSet& s);
ParetoSet pareto_from_json(const Json& j, int dim);

Json stage_header(const StageResult& st, std::uint64_t hash, const Json& config);
/// JSON lines: header, then {"node", "coords", "frontier"} per safety node.
void write_value_dump(const std::string& path, const StageResult& st, std::uint64_t hash, const Json& config);
/// JSON lines: header, then {"node", "coords", "entries"} per node carrying policy entries.
void write_policy_dump(const std::string& path, const StageResult& st, std::uint64_t hash, const Json& config);

/// Columns t, x<i>_<k>, u<i>_<k>, min_pairwise_distance, preceded by '#' comment lines.
void write_trajectory_csv(const std::string& path, const Scenario& sc, const Trajectory& traj,
                          const std::vector<std::string>& comments);
Json metrics_to_json(const TrajectoryMetrics& m);

/// Shortest round-trip decimal form.
std::string format_double(double v);
void write_text(const std::string& path, const std::string& text);
Json read_json(const std::string& path);

}  // namespace pmp
