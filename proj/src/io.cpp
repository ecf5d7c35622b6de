#include "pmp/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace pmp {

namespace {

const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "." + key + ": missing field");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (j.is_string() && j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
  return j.get<int>();
}

Vec vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = number(j[k], path + "[" + std::to_string(k) + "]");
  return v;
}

Mat matrix(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows > 0 && j[0].is_array() ? j[0].size() : 0;
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const Vec row = vector(j[r], path + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) throw ParseError(path + ": ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Region region(const Json& j, const std::string& path) {
  Region r;
  if (j.is_object()) {
    r.boxes.push_back(box_from_json(j, path));
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) r.boxes.push_back(box_from_json(j[k], path + "[" + std::to_string(k) + "]"));
  } else {
    throw ParseError(path + ": expected a box or an array of boxes");
  }
  return r;
}

Json region_json(const Region& r) {
  Json a = Json::array();
  for (const auto& b : r.boxes) a.push_back(box_to_json(b));
  return a;
}

Json coords_json(const TeamState& s) {
  Json a = Json::array();
  for (const auto& x : s) a.push_back(vec_json(x));
  return a;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

Json box_to_json(const Box& b) { return Json{{"min", vec_json(b.lo)}, {"max", vec_json(b.hi)}}; }

Box box_from_json(const Json& j, const std::string& path) {
  Vec lo = vector(field(j, "min", path), path + ".min");
  Vec hi = vector(field(j, "max", path), path + ".max");
  if (lo.size() != hi.size()) throw ParseError(path + ": min and max differ in dimension");
  return Box(lo, hi);
}

Scenario scenario_from_json(const Json& j) {
  Scenario sc;
  const std::string root = "scenario";
  if (!j.is_object()) throw ParseError(root + ": expected an object");
  sc.name = j.value("name", std::string());
  sc.sigma = number(field(j, "sigma", root), root + ".sigma");
  const Json& robots = field(j, "robots", root);
  if (!robots.is_array()) throw ParseError(root + ".robots: expected an array");
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const std::string p = root + ".robots[" + std::to_string(i) + "]";
    const Json& rj = robots[i];
    RobotSpec r;
    r.id = rj.contains("id") ? integer(rj["id"], p + ".id") : static_cast<int>(i);
    const Json& dyn = field(rj, "dynamics", p);
    if (!dyn.is_string()) throw ParseError(p + ".dynamics: expected a string");
    try {
      r.kind = dynamics_kind_from_string(dyn.get<std::string>());
    } catch (const DomainError& e) {
      throw ParseError(p + ".dynamics: " + e.what());
    }
    const Box state = box_from_json(field(rj, "state_box", p), p + ".state_box");
    r.control_box = box_from_json(field(rj, "control_box", p), p + ".control_box");
    r.state_dim = static_cast<int>(state.dim());
    r.control_dim = static_cast<int>(r.control_box.dim());
    r.speed_bound = number(field(rj, "speed_bound", p), p + ".speed_bound");
    r.lipschitz = rj.contains("lipschitz") ? number(rj["lipschitz"], p + ".lipschitz") : 0.0;
    if (r.kind == DynamicsKind::kCustomAffine) {
      r.A = matrix(field(rj, "A", p), p + ".A");
      r.B = matrix(field(rj, "B", p), p + ".B");
      r.c = vector(field(rj, "c", p), p + ".c");
    }
    sc.robots.push_back(r);
    sc.state_boxes.push_back(state);
    sc.goals.push_back(region(field(rj, "goal", p), p + ".goal"));
    sc.obstacles.push_back(rj.contains("obstacles") ? region(rj["obstacles"], p + ".obstacles") : Region{});
    if (rj.contains("start")) sc.start.push_back(vector(rj["start"], p + ".start"));
  }
  if (!sc.start.empty() && sc.start.size() != sc.robots.size()) {
    throw ParseError(root + ".robots: start given for some robots only");
  }
  return sc;
}

Json scenario_to_json(const Scenario& sc) {
  Json robots = Json::array();
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const auto& r = sc.robots[i];
    Json rj{{"id", r.id},
            {"dynamics", to_string(r.kind)},
            {"state_box", box_to_json(sc.state_boxes[i])},
            {"control_box", box_to_json(r.control_box)},
            {"speed_bound", r.speed_bound},
            {"lipschitz", r.lipschitz},
            {"goal", region_json(sc.goals[i])},
            {"obstacles", region_json(sc.obstacles[i])}};
    if (r.kind == DynamicsKind::kCustomAffine) {
      Json a = Json::array(), b = Json::array();
      for (Eigen::Index k = 0; k < r.A.rows(); ++k) a.push_back(vec_json(r.A.row(k).transpose()));
      for (Eigen::Index k = 0; k < r.B.rows(); ++k) b.push_back(vec_json(r.B.row(k).transpose()));
      rj["A"] = a;
      rj["B"] = b;
      rj["c"] = vec_json(r.c);
    }
    if (!sc.start.empty()) rj["start"] = vec_json(sc.start[i]);
    robots.push_back(rj);
  }
  return Json{{"name", sc.name}, {"sigma", sc.sigma}, {"robots", robots}};
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  Scenario sc;
  try {
    sc = scenario_from_json(read_json(path));
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    throw ParseError(msg.rfind(path, 0) == 0 ? msg : path + ": " + msg);
  }
  validate_scenario(sc);
  for (std::size_t i = 0; i < sc.size(); ++i) {
    if (!audit_speed_bound(sc.robots[i], sc.state_boxes[i])) {
      throw ValidationError("speed_bound_audit", "robot " + std::to_string(sc.robots[i].id) +
                                                     " exceeds its declared speed bound");
    }
  }
  return sc;
}

std::uint64_t scenario_hash(const Scenario& sc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : scenario_to_json(sc).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Schedule schedule_from_json(const Json& j, const Scenario& sc) {
  const std::string root = "schedule";
  if (!j.is_object()) throw ParseError(root + ": expected an object");
  Schedule s;
  const double gamma = j.contains("gamma") ? number(j["gamma"], root + ".gamma") : 0.5;
  const int window = j.contains("window") ? integer(j["window"], root + ".window") : 1;
  if (j.contains("stages")) {
    const Json& st = j["stages"];
    if (!st.is_array()) throw ParseError(root + ".stages: expected an array");
    for (std::size_t k = 0; k < st.size(); ++k) {
      const std::string p = root + ".stages[" + std::to_string(k) + "]";
      StageSpec spec;
      spec.h = number(field(st[k], "h", p), p + ".h");
      spec.eps = number(field(st[k], "eps", p), p + ".eps");
      if (st[k].contains("budget")) spec.budget = integer(st[k]["budget"], p + ".budget");
      s.stages.push_back(spec);
    }
    s.gamma = gamma;
    s.window = window;
  } else {
    const double h0 = number(field(j, "h0", root), root + ".h0");
    const int count = integer(field(j, "count", root), root + ".count");
    const Json& rule = field(j, "eps_rule", root);
    EpsRule r;
    if (rule == "sqrt_h") {
      r = EpsRule::kSqrtH;
    } else if (rule == "sqrt_h_over_m_plus") {
      r = EpsRule::kSqrtHOverMPlus;
    } else {
      throw ParseError(root + ".eps_rule: expected \"sqrt_h\" or \"sqrt_h_over_m_plus\"");
    }
    s = dyadic_schedule(h0, count, r, team_bounds(sc).m_plus, gamma, window);
  }
  return s;
}

Json schedule_to_json(const Schedule& s) {
  Json stages = Json::array();
  for (const auto& st : s.stages) stages.push_back(Json{{"h", st.h}, {"eps", st.eps}, {"budget", st.budget}});
  return Json{{"stages", stages}, {"gamma", s.gamma}, {"window", s.window}};
}

Schedule load_schedule(const std::string& path, const Scenario& sc) {
  try {
    return schedule_from_json(read_json(path), sc);
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    throw ParseError(msg.rfind(path, 0) == 0 ? msg : path + ": " + msg);
  }
}

Json pareto_to_json(const ParetoSet& s) {
  Json a = Json::array();
  for (std::size_t k = 0; k < s.size(); ++k) {
    Json p = Json::array();
    const Vec v = s.at(k);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::isinf(v[i])) {
        p.push_back("inf");
      } else {
        p.push_back(v[i]);
      }
    }
    a.push_back(p);
  }
  return a;
}

ParetoSet pareto_from_json(const Json& j, int dim) {
  if (!j.is_array()) throw ParseError("frontier: expected an array of arrays");
  std::vector<double> flat;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const Vec v = vector(j[k], "frontier[" + std::to_string(k) + "]");
    if (v.size() != dim) throw ParseError("frontier[" + std::to_string(k) + "]: wrong dimension");
    flat.insert(flat.end(), v.data(), v.data() + v.size());
  }
  if (flat.empty()) throw ParseError("frontier: empty");
  return reduce_frontier(std::move(flat), dim);
}

Json stage_header(const StageResult& st, std::uint64_t hash, const Json& config) {
  return Json{{"type", "header"},
              {"stage", st.stage.index},
              {"refinement", st.refinement},
              {"h", st.stage.h},
              {"eps", st.stage.eps},
              {"alpha", st.cache.alpha},
              {"kappa", st.cache.kappa},
              {"sweeps", st.sweeps},
              {"nodes", st.stage.node_count},
              {"safety_nodes", st.cache.safety.size()},
              {"warnings", st.warnings},
              {"scenario_hash", hash_hex(hash)},
              {"config", config}};
}

void write_value_dump(const std::string& path, const StageResult& st, std::uint64_t hash, const Json& config) {
  auto out = open_out(path);
  out << stage_header(st, hash, config).dump() << '\n';
  const int dim = static_cast<int>(st.stage.robots());
  for (NodeId x : st.cache.safety.list) {
    Json frontier = Json::array();
    const double* p = st.v_final.points(x);
    for (std::size_t k = 0; k < st.v_final.count(x); ++k) {
      Json row = Json::array();
      for (int i = 0; i < dim; ++i) row.push_back(p[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)]);
      frontier.push_back(row);
    }
    out << Json{{"node", x}, {"coords", coords_json(st.stage.state(x))}, {"frontier", frontier}}.dump() << '\n';
  }
}

void write_policy_dump(const std::string& path, const StageResult& st, std::uint64_t hash, const Json& config) {
  auto out = open_out(path);
  out << stage_header(st, hash, config).dump() << '\n';
  const std::size_t n = st.stage.robots();
  for (NodeId x = 0; x + 1 < st.policy.offsets.size(); ++x) {
    const std::size_t count = st.policy.count(x);
    if (count == 0) continue;
    Json entries = Json::array();
    for (const PolicyEntry* e = st.policy.begin(x); e != st.policy.begin(x) + count; ++e) {
      const auto team = st.policy.decode(e->control);
      Json controls = Json::array();
      for (std::size_t i = 0; i < n; ++i) {
        if (team[i] < 0) {
          controls.push_back(nullptr);
        } else {
          controls.push_back(vec_json(st.policy.controls[i][static_cast<std::size_t>(team[i])]));
        }
      }
      entries.push_back(Json{{"control", controls}, {"successor", e->successor}, {"value_index", e->value_index}});
    }
    out << Json{{"node", x}, {"coords", coords_json(st.stage.state(x))}, {"entries", entries}}.dump() << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Scenario& sc, const Trajectory& traj,
                          const std::vector<std::string>& comments) {
  auto out = open_out(path);
  for (const auto& c : comments) out << "# " << c << '\n';
  const std::size_t n = sc.size();
  out << "t";
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < sc.robots[i].state_dim; ++k) out << ",x" << i << '_' << k;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < sc.robots[i].control_dim; ++k) out << ",u" << i << '_' << k;
  }
  out << ",min_pairwise_distance\n";
  for (std::size_t r = 0; r < traj.t.size(); ++r) {
    out << format_double(traj.t[r]);
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < traj.states[r][i].size(); ++k) out << ',' << format_double(traj.states[r][i][k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < traj.controls[r][i].size(); ++k) out << ',' << format_double(traj.controls[r][i][k]);
    }
    out << ',' << format_double(traj.pairwise[r]) << '\n';
  }
}

Json metrics_to_json(const TrajectoryMetrics& m) {
  Json arrival = Json::array();
  for (Eigen::Index i = 0; i < m.arrival.size(); ++i) {
    if (std::isinf(m.arrival[i])) {
      arrival.push_back("inf");
    } else {
      arrival.push_back(m.arrival[i]);
    }
  }
  return Json{{"arrival", arrival},
              {"all_arrived", m.all_arrived},
              {"min_pairwise_distance", m.min_pairwise},
              {"min_obstacle_clearance", std::isinf(m.min_clearance) ? Json("inf") : Json(m.min_clearance)},
              {"dead_end_fallbacks", m.dead_end_fallbacks},
              {"feasible", m.feasible}};
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace pmp
