#include "ffcbf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace ffcbf::io {

namespace {

/// Applies `handlers` to every key of `section`; any key without a handler is an error.
void apply_section(const Json& doc, const std::string& name,
                   const std::map<std::string, std::function<void(const Json&)>>& handlers) {
  if (!doc.contains(name)) return;
  const Json& section = doc.at(name);
  if (!section.is_object()) throw ConfigError("config section '" + name + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("unknown config key '" + name + "." + key + "'");
    try {
      it->second(value);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + name + "." + key + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config key '" + name + "." + key + "': " + e.what());
    }
  }
}

auto number(double& target) {
  return [&target](const Json& v) {
    if (!v.is_number()) throw std::invalid_argument("expected a number");
    target = v.get<double>();
  };
}

auto integer(int& target) {
  return [&target](const Json& v) {
    if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
    target = v.get<int>();
  };
}

std::string time_or_empty(double t) { return std::isnan(t) ? std::string() : format_number(t); }

}  // namespace

Json config_to_json(const ScenarioConfig& c) {
  const ControllerConfig& k = c.controller;
  const BarrierConfig& b = k.barrier;
  Json doc;
  doc["scenario"] = {
      {"scenario", std::string(to_string(c.scenario))},
      {"num_vehicles", c.num_vehicles},
      {"d0", c.d0},
      {"delta_d", c.delta_d},
      {"s0", c.s0},
      {"delta_s", c.delta_s},
      {"v_max", c.v_max},
      {"dt", c.dt},
      {"t_max", c.t_max},
      {"seed", c.seed},
      {"lane_width", c.lane_width},
      {"box_half", c.box_half},
      {"R", c.R},
      {"stop_speed", c.stop_speed},
      {"deadlock_window", c.deadlock_window},
      {"exit_tolerance", c.exit_tolerance},
      {"max_resamples", c.max_resamples},
      {"reference_speed", c.reference_speed},
  };
  doc["controller"] = {
      {"mode", std::string(to_string(k.mode))},
      {"omega_bar", k.omega_bar},
      {"a_bar", k.a_bar},
      {"v_eps", k.v_eps},
      {"decentral_eps", k.decentral_eps},
      {"lr", k.vehicle.lr},
      {"lf", k.vehicle.lf},
  };
  doc["barrier"] = {
      {"kind", std::string(to_string(b.kind))},
      {"alpha_gain", b.alpha_gain},
      {"hocbf_gain", b.hocbf_gain},
      {"tau_bar", b.rff.ff.tau_bar},
      {"k", b.rff.ff.k},
      {"epsilon", b.rff.ff.epsilon},
      {"k0_scale", b.rff.k0_scale},
      {"k0_floor", b.rff.k0_floor},
  };
  doc["lqr"] = {{"q_pos", c.lqr.q_pos}, {"q_vel", c.lqr.q_vel}, {"r", c.lqr.r}};
  return doc;
}

ScenarioConfig config_from_json(const Json& doc, ScenarioConfig c) {
  if (!doc.is_object()) throw ConfigError("config document must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "scenario" && key != "controller" && key != "barrier" && key != "lqr") {
      throw ConfigError("unknown config section '" + key + "'");
    }
  }
  ControllerConfig& k = c.controller;
  BarrierConfig& b = k.barrier;
  apply_section(doc, "scenario",
                {{"scenario", [&](const Json& v) { c.scenario = scenario_kind_from_string(v.get<std::string>()); }},
                 {"num_vehicles", integer(c.num_vehicles)},
                 {"d0", number(c.d0)},
                 {"delta_d", number(c.delta_d)},
                 {"s0", number(c.s0)},
                 {"delta_s", number(c.delta_s)},
                 {"v_max", number(c.v_max)},
                 {"dt", number(c.dt)},
                 {"t_max", number(c.t_max)},
                 {"seed",
                  [&](const Json& v) {
                    if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
                    c.seed = v.get<std::uint64_t>();
                  }},
                 {"lane_width", number(c.lane_width)},
                 {"box_half", number(c.box_half)},
                 {"R", number(c.R)},
                 {"stop_speed", number(c.stop_speed)},
                 {"deadlock_window", number(c.deadlock_window)},
                 {"exit_tolerance", number(c.exit_tolerance)},
                 {"max_resamples", integer(c.max_resamples)},
                 {"reference_speed", number(c.reference_speed)}});
  apply_section(doc, "controller",
                {{"mode", [&](const Json& v) { k.mode = control_mode_from_string(v.get<std::string>()); }},
                 {"omega_bar", number(k.omega_bar)},
                 {"a_bar", number(k.a_bar)},
                 {"v_eps", number(k.v_eps)},
                 {"decentral_eps", number(k.decentral_eps)},
                 {"lr", number(k.vehicle.lr)},
                 {"lf", number(k.vehicle.lf)}});
  apply_section(doc, "barrier",
                {{"kind", [&](const Json& v) { b.kind = barrier_kind_from_string(v.get<std::string>()); }},
                 {"alpha_gain", number(b.alpha_gain)},
                 {"hocbf_gain", number(b.hocbf_gain)},
                 {"tau_bar", number(b.rff.ff.tau_bar)},
                 {"k", number(b.rff.ff.k)},
                 {"epsilon", number(b.rff.ff.epsilon)},
                 {"k0_scale", number(b.rff.k0_scale)},
                 {"k0_floor", number(b.rff.k0_floor)}});
  apply_section(doc, "lqr", {{"q_pos", number(c.lqr.q_pos)}, {"q_vel", number(c.lqr.q_vel)}, {"r", number(c.lqr.r)}});
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path, const ScenarioConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed config file '" + path.string() + "': " + e.what());
  }
  try {
    return config_from_json(doc, base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Json summary_to_json(const SummaryDocument& doc) {
  Json rows = Json::array();
  for (const SummaryRow& r : doc.rows) {
    const BatchSummary& s = r.stats;
    rows.push_back({
        {"cbf", r.cbf},
        {"n_trials", s.n_trials},
        {"success", s.success_rate},
        {"feas", s.feas_rate},
        {"dlock", s.deadlock_rate},
        {"unsafe", s.unsafe_rate},
        {"avg_time", s.avg_time ? Json(*s.avg_time) : Json(nullptr)},
        {"counts",
         {{"success", s.successes},
          {"feasible", s.always_feasible},
          {"deadlock", s.deadlocks},
          {"unsafe", s.unsafe},
          {"timeout", s.timeouts},
          {"error", s.errors},
          {"resamples", s.resamples}}},
    });
  }
  return {{"format", "ffcbf-summary/1"},
          {"scenario", doc.scenario},
          {"mode", doc.mode},
          {"seed", doc.seed},
          {"n_trials", doc.n_trials},
          {"rows", rows}};
}

SummaryDocument summary_from_json(const Json& j) {
  if (j.value("format", std::string()) != "ffcbf-summary/1") throw ConfigError("not a summary document");
  SummaryDocument doc;
  doc.scenario = j.at("scenario").get<std::string>();
  doc.mode = j.at("mode").get<std::string>();
  doc.seed = j.at("seed").get<std::uint64_t>();
  doc.n_trials = j.at("n_trials").get<std::size_t>();
  for (const Json& r : j.at("rows")) {
    SummaryRow row;
    row.cbf = r.at("cbf").get<std::string>();
    BatchSummary& s = row.stats;
    s.n_trials = r.at("n_trials").get<std::size_t>();
    s.success_rate = r.at("success").get<double>();
    s.feas_rate = r.at("feas").get<double>();
    s.deadlock_rate = r.at("dlock").get<double>();
    s.unsafe_rate = r.at("unsafe").get<double>();
    if (!r.at("avg_time").is_null()) s.avg_time = r.at("avg_time").get<double>();
    const Json& c = r.at("counts");
    s.successes = c.at("success").get<std::size_t>();
    s.always_feasible = c.at("feasible").get<std::size_t>();
    s.deadlocks = c.at("deadlock").get<std::size_t>();
    s.unsafe = c.at("unsafe").get<std::size_t>();
    s.timeouts = c.at("timeout").get<std::size_t>();
    s.errors = c.at("error").get<std::size_t>();
    s.resamples = c.at("resamples").get<std::size_t>();
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

std::string write_summary(const SummaryDocument& doc) { return summary_to_json(doc).dump(2) + "\n"; }

SummaryDocument read_summary(const std::string& text) {
  try {
    return summary_from_json(Json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed summary: ") + e.what());
  }
}

std::string format_table(const SummaryDocument& doc) {
  std::ostringstream os;
  os << "scenario=" << doc.scenario << " mode=" << doc.mode << " seed=" << doc.seed
     << " trials=" << doc.n_trials << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %8s %8s %8s %8s %9s\n", "cbf", "Success", "Feas.", "DLock", "Unsafe",
                "Avg.Time");
  os << line;
  for (const SummaryRow& r : doc.rows) {
    const BatchSummary& s = r.stats;
    char t[32];
    if (s.avg_time) {
      std::snprintf(t, sizeof t, "%9.3f", *s.avg_time);
    } else {
      std::snprintf(t, sizeof t, "%9s", "-");
    }
    std::snprintf(line, sizeof line, "%-6s %8.3f %8.3f %8.3f %8.3f %s\n", r.cbf.c_str(), s.success_rate,
                  s.feas_rate, s.deadlock_rate, s.unsafe_rate, t);
    os << line;
  }
  return os.str();
}

Json manifest_to_json(const RunManifest& m) {
  return {{"format", "ffcbf-manifest/1"},
          {"command", m.command},
          {"version", m.version},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at},
          {"kinds", m.kinds},
          {"n_trials", m.n_trials},
          {"log_trajectories", m.log_trajectories},
          {"config", m.config},
          {"trial_seeds", m.trial_seeds},
          {"outputs", m.outputs}};
}

RunManifest manifest_from_json(const Json& j) {
  if (j.value("format", std::string()) != "ffcbf-manifest/1") throw ConfigError("not a run manifest");
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.kinds = j.at("kinds").get<std::vector<std::string>>();
    m.n_trials = j.at("n_trials").get<std::size_t>();
    m.log_trajectories = j.at("log_trajectories").get<std::string>();
    m.config = j.at("config");
    m.trial_seeds = j.at("trial_seeds").get<std::vector<std::uint64_t>>();
    m.outputs = j.at("outputs");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string trials_csv_header() {
  return "trial,seed,success,always_feasible,deadlock,unsafe,timeout,completion_time,min_h0,min_H,"
         "initial_min_H,first_infeasible_time,resamples,infeasible_steps,iteration_limit_steps,steps,error";
}

std::string trials_csv_row(const TrialResult& t) {
  std::ostringstream os;
  os << t.trial_index << ',' << t.seed << ',' << int(t.success) << ',' << int(t.always_feasible) << ','
     << int(t.deadlock) << ',' << int(t.unsafe) << ',' << int(t.timeout) << ',' << time_or_empty(t.completion_time)
     << ',' << format_number(t.min_h0) << ',' << format_number(t.min_H) << ',' << format_number(t.initial_min_H)
     << ',' << time_or_empty(t.first_infeasible_time) << ',' << t.resamples << ',' << t.infeasible_steps << ','
     << t.iteration_limit_steps << ',' << t.steps << ',';
  // commas would break the column layout
  std::string err = t.error;
  for (char& ch : err) {
    if (ch == ',' || ch == '\n') ch = ';';
  }
  os << err;
  return os.str();
}

namespace {

std::vector<std::pair<int, int>> pairs_of(int n) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  }
  return out;
}

std::string pair_suffix(const std::pair<int, int>& p) {
  return "_" + std::to_string(p.first) + std::to_string(p.second);
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string trajectory_csv_header(int n) {
  std::string h = "t";
  for (int i = 0; i < n; ++i) {
    for (const char* f : {"x", "y", "psi", "beta", "v", "omega", "a"}) h += "," + std::string(f) + std::to_string(i);
  }
  for (const auto& p : pairs_of(n)) h += ",h0" + pair_suffix(p) + ",H" + pair_suffix(p);
  return h + ",feasible";
}

void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
  os << trajectory_csv_header(log.num_vehicles) << '\n';
  for (const TrajectorySample& s : log.samples) {
    os << format_number(s.t);
    for (std::size_t i = 0; i < s.states.size(); ++i) {
      const VehicleState& z = s.states[i];
      const ControlInput& u = s.inputs[i];
      for (double v : {z.x, z.y, z.psi, z.beta, z.v, u.omega, u.a}) os << ',' << format_number(v);
    }
    for (std::size_t p = 0; p < s.h0.size(); ++p) os << ',' << format_number(s.h0[p]) << ',' << format_number(s.H[p]);
    os << ',' << int(s.feasible) << '\n';
  }
}

TrajectoryLog read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("trajectory log is empty");
  const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  TrajectoryLog log;
  for (int n = 1; n <= 16; ++n) {
    if (trajectory_csv_header(n) == line) {
      log.num_vehicles = n;
      break;
    }
  }
  if (log.num_vehicles == 0) throw ConfigError("unrecognized trajectory log header");
  const int n = log.num_vehicles;
  const int npairs = n * (n - 1) / 2;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<int>(v.size()) != columns) throw ConfigError("trajectory log row has the wrong column count");
    TrajectorySample s;
    std::size_t c = 0;
    s.t = v[c++];
    for (int i = 0; i < n; ++i) {
      VehicleState z;
      ControlInput u;
      z.x = v[c++];
      z.y = v[c++];
      z.psi = v[c++];
      z.beta = v[c++];
      z.v = v[c++];
      u.omega = v[c++];
      u.a = v[c++];
      s.states.push_back(z);
      s.inputs.push_back(u);
    }
    for (int p = 0; p < npairs; ++p) {
      s.h0.push_back(v[c++]);
      s.H.push_back(v[c++]);
    }
    s.feasible = v[c] != 0.0;
    log.samples.push_back(std::move(s));
  }
  return log;
}

std::string replay_csv_header(int n) {
  std::string h = "t";
  for (int i = 0; i < n; ++i) {
    for (const char* f : {"x", "y", "psi", "v", "omega", "a"}) h += "," + std::string(f) + std::to_string(i);
  }
  for (const auto& p : pairs_of(n)) h += ",H" + pair_suffix(p) + ",h0" + pair_suffix(p);
  return h;
}

void write_replay_csv(std::ostream& os, const TrajectoryLog& log) {
  os << replay_csv_header(log.num_vehicles) << '\n';
  for (const TrajectorySample& s : log.samples) {
    os << format_number(s.t);
    for (std::size_t i = 0; i < s.states.size(); ++i) {
      const VehicleState& z = s.states[i];
      const ControlInput& u = s.inputs[i];
      for (double v : {z.x, z.y, z.psi, z.v, u.omega, u.a}) os << ',' << format_number(v);
    }
    for (std::size_t p = 0; p < s.h0.size(); ++p) os << ',' << format_number(s.H[p]) << ',' << format_number(s.h0[p]);
    os << '\n';
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

}  // namespace ffcbf::io
