#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace psvf::cli {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected an object at " + path);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' at " + path);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

}  // namespace

PiecewiseSystem RunConfig::make_system() const {
  return model_from_id(model.id, perturbation());
}

std::optional<PerturbationSpec> RunConfig::perturbation() const {
  if (model.id == "z-eps-finite") return PerturbationSpec::finite(model.k, model.epsilon);
  if (model.id == "z-eps-infinite") return PerturbationSpec::infinite(model.epsilon);
  return std::nullopt;
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  check_keys(j, {"schema_version", "model", "initial_conditions", "sweep", "t_max", "stepper",
                 "grid", "interval", "grid_n", "fate", "output"},
             "$");
  read(j, "schema_version", cfg.schema_version);
  if (cfg.schema_version != 1) throw ConfigError("unsupported schema_version");

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"id", "epsilon", "k"}, "$.model");
    read(m, "id", cfg.model.id);
    read(m, "epsilon", cfg.model.epsilon);
    read(m, "k", cfg.model.k);
    if (cfg.model.k < 0) throw ConfigError("model.k must be nonnegative");
  }

  if (j.contains("initial_conditions")) {
    const json& ics = j.at("initial_conditions");
    if (!ics.is_array()) throw ConfigError("initial_conditions must be an array of [x,y,z]");
    for (const auto& ic : ics) {
      if (!ic.is_array() || ic.size() != 3) {
        throw ConfigError("initial_conditions entries must be [x,y,z]");
      }
      cfg.initial_conditions.push_back(
          {ic[0].get<double>(), ic[1].get<double>(), ic[2].get<double>()});
    }
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, {"kind", "radius", "theta_start", "theta_end", "theta_step"}, "$.sweep");
    SweepConfig sw;
    read(s, "kind", sw.kind);
    if (sw.kind != "pi0-line" && sw.kind != "circle") {
      throw ConfigError("sweep.kind must be 'pi0-line' or 'circle'");
    }
    read(s, "radius", sw.radius);
    read(s, "theta_start", sw.theta_start);
    read(s, "theta_end", sw.theta_end);
    read(s, "theta_step", sw.theta_step);
    if (sw.theta_step <= 0) throw ConfigError("sweep.theta_step must be positive");
    cfg.sweep = sw;
  }

  read(j, "t_max", cfg.t_max);
  if (cfg.t_max <= 0) throw ConfigError("t_max must be positive");

  if (j.contains("stepper")) {
    const json& s = j.at("stepper");
    check_keys(s,
               {"rel_tol", "abs_tol", "max_step", "init_step", "event_tol", "escape_radius",
                "max_events", "escaping_policy"},
               "$.stepper");
    read(s, "rel_tol", cfg.stepper.rel_tol);
    read(s, "abs_tol", cfg.stepper.abs_tol);
    read(s, "max_step", cfg.stepper.max_step);
    read(s, "init_step", cfg.stepper.init_step);
    read(s, "event_tol", cfg.stepper.event_tol);
    read(s, "escape_radius", cfg.stepper.escape_radius);
    read(s, "max_events", cfg.stepper.max_events);
    if (s.contains("escaping_policy")) {
      try {
        cfg.stepper.escaping_policy = escaping_policy_from_string(s.at("escaping_policy"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    try {
      cfg.stepper.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"xmin", "xmax", "ymin", "ymax", "nx", "ny"}, "$.grid");
    read(g, "xmin", cfg.grid.xmin);
    read(g, "xmax", cfg.grid.xmax);
    read(g, "ymin", cfg.grid.ymin);
    read(g, "ymax", cfg.grid.ymax);
    read(g, "nx", cfg.grid.nx);
    read(g, "ny", cfg.grid.ny);
    if (cfg.grid.nx < 1 || cfg.grid.ny < 1) throw ConfigError("grid.nx/ny must be >= 1");
    if (cfg.grid.xmax < cfg.grid.xmin || cfg.grid.ymax < cfg.grid.ymin) {
      throw ConfigError("grid bounds are inverted");
    }
  }

  if (j.contains("interval")) {
    const json& iv = j.at("interval");
    if (!iv.is_array() || iv.size() != 2) throw ConfigError("interval must be [a, b]");
    cfg.interval = {iv[0].get<double>(), iv[1].get<double>()};
    if (!(0 < cfg.interval[0] && cfg.interval[0] < cfg.interval[1])) {
      throw ConfigError("interval must satisfy 0 < a < b");
    }
  }

  read(j, "grid_n", cfg.grid_n);
  if (cfg.grid_n < 2) throw ConfigError("grid_n must be >= 2");

  if (j.contains("fate")) {
    const json& f = j.at("fate");
    check_keys(f, {"origin_ball", "sustain_time", "cycle_lock", "iterate_fix", "t_max"},
               "$.fate");
    read(f, "origin_ball", cfg.fate.origin_ball);
    read(f, "sustain_time", cfg.fate.sustain_time);
    read(f, "cycle_lock", cfg.fate.cycle_lock);
    read(f, "iterate_fix", cfg.fate.iterate_fix);
    read(f, "t_max", cfg.fate.t_max);
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, {"directory", "format"}, "$.output");
    read(o, "directory", cfg.output.directory);
    read(o, "format", cfg.output.format);
    if (cfg.output.format != "csv" && cfg.output.format != "json") {
      throw ConfigError("output.format must be 'csv' or 'json'");
    }
  }

  // Model id / spec consistency is a config-level error, not a crash.
  try {
    (void)cfg.make_system();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["model"] = {{"id", cfg.model.id}, {"epsilon", cfg.model.epsilon}, {"k", cfg.model.k}};
  j["initial_conditions"] = json::array();
  for (const auto& ic : cfg.initial_conditions) {
    j["initial_conditions"].push_back({ic[0], ic[1], ic[2]});
  }
  if (cfg.sweep) {
    j["sweep"] = {{"kind", cfg.sweep->kind},
                  {"radius", cfg.sweep->radius},
                  {"theta_start", cfg.sweep->theta_start},
                  {"theta_end", cfg.sweep->theta_end},
                  {"theta_step", cfg.sweep->theta_step}};
  }
  j["t_max"] = cfg.t_max;
  j["stepper"] = {{"rel_tol", cfg.stepper.rel_tol},
                  {"abs_tol", cfg.stepper.abs_tol},
                  {"max_step", cfg.stepper.max_step},
                  {"init_step", cfg.stepper.init_step},
                  {"event_tol", cfg.stepper.event_tol},
                  {"escape_radius", cfg.stepper.escape_radius},
                  {"max_events", cfg.stepper.max_events},
                  {"escaping_policy", to_string(cfg.stepper.escaping_policy)}};
  j["grid"] = {{"xmin", cfg.grid.xmin}, {"xmax", cfg.grid.xmax}, {"ymin", cfg.grid.ymin},
               {"ymax", cfg.grid.ymax}, {"nx", cfg.grid.nx},     {"ny", cfg.grid.ny}};
  j["interval"] = {cfg.interval[0], cfg.interval[1]};
  j["grid_n"] = cfg.grid_n;
  j["fate"] = {{"origin_ball", cfg.fate.origin_ball},
               {"sustain_time", cfg.fate.sustain_time},
               {"cycle_lock", cfg.fate.cycle_lock},
               {"iterate_fix", cfg.fate.iterate_fix},
               {"t_max", cfg.fate.t_max}};
  j["output"] = {{"directory", cfg.output.directory}, {"format", cfg.output.format}};
  return j;
}

std::vector<Vec3> expand_initial_conditions(const RunConfig& cfg) {
  std::vector<Vec3> out;
  for (const auto& ic : cfg.initial_conditions) out.push_back({ic[0], ic[1], ic[2]});
  if (cfg.sweep) {
    const SweepConfig& sw = *cfg.sweep;
    for (double th = sw.theta_start; th <= sw.theta_end + 1e-12; th += sw.theta_step) {
      if (sw.kind == "pi0-line") {
        out.push_back({th, -th, 0.0});
      } else {
        out.push_back({sw.radius * std::cos(th), sw.radius * std::sin(th), 0.0});
      }
    }
  }
  return out;
}

}  // namespace psvf::cli
