#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "psvf/fate.hpp"
#include "psvf/integrate.hpp"
#include "psvf/models.hpp"

namespace psvf::cli {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelConfig {
  std::string id = "z0";
  double epsilon = 0.0;
  int k = 0;
};

struct SweepConfig {
  std::string kind = "pi0-line";  // or "circle"
  double radius = 0.25;
  double theta_start = 0.1;
  double theta_end = 6.183185307179586;  // 2 pi - 0.1
  double theta_step = 0.1;
};

struct GridConfig {
  double xmin = -0.4, xmax = 0.4;
  double ymin = -0.4, ymax = 0.4;
  int nx = 21, ny = 21;
};

struct OutputConfig {
  std::string directory = "out";
  std::string format = "csv";  // or "json"
};

/// One experiment description: model + initial data + numerics + outputs.
/// Parsed from a single JSON file with strict unknown-key rejection.
struct RunConfig {
  int schema_version = 1;
  ModelConfig model;
  std::vector<std::array<double, 3>> initial_conditions;
  std::optional<SweepConfig> sweep;
  double t_max = 20.0;
  StepperConfig stepper;
  GridConfig grid;
  std::array<double, 2> interval{0.01, 0.8};
  int grid_n = 512;
  FateOptions fate;
  OutputConfig output;

  PiecewiseSystem make_system() const;
  std::optional<PerturbationSpec> perturbation() const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

/// Expanded initial conditions: the explicit list followed by the sweep.
std::vector<Vec3> expand_initial_conditions(const RunConfig& cfg);

}  // namespace psvf::cli
