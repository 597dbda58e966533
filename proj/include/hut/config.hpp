#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hut/records.hpp"
#include "hut/stochastic.hpp"
#include "hut/types.hpp"

namespace hut {

/// Experiment-level settings carried alongside the physical parameters.
struct ExperimentSettings {
  long frames = 4000;
  std::uint64_t seed = 1;
  SolverKind solver = SolverKind::Sabf;
  double initial_backlog = 0.0;
  ArrivalModel arrivals = ArrivalModel::Bernoulli;
  bool sabf_random_init = false;
  std::vector<double> v_grid = {0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007};
  std::vector<double> gamma_grid_db = {2.0, 4.0, 6.0, 8.0, 10.0};
  std::string sweep_param = "v";  // "v" or "gamma"
  int converge_instances = 30;
};

struct ParsedConfig {
  SystemConfig sys;
  Schedule schedule;
  ExperimentSettings run;
};

/// Table I defaults with the experiment schedule.
ParsedConfig default_config();

/// Flat `key = value` text (UTF-8, # comments). Missing keys keep defaults;
/// unknown keys and malformed values raise ConfigError naming the key or
/// line. dB-valued keys carry a _db suffix and convert at parse time;
/// per-link keys accept a scalar (broadcast) or a comma list.
ParsedConfig parse_config_text(const std::string& text);
ParsedConfig parse_config(const std::string& path);

}  // namespace hut
