#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sagnac/control.hpp"
#include "sagnac/model.hpp"
#include "sagnac/montecarlo.hpp"

namespace sagnac {

enum class ExperimentKind { power_sweep, car_sweep, visibility, tomography, switching, noise_floor };

std::string_view experiment_name(ExperimentKind kind);

struct SweepGrid {
  std::vector<double> powers_dbm;
  /// One pulsed series per duty cycle at the source repetition rate.
  std::vector<double> duties;
  bool include_cw = false;
};

enum class TomoMode {
  tags,      // full time-tag simulation per setting
  analytic,  // Poisson counts drawn from the projection probabilities
};

struct TomoSettings {
  TomoMode mode = TomoMode::tags;
  double seconds = 0.1;  // per sample and setting
  int samples = 10;
  /// Coincidence rate used by the analytic mode.
  double rate_cps = 4500.0;
  std::string state = "phi+";
};

struct SwitchSettings {
  std::string preset = "cycle";
  EomPulsePattern pattern = preset_pattern("cycle");
  ModulatorParams modulator;
  double pump_power_dbm = 5.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::power_sweep;
  SourceConfig source = reference_source();
  DetectorModel detector;
  double duration_s = 1.0;
  double coincidence_window_ps = 500.0;
  /// Side peaks averaged for the accidental estimate.
  int side_peaks = 1;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  StateNoise state_noise;
  SweepGrid grid;
  TomoSettings tomo;
  SwitchSettings switching;
  std::filesystem::path out_dir = "out";
  bool dump_tags = false;

  void validate() const;
};

/// Built-in settings for each experiment; a config file only overrides them.
ExperimentConfig default_config(ExperimentKind kind);

/// Reads a sectioned key = value file on top of `base`. Unknown sections or
/// keys are rejected so that typos do not pass silently.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base);

nlohmann::json to_json(const ExperimentConfig& cfg);

/// 16 hex digits over the canonical JSON form.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace sagnac
