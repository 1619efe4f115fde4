#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sagnac/config.hpp"
#include "sagnac/correlate.hpp"
#include "sagnac/tomography.hpp"

namespace sagnac {

/// One line of the sweep / summary CSV. Unmeasured quantities are NaN.
struct SweepRow {
  double p_in_dbm = 0.0;
  double duty = 1.0;
  double rep_rate_ghz = 0.0;  // 0 for CW
  double coincidences_cps = 0.0;
  double singles_signal_cps = 0.0;
  double singles_idler_cps = 0.0;
  double car = 0.0;
  double v_hv = 0.0;
  double v_da = 0.0;
  double f_witness = 0.0;
  double car_sigma = 0.0;
  bool car_censored = false;
};

inline constexpr const char* kSweepCsvHeader = "P_in_dBm,duty,rep_rate_GHz,C,S_s,S_i,CAR,V_HV,V_DA,F_witness";

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_histogram_csv(std::ostream& os, const Histogram& h);

/// A pump configuration of a sweep with its measured points.
struct SweepSeries {
  std::string label;
  PumpConfig pump;
  std::vector<SweepRow> rows;
};

/// Pump settings swept by a config: one pulsed series per duty, then CW.
std::vector<std::pair<std::string, PumpConfig>> sweep_pumps(const ExperimentConfig& cfg);

/// Simulates and correlates one operating point with the H/H analyzer.
SweepRow measure_point(const ExperimentConfig& cfg, const SourceConfig& source, std::uint64_t seed,
                       const std::filesystem::path& dump_prefix = {});

struct PowerSweepResult {
  std::vector<SweepSeries> series;
  std::vector<PowerLawFit> fits;  // coincidences vs. power (mW), per series
};

PowerSweepResult run_power_sweep(const ExperimentConfig& cfg);

struct CarSweepSeriesResult {
  SweepSeries series;
  CarFit fit;
  double fitted_peak_mw = 0.0;
  double fitted_peak_car = 0.0;
  double simulated_peak_mw = 0.0;
  double simulated_peak_car = 0.0;
  bool fit_ok = false;
  std::string fit_error;
};

std::vector<CarSweepSeriesResult> run_car_sweep(const ExperimentConfig& cfg);

struct VisibilityResult {
  VisibilityRecord hv;
  VisibilityRecord da;
  double witness = 0.0;
  SweepRow row;
  /// t_idler - t_signal of the H/H run.
  Histogram histogram;
};

VisibilityResult run_visibility(const ExperimentConfig& cfg);

struct TomoResult {
  std::string name;
  double theta = 0.0;
  TomographyRecord record;
  DensityMatrix linear = DensityMatrix();
  MleResult mle;
  nlohmann::json report;
  /// Fidelity to the state the run was meant to produce.
  double target_fidelity = 0.0;
};

TomoResult run_tomo(const ExperimentConfig& cfg);

/// Gated tomography of every state in the configured EOM pattern.
std::vector<TomoResult> run_switch_experiment(const ExperimentConfig& cfg);

struct NoiseFloorResult {
  SweepSeries series;
  PowerLawFit singles_fit;  // dark-subtracted signal singles vs. power
};

NoiseFloorResult run_noise_floor(const ExperimentConfig& cfg);

/// Written next to every output set.
nlohmann::json make_manifest(const ExperimentConfig& cfg, const std::string& command,
                             const std::vector<std::string>& outputs);

std::string library_version();

}  // namespace sagnac
