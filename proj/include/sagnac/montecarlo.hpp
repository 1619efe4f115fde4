#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sagnac/model.hpp"
#include "sagnac/qstate.hpp"
#include "sagnac/timetag.hpp"

namespace sagnac {

struct DetectorModel {
  /// Applied on top of the loss chain, which already holds the detection loss.
  double efficiency = 1.0;
  double dark_rate_hz = 300.0;
  double dead_time_ns = 1000.0;
  /// Detector contribution only; the TDC jitter is added in quadrature.
  double jitter_rms_ps = 50.0;

  void validate() const;
};

inline constexpr double kTdcJitterPs = 4.2;

/// Phase held for `windows` consecutive windows; the list repeats cyclically.
struct PhaseSlot {
  double theta = 0.0;
  std::uint64_t windows = 1;
};

std::size_t schedule_entry(std::span<const PhaseSlot> schedule, std::uint64_t window);
double phase_schedule_sample(std::span<const PhaseSlot> schedule, std::uint64_t window);

/// Per-window emission statistics resolved from a source.
struct Emission {
  bool pulsed = true;
  /// Pulse period (pulsed) or lattice slot (CW), ps.
  double window_ps = 1000.0;
  /// Pairs per window summed over both loop directions.
  double pairs_per_window = 0.0;
  /// Raman photons per window per arm before polarization analysis.
  double noise_signal = 0.0;
  double noise_idler = 0.0;
  double eta_signal = 1.0;
  double eta_idler = 1.0;

  void validate() const;
};

Emission emission_from_source(const SourceConfig& source, double cw_slot_ps = 1000.0);

/// Imperfections layered on the ideal phase state:
/// rho = (1 - white) [(1 - dephasing) P + dephasing D(P)] + white I/4,
/// where D removes the HH/VV coherence.
struct StateNoise {
  double white = 0.0;
  double dephasing = 0.0;
};

DensityMatrix noisy_phase_state(double alpha, double beta, double theta, const StateNoise& noise);

struct RunPlan {
  Emission emission;
  double alpha = 0.70710678118654752440;
  double beta = 0.70710678118654752440;
  std::vector<PhaseSlot> schedule{{0.0, 1}};
  StateNoise state_noise;
  ProjectionSetting setting;
  CircularConvention convention = CircularConvention::r_is_h_minus_iv;
  DetectorModel signal_detector;
  DetectorModel idler_detector;
  double tdc_jitter_ps = kTdcJitterPs;
  double duration_s = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t batch_windows = std::uint64_t{1} << 20;
  /// When non-empty, only windows of these schedule entries emit or
  /// register events.
  std::vector<std::size_t> gate_entries;
  /// Upper bound on tags held in memory (both arms).
  std::size_t max_tags = 200'000'000;
  unsigned threads = 1;

  void validate() const;
  std::uint64_t total_windows() const;
};

struct RunResult {
  TimeTagStream signal;
  TimeTagStream idler;
  std::uint64_t windows = 0;
  double duration_s = 0.0;
};

RunResult simulate_run(const RunPlan& plan);

/// First-order analytic prediction of what simulate_run registers,
/// including non-paralyzable dead-time losses.
struct ExpectedRates {
  double singles_signal = 0.0;  // cps
  double singles_idler = 0.0;
  double coincidences = 0.0;  // true + accidental within the window
  double true_coincidences = 0.0;
};

ExpectedRates expected_rates(const RunPlan& plan, double coincidence_window_ps);

/// Scales conversion.gamma_spdc so that expected_rates() reports
/// `target_cps` coincidences for the given plan template.
double calibrate_gamma_spdc(SourceConfig source, const RunPlan& plan_template, double target_cps,
                            double coincidence_window_ps);

/// Default plan around a source: channels 0 (signal) and 1 (idler).
RunPlan make_run_plan(const SourceConfig& source, const ProjectionSetting& setting, double duration_s,
                      std::uint64_t seed);

}  // namespace sagnac
