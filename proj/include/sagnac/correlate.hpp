#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sagnac/model.hpp"
#include "sagnac/timetag.hpp"

namespace sagnac {

enum class AccidentalMode {
  adjacent_pulse,  // pulsed: side peak `offset` pulse periods away
  shifted_window,  // CW: window shifted by a fixed delay
};

struct CoincidenceWindowSpec {
  double width_ps = 500.0;
  AccidentalMode mode = AccidentalMode::adjacent_pulse;
  /// Pulse periods (adjacent_pulse) or ps (shifted_window).
  double offset = 1.0;
  /// Pulse period, needed for adjacent_pulse.
  double period_ps = 1000.0;
  /// Accidentals are averaged over delays k * offset, k = 1..side_peaks.
  int side_peaks = 1;

  void validate() const;
  /// Delay in ps at which accidentals are sampled.
  TimeTag accidental_delay_ps() const;

  static CoincidenceWindowSpec for_pump(const PumpConfig& pump, double width_ps = 500.0);
};

/// Heraldings are coincidences over the same arm's singles: H_s = C / S_s.
inline constexpr const char* kHeraldingConvention = "H_s = C/S_signal, H_i = C/S_idler";

struct CoincidenceStats {
  std::int64_t coincidences = 0;
  std::int64_t singles_signal = 0;
  std::int64_t singles_idler = 0;
  double duration_s = 0.0;

  double coincidence_rate() const { return coincidences / duration_s; }
  double signal_rate() const { return singles_signal / duration_s; }
  double idler_rate() const { return singles_idler / duration_s; }
  double coincidence_rate_sigma() const;
  double heralding_signal() const;
  double heralding_idler() const;
  double heralding_signal_sigma() const;
  double heralding_idler_sigma() const;
};

/// Greedy nearest-match coincidence count in one linear sweep. A pair
/// (s, i) coincides when |(t_i - delay) - t_s| <= width/2; every tag joins at
/// most one coincidence.
std::int64_t count_matches(std::span<const TimeTag> signal, std::span<const TimeTag> idler, double width_ps,
                           TimeTag idler_delay_ps = 0);

CoincidenceStats count_coincidences(const TimeTagStream& signal, const TimeTagStream& idler,
                                    const CoincidenceWindowSpec& spec, double duration_s);

struct Histogram {
  double bin_ps = 0.0;
  /// Center of counts[k] is (k - center_index) * bin_ps.
  std::vector<std::int64_t> counts;
  std::int64_t center_index = 0;

  double bin_center(std::size_t k) const { return (static_cast<double>(k) - center_index) * bin_ps; }
};

/// Histogram of t_idler - t_signal over [-span, +span], bins centered on 0.
Histogram coincidence_histogram(const TimeTagStream& signal, const TimeTagStream& idler, double bin_ps,
                                double span_ns);

struct CarEstimate {
  double car = 0.0;
  double sigma = 0.0;
  std::int64_t peak = 0;
  /// Summed over all side peaks.
  std::int64_t offset = 0;
  int side_peaks = 1;
  /// No accidentals observed: `car` is the lower bound obtained with one.
  bool censored = false;
};

CarEstimate car_from_tags(const TimeTagStream& signal, const TimeTagStream& idler, const CoincidenceWindowSpec& spec);

struct CarModelParams {
  double gamma_combined = 0.0;  // pairs/s per mW^2 (gamma_spdc * gamma_shg)
  double gamma_noise = 0.0;     // photons/s per mW, per arm, before analysis
  double eta_s = 1.0;
  double eta_i = 1.0;
  double d_s = 0.0;  // dark-count probability per coincidence window
  double d_i = 0.0;
  /// Coincidence window, used as the CW counting window.
  double window_ps = 500.0;
  double cw_noise_multiplier = 1.2;
  /// Fraction of the Raman light passed by the polarization analyzer.
  double noise_transmission = 0.5;

  void validate() const;
  double mu(double p_in_mw, const PumpConfig& pump) const;
  double noise(double p_in_mw, const PumpConfig& pump) const;

  static CarModelParams from_source(const SourceConfig& source, double dark_rate_hz, double window_ps = 500.0);
};

/// (mu eta_s eta_i) / (((mu + N) eta_s + d_s)((mu + N) eta_i + d_i)) - 1, with
/// N the analyzed Raman photon number.
double car_model(const CarModelParams& params, double p_in_mw, const PumpConfig& pump);

/// Power at which car_model peaks, by golden-section search on log power.
double car_model_peak_power(const CarModelParams& params, const PumpConfig& pump, double lo_mw = 1e-4,
                            double hi_mw = 1e3);

enum class VisibilityBasis { HV, DA };

/// Projection counts ordered as in the visibility formula: same-same,
/// orthogonal-same, same-orthogonal, orthogonal-orthogonal (R_HH, R_VH, R_HV, R_VV).
struct ProjectionQuad {
  double same_same = 0.0;
  double orth_same = 0.0;
  double same_orth = 0.0;
  double orth_orth = 0.0;
};

struct VisibilityRecord {
  VisibilityBasis basis = VisibilityBasis::HV;
  ProjectionQuad rates;
  double value = 0.0;
  double sigma = 0.0;
};

/// Uncertainty assumes the rates are Poisson counts.
VisibilityRecord visibility(const ProjectionQuad& rates, VisibilityBasis basis = VisibilityBasis::HV);

double fidelity_witness(double v_hv, double v_da);

struct EmittedEstimate {
  double rate = 0.0;
  double heralding_signal = 0.0;
  double heralding_idler = 0.0;
};

EmittedEstimate estimate_emitted(const CoincidenceStats& stats, double eta_s, double eta_i);
/// Same correction from already-measured rate and heralding values.
EmittedEstimate estimate_emitted(double coincidence_rate, double heralding_signal, double heralding_idler,
                                 double eta_s, double eta_i);

struct PowerLawFit {
  double exponent = 0.0;
  double exponent_sigma = 0.0;
  double prefactor = 0.0;
  double log_prefactor_sigma = 0.0;
};

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> data);

struct CarFixed {
  double eta_s = 1.0;
  double eta_i = 1.0;
  double d_s = 0.0;
  double d_i = 0.0;
  double window_ps = 500.0;
  double cw_noise_multiplier = 1.2;
  double noise_transmission = 0.5;
};

struct CarFit {
  CarModelParams params;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Fits gamma_combined and gamma_noise. Residuals are divided by `sigmas`
/// when given (one per point), otherwise taken relative to the data.
CarFit fit_car_model(std::span<const std::pair<double, double>> data, const PumpConfig& pump, const CarFixed& fixed,
                     int max_iterations = 200, std::span<const double> sigmas = {});

}  // namespace sagnac
