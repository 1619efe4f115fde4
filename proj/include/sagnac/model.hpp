#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace sagnac {

enum class PumpMode { cw, pulsed };

/// Telecom pump as seen right before the loop PBS.
struct PumpConfig {
  PumpMode mode = PumpMode::pulsed;
  double average_power_mw = 0.0;
  double repetition_rate_ghz = 1.0;  // pulsed only
  double duty_cycle = 1.0;           // 1.0 for CW
  double center_wavelength_nm = 1560.0;

  void validate() const;

  /// Pulse period in ps. Pulsed mode only.
  double period_ps() const;

  static PumpConfig cw(double average_power_mw);
  static PumpConfig pulsed(double average_power_mw, double repetition_rate_ghz, double duty_cycle);
};

/// Conversion coefficients of the SHG -> SPDC cascade and the pump-induced
/// Raman background.
///
/// Units: gamma_shg in 1/mW (SHG power = gamma_shg * P^2 / duty);
/// gamma_spdc in pairs per second per mW of average SHG power, for a 1 nm
/// reference channel and one loop direction; gamma_noise in photons per
/// second per mW of average pump power reaching one detector arm before
/// polarization analysis, for a 1 nm channel.
struct ConversionParams {
  double gamma_shg = 0.0;
  double gamma_spdc = 0.0;
  double gamma_noise = 0.0;
  /// Pump power fractions (alpha^2, beta^2) sent clockwise / counterclockwise.
  std::pair<double, double> pump_split{0.5, 0.5};
  /// Raman rate multiplier applied to CW pumping relative to pulsed.
  double cw_noise_multiplier = 1.2;

  void validate() const;

  double gamma_combined() const { return gamma_spdc * gamma_shg; }
};

enum class ChannelRole { signal, idler };

struct SpectralChannel {
  double center_nm = 1560.0;
  double bandwidth_nm = 1.0;
  ChannelRole role = ChannelRole::signal;

  void validate() const;
};

/// Gaussian SPDC envelopes of the two ppLN waveguides.
struct SpdcSpectrum {
  double degeneracy_nm = 1560.0;
  std::array<double, 2> fwhm_nm{58.0, 68.0};
  /// Spectral band over which the envelope mass is normalized.
  double band_min_nm = 1530.0;
  double band_max_nm = 1590.0;

  void validate() const;
};

struct LossStage {
  std::string name;
  double loss_db = 0.0;
};

/// Loss chain from the source output to a registered click.
///
/// The stages are common to both arms; the per-arm imbalance captures the
/// small path asymmetries on top of the average.
struct LossChain {
  std::vector<LossStage> stages;
  double signal_imbalance_db = 0.0;
  double idler_imbalance_db = 0.0;

  double total_db(ChannelRole role) const;
  double average_db() const;

  /// Circulator, notch, programmable filter, analysis module and detection,
  /// with the arm imbalance that yields -11.8 dB / -13.9 dB.
  static LossChain reference();
};

struct FiberNoiseParams {
  double nonlinear_gamma = 1.0;  // 1/(W km)
  double fiber_length_km = 0.0;
  double pump_peak_power_w = 0.0;
};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);
double db_to_transmittance(double loss_db);

/// Effective duration of one coincidence window in seconds: one pulse period
/// for pulsed pumping, `window_ps` for CW.
double window_seconds(const PumpConfig& pump, double window_ps);

double shg_average_power(const PumpConfig& pump, const ConversionParams& conv);
double mean_pairs_per_window(const PumpConfig& pump, const ConversionParams& conv, double window_ps);
double mean_noise_per_window(const PumpConfig& pump, const ConversionParams& conv, double window_ps);
double sfwm_figure_of_merit(const FiberNoiseParams& p);

/// Value 1 at the degeneracy wavelength, 0.5 at +-FWHM/2. `waveguide` is 1 or 2.
double spectral_density(const SpdcSpectrum& spec, double wavelength_nm, int waveguide);

/// Energy-conserving partner wavelength: 1/l_i = 2/l_deg - 1/l_s.
double conjugate_wavelength(double signal_nm, double degeneracy_nm);

/// Fraction of the in-band envelope mass that falls inside the channel.
double channel_overlap_fraction(const SpectralChannel& ch, const SpdcSpectrum& spec, int waveguide);

double chain_efficiency(const LossChain& chain, ChannelRole channel);

/// Everything needed to turn pump settings into emission statistics.
struct SourceConfig {
  PumpConfig pump;
  ConversionParams conversion;
  /// gamma_shg of waveguide #2 relative to waveguide #1.
  double wg2_shg_ratio = 1.0;
  SpdcSpectrum spectrum;
  LossChain loss = LossChain::reference();
  SpectralChannel signal{1558.4, 1.0, ChannelRole::signal};
  SpectralChannel idler{1561.6, 1.0, ChannelRole::idler};
  /// Insertion loss in the SHG path (phase modulator), both directions.
  double shg_path_loss_db = 0.0;

  void validate() const;

  /// Pairs per window of the clockwise (H) direction into the selected channels.
  double direction_pairs(int direction, double window_ps) const;
  double total_pairs(double window_ps) const { return direction_pairs(1, window_ps) + direction_pairs(2, window_ps); }
  /// Raman photons per window at one arm, before polarization analysis.
  double noise_per_arm(ChannelRole role, double window_ps) const;
  /// State amplitudes (alpha, beta) set by the two directions' pair rates.
  std::pair<double, double> state_amplitudes() const;
  double eta(ChannelRole role) const { return chain_efficiency(loss, role); }
};

/// Calibrated against the 1 GHz / 9 % / 7.9 dBm operating point.
SourceConfig reference_source();

}  // namespace sagnac
