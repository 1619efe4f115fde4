#include "sagnac/model.hpp"

#include <cmath>
#include <numbers>

#include "sagnac/error.hpp"

namespace sagnac {

namespace {

double gaussian_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }

// Integral of the unit-peak Gaussian envelope over [a, b].
double envelope_mass(double center, double fwhm, double a, double b) {
  if (b <= a) return 0.0;
  const double s = gaussian_sigma(fwhm) * std::numbers::sqrt2;
  const double scale = 0.5 * std::sqrt(std::numbers::pi) * s;
  return scale * (std::erf((b - center) / s) - std::erf((a - center) / s));
}

void check_waveguide(int waveguide) {
  if (waveguide != 1 && waveguide != 2) throw InvalidArgument("waveguide must be 1 or 2");
}

}  // namespace

void PumpConfig::validate() const {
  if (!(average_power_mw >= 0.0)) throw InvalidArgument("pump average power must be >= 0");
  if (!(duty_cycle > 0.0 && duty_cycle <= 1.0)) throw InvalidArgument("duty cycle must be in (0, 1]");
  if (mode == PumpMode::pulsed && !(repetition_rate_ghz > 0.0))
    throw InvalidArgument("pulsed pump requires a positive repetition rate");
  if (mode == PumpMode::cw && duty_cycle != 1.0) throw InvalidArgument("CW pump must have duty cycle 1");
}

double PumpConfig::period_ps() const {
  if (mode != PumpMode::pulsed) throw InvalidArgument("CW pump has no pulse period");
  return 1000.0 / repetition_rate_ghz;
}

PumpConfig PumpConfig::cw(double average_power_mw) {
  PumpConfig p;
  p.mode = PumpMode::cw;
  p.average_power_mw = average_power_mw;
  p.repetition_rate_ghz = 0.0;
  p.duty_cycle = 1.0;
  return p;
}

PumpConfig PumpConfig::pulsed(double average_power_mw, double repetition_rate_ghz, double duty_cycle) {
  PumpConfig p;
  p.mode = PumpMode::pulsed;
  p.average_power_mw = average_power_mw;
  p.repetition_rate_ghz = repetition_rate_ghz;
  p.duty_cycle = duty_cycle;
  return p;
}

void ConversionParams::validate() const {
  if (!(gamma_shg >= 0.0 && gamma_spdc >= 0.0 && gamma_noise >= 0.0))
    throw InvalidArgument("conversion coefficients must be >= 0");
  if (!(pump_split.first >= 0.0 && pump_split.second >= 0.0) ||
      std::abs(pump_split.first + pump_split.second - 1.0) > 1e-12)
    throw InvalidArgument("pump split fractions must be >= 0 and sum to 1");
  if (!(cw_noise_multiplier >= 1.0)) throw InvalidArgument("CW noise multiplier must be >= 1");
}

void SpectralChannel::validate() const {
  if (!(bandwidth_nm >= 0.0)) throw InvalidArgument("channel bandwidth must be >= 0");
  if (!(center_nm >= 1530.0 && center_nm <= 1590.0))
    throw InvalidArgument("channel center must lie within [1530, 1590] nm");
}

void SpdcSpectrum::validate() const {
  if (!(fwhm_nm[0] > 0.0 && fwhm_nm[1] > 0.0)) throw InvalidArgument("SPDC FWHM must be > 0");
  if (!(band_max_nm > band_min_nm)) throw InvalidArgument("empty SPDC band");
}

double LossChain::average_db() const {
  double sum = 0.0;
  for (const auto& s : stages) sum += s.loss_db;
  return sum;
}

double LossChain::total_db(ChannelRole role) const {
  return average_db() + (role == ChannelRole::signal ? signal_imbalance_db : idler_imbalance_db);
}

LossChain LossChain::reference() {
  LossChain c;
  c.stages = {{"circulator", 1.0},
              {"notch_filter", 1.3},
              {"demultiplexer", 6.0},
              {"analysis_module", 3.25},
              {"detection", 1.3}};
  c.signal_imbalance_db = -1.05;
  c.idler_imbalance_db = 1.05;
  return c;
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
double db_to_transmittance(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

double window_seconds(const PumpConfig& pump, double window_ps) {
  if (pump.mode == PumpMode::pulsed) return 1.0 / (pump.repetition_rate_ghz * 1e9);
  if (!(window_ps > 0.0)) throw InvalidArgument("window must be > 0");
  return window_ps * 1e-12;
}

double shg_average_power(const PumpConfig& pump, const ConversionParams& conv) {
  pump.validate();
  const double p = pump.average_power_mw;
  // Rectangular pulses: peak = average / duty, SHG averaged over the period.
  return conv.gamma_shg * p * p / pump.duty_cycle;
}

double mean_pairs_per_window(const PumpConfig& pump, const ConversionParams& conv, double window_ps) {
  if (!(window_ps > 0.0)) throw InvalidArgument("window must be > 0");
  return conv.gamma_spdc * shg_average_power(pump, conv) * window_seconds(pump, window_ps);
}

double mean_noise_per_window(const PumpConfig& pump, const ConversionParams& conv, double window_ps) {
  if (!(window_ps > 0.0)) throw InvalidArgument("window must be > 0");
  pump.validate();
  const double mult = pump.mode == PumpMode::cw ? conv.cw_noise_multiplier : 1.0;
  return conv.gamma_noise * pump.average_power_mw * mult * window_seconds(pump, window_ps);
}

double sfwm_figure_of_merit(const FiberNoiseParams& p) {
  // Evaluated in mW and m so the reference point comes out as an exact 1e-4.
  const double power_mw = p.pump_peak_power_w * 1e3;
  const double length_m = p.fiber_length_km * 1e3;
  return p.nonlinear_gamma * power_mw * length_m / 1e6;
}

double spectral_density(const SpdcSpectrum& spec, double wavelength_nm, int waveguide) {
  check_waveguide(waveguide);
  const double fwhm = spec.fwhm_nm[waveguide - 1];
  const double x = (wavelength_nm - spec.degeneracy_nm) / fwhm;
  return std::exp(-4.0 * std::numbers::ln2 * x * x);
}

double conjugate_wavelength(double signal_nm, double degeneracy_nm) {
  if (!(signal_nm > 0.0)) throw InvalidArgument("signal wavelength must be > 0");
  const double inv = 2.0 / degeneracy_nm - 1.0 / signal_nm;
  if (!(inv > 0.0)) throw InvalidArgument("no physical conjugate wavelength");
  return 1.0 / inv;
}

double channel_overlap_fraction(const SpectralChannel& ch, const SpdcSpectrum& spec, int waveguide) {
  check_waveguide(waveguide);
  spec.validate();
  const double fwhm = spec.fwhm_nm[waveguide - 1];
  const double lo = std::max(ch.center_nm - 0.5 * ch.bandwidth_nm, spec.band_min_nm);
  const double hi = std::min(ch.center_nm + 0.5 * ch.bandwidth_nm, spec.band_max_nm);
  const double total = envelope_mass(spec.degeneracy_nm, fwhm, spec.band_min_nm, spec.band_max_nm);
  return envelope_mass(spec.degeneracy_nm, fwhm, lo, hi) / total;
}

double chain_efficiency(const LossChain& chain, ChannelRole channel) {
  for (const auto& s : chain.stages)
    if (!(s.loss_db >= 0.0)) throw InvalidArgument("stage loss must be >= 0 dB: " + s.name);
  const double eta = db_to_transmittance(chain.total_db(channel));
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("chain efficiency outside (0, 1]");
  return eta;
}

void SourceConfig::validate() const {
  pump.validate();
  conversion.validate();
  spectrum.validate();
  signal.validate();
  idler.validate();
  if (!(wg2_shg_ratio >= 0.0)) throw InvalidArgument("waveguide ratio must be >= 0");
  if (!(shg_path_loss_db >= 0.0)) throw InvalidArgument("SHG path loss must be >= 0 dB");
}

double SourceConfig::direction_pairs(int direction, double window_ps) const {
  check_waveguide(direction);
  const double split = direction == 1 ? conversion.pump_split.first : conversion.pump_split.second;
  const double wg = direction == 1 ? 1.0 : wg2_shg_ratio;
  // The coefficients refer to a balanced split and a 1 nm channel.
  SpectralChannel reference = signal;
  reference.bandwidth_nm = 1.0;
  const double spectral = channel_overlap_fraction(signal, spectrum, direction) /
                          channel_overlap_fraction(reference, spectrum, direction);
  return mean_pairs_per_window(pump, conversion, window_ps) * 4.0 * split * split * wg *
         db_to_transmittance(shg_path_loss_db) * spectral;
}

double SourceConfig::noise_per_arm(ChannelRole role, double window_ps) const {
  const double bw = role == ChannelRole::signal ? signal.bandwidth_nm : idler.bandwidth_nm;
  return mean_noise_per_window(pump, conversion, window_ps) * bw;
}

std::pair<double, double> SourceConfig::state_amplitudes() const {
  const double w = 1000.0;
  const double r1 = direction_pairs(1, w);
  const double r2 = direction_pairs(2, w);
  if (!(r1 + r2 > 0.0)) return {std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};
  return {std::sqrt(r1 / (r1 + r2)), std::sqrt(r2 / (r1 + r2))};
}

SourceConfig reference_source() {
  SourceConfig s;
  s.pump = PumpConfig::pulsed(dbm_to_mw(7.9), 1.0, 0.09);
  s.conversion.gamma_shg = 0.10 / 300.0;
  s.conversion.gamma_spdc = 1.205e7;
  s.conversion.gamma_noise = 1.598e5;
  return s;
}

}  // namespace sagnac
