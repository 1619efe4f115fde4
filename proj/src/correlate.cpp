#include "sagnac/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sagnac/error.hpp"
#include "sagnac/fit.hpp"
#include "sagnac/simd/kernels.hpp"

namespace sagnac {

void CoincidenceWindowSpec::validate() const {
  if (!(width_ps > 0.0)) throw InvalidArgument("coincidence window width must be > 0");
  if (!(offset != 0.0) || !std::isfinite(offset)) throw InvalidArgument("accidental offset must be non-zero");
  if (side_peaks < 1) throw InvalidArgument("need at least one side peak");
  if (mode == AccidentalMode::adjacent_pulse && !(period_ps > 0.0))
    throw InvalidArgument("adjacent-pulse accidentals need a pulse period");
}

TimeTag CoincidenceWindowSpec::accidental_delay_ps() const {
  validate();
  const double d = mode == AccidentalMode::adjacent_pulse ? offset * period_ps : offset;
  return static_cast<TimeTag>(std::llround(d));
}

CoincidenceWindowSpec CoincidenceWindowSpec::for_pump(const PumpConfig& pump, double width_ps) {
  CoincidenceWindowSpec spec;
  spec.width_ps = width_ps;
  if (pump.mode == PumpMode::pulsed) {
    spec.mode = AccidentalMode::adjacent_pulse;
    spec.offset = 1.0;
    spec.period_ps = pump.period_ps();
  } else {
    spec.mode = AccidentalMode::shifted_window;
    spec.offset = 100e3;
  }
  spec.validate();
  return spec;
}

double CoincidenceStats::coincidence_rate_sigma() const {
  return std::sqrt(static_cast<double>(coincidences)) / duration_s;
}

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  if (den <= 0) throw Undefined("heralding undefined with zero singles");
  return static_cast<double>(num) / static_cast<double>(den);
}

// Binomial error of a ratio whose numerator is a subset of the denominator.
double ratio_sigma(std::int64_t num, std::int64_t den) {
  const double h = ratio(num, den);
  return std::sqrt(std::max(h * (1.0 - h), 0.0) / static_cast<double>(den));
}

}  // namespace

double CoincidenceStats::heralding_signal() const { return ratio(coincidences, singles_signal); }
double CoincidenceStats::heralding_idler() const { return ratio(coincidences, singles_idler); }
double CoincidenceStats::heralding_signal_sigma() const { return ratio_sigma(coincidences, singles_signal); }
double CoincidenceStats::heralding_idler_sigma() const { return ratio_sigma(coincidences, singles_idler); }

std::int64_t count_matches(std::span<const TimeTag> signal, std::span<const TimeTag> idler, double width_ps,
                           TimeTag idler_delay_ps) {
  if (!(width_ps > 0.0)) throw InvalidArgument("coincidence window width must be > 0");
  require_sorted(signal, "signal");
  require_sorted(idler, "idler");
  const auto& k = simd::kernels();
  // Compare 2|d| <= width in integers so odd widths behave exactly.
  const auto half = static_cast<TimeTag>(std::floor(width_ps / 2.0));
  const double width2 = width_ps;
  const std::size_t ns = signal.size(), ni = idler.size();
  std::size_t i = 0, j = 0;
  std::int64_t matches = 0;
  while (i < ns && j < ni) {
    const TimeTag d = (idler[j] - idler_delay_ps) - signal[i];
    if (d < -half && 2.0 * static_cast<double>(-d) > width2) {
      j = k.advance_to(idler.data(), j + 1, ni, signal[i] + idler_delay_ps - half);
      continue;
    }
    if (d > half && 2.0 * static_cast<double>(d) > width2) {
      i = k.advance_to(signal.data(), i + 1, ns, idler[j] - idler_delay_ps - half);
      continue;
    }
    const TimeTag ad = d < 0 ? -d : d;
    // Prefer a closer partner for either tag before committing.
    if (i + 1 < ns) {
      const TimeTag alt = (idler[j] - idler_delay_ps) - signal[i + 1];
      if ((alt < 0 ? -alt : alt) < ad) {
        ++i;
        continue;
      }
    }
    if (j + 1 < ni) {
      const TimeTag alt = (idler[j + 1] - idler_delay_ps) - signal[i];
      if ((alt < 0 ? -alt : alt) < ad) {
        ++j;
        continue;
      }
    }
    ++matches;
    ++i;
    ++j;
  }
  return matches;
}

CoincidenceStats count_coincidences(const TimeTagStream& signal, const TimeTagStream& idler,
                                    const CoincidenceWindowSpec& spec, double duration_s) {
  spec.validate();
  if (!(duration_s > 0.0)) throw InvalidArgument("duration must be > 0");
  CoincidenceStats out;
  out.coincidences = count_matches(signal.tags, idler.tags, spec.width_ps);
  out.singles_signal = static_cast<std::int64_t>(signal.size());
  out.singles_idler = static_cast<std::int64_t>(idler.size());
  out.duration_s = duration_s;
  return out;
}

Histogram coincidence_histogram(const TimeTagStream& signal, const TimeTagStream& idler, double bin_ps,
                                double span_ns) {
  if (!(bin_ps >= 1.0)) throw InvalidArgument("histogram bin must be >= 1 ps");
  if (!(span_ns >= 0.0)) throw InvalidArgument("histogram span must be >= 0");
  require_sorted(signal.tags, "signal");
  require_sorted(idler.tags, "idler");
  const auto bin = static_cast<std::int64_t>(std::llround(bin_ps));
  const auto m = static_cast<std::int64_t>(std::max(0.0, std::ceil(span_ns * 1e3 / static_cast<double>(bin) - 0.5)));
  const std::int64_t nbins = 2 * m + 1;
  const std::int64_t lo = -m * bin - bin / 2;

  Histogram h;
  h.bin_ps = static_cast<double>(bin);
  h.center_index = m;
  h.counts.assign(static_cast<std::size_t>(nbins), 0);

  const auto& k = simd::kernels();
  const auto& it = idler.tags;
  std::size_t start = 0;
  for (const TimeTag s : signal.tags) {
    start = k.advance_to(it.data(), start, it.size(), s + lo);
    if (start == it.size()) break;
    k.accumulate_deltas(it.data(), start, it.size(), s, lo, bin, nbins, h.counts.data());
  }
  return h;
}

CarEstimate car_from_tags(const TimeTagStream& signal, const TimeTagStream& idler, const CoincidenceWindowSpec& spec) {
  spec.validate();
  CarEstimate out;
  out.peak = count_matches(signal.tags, idler.tags, spec.width_ps);
  out.side_peaks = spec.side_peaks;
  const TimeTag delay = spec.accidental_delay_ps();
  for (int k = 1; k <= spec.side_peaks; ++k)
    out.offset += count_matches(signal.tags, idler.tags, spec.width_ps, delay * k);
  double co_sum = static_cast<double>(out.offset);
  if (out.offset == 0) {
    out.censored = true;
    co_sum = 1.0;
  }
  const double cp = static_cast<double>(out.peak);
  const double r = cp / (co_sum / spec.side_peaks);
  out.car = r - 1.0;
  out.sigma = cp > 0.0 ? r * std::sqrt(1.0 / cp + 1.0 / co_sum) : spec.side_peaks / co_sum;
  return out;
}

void CarModelParams::validate() const {
  for (double v : {gamma_combined, gamma_noise, d_s, d_i, cw_noise_multiplier})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("CAR model parameters must be finite and >= 0");
  if (!(eta_s > 0.0 && eta_s <= 1.0) || !(eta_i > 0.0 && eta_i <= 1.0))
    throw InvalidArgument("efficiencies must be in (0, 1]");
  if (!(window_ps > 0.0)) throw InvalidArgument("window must be > 0");
  if (!(noise_transmission >= 0.0 && noise_transmission <= 1.0))
    throw InvalidArgument("noise transmission must be in [0, 1]");
}

double CarModelParams::mu(double p_in_mw, const PumpConfig& pump) const {
  PumpConfig p = pump;
  p.average_power_mw = p_in_mw;
  p.validate();
  return gamma_combined * p_in_mw * p_in_mw / p.duty_cycle * window_seconds(p, window_ps);
}

double CarModelParams::noise(double p_in_mw, const PumpConfig& pump) const {
  PumpConfig p = pump;
  p.average_power_mw = p_in_mw;
  p.validate();
  const double mult = p.mode == PumpMode::cw ? cw_noise_multiplier : 1.0;
  return gamma_noise * p_in_mw * mult * window_seconds(p, window_ps);
}

CarModelParams CarModelParams::from_source(const SourceConfig& source, double dark_rate_hz, double window_ps) {
  source.validate();
  if (!(dark_rate_hz >= 0.0)) throw InvalidArgument("dark rate must be >= 0");
  CarModelParams p;
  p.window_ps = window_ps;
  p.cw_noise_multiplier = source.conversion.cw_noise_multiplier;
  // Back out effective coefficients at 1 mW so split, spectral and path
  // factors are included.
  SourceConfig probe = source;
  probe.pump.average_power_mw = 1.0;
  const PumpConfig& pump = probe.pump;
  const double T = window_seconds(pump, window_ps);
  p.gamma_combined = probe.direction_pairs(1, window_ps) / (T / pump.duty_cycle);
  const double mult = pump.mode == PumpMode::cw ? p.cw_noise_multiplier : 1.0;
  p.gamma_noise = probe.noise_per_arm(ChannelRole::signal, window_ps) / (mult * T);
  p.eta_s = source.eta(ChannelRole::signal);
  p.eta_i = source.eta(ChannelRole::idler);
  p.d_s = dark_rate_hz * window_ps * 1e-12;
  p.d_i = p.d_s;
  return p;
}

double car_model(const CarModelParams& params, double p_in_mw, const PumpConfig& pump) {
  params.validate();
  const double mu = params.mu(p_in_mw, pump);
  const double n = params.noise(p_in_mw, pump) * params.noise_transmission;
  const double den = ((mu + n) * params.eta_s + params.d_s) * ((mu + n) * params.eta_i + params.d_i);
  if (!(den > 0.0)) throw Undefined("CAR undefined: all rates are zero");
  return mu * params.eta_s * params.eta_i / den - 1.0;
}

double car_model_peak_power(const CarModelParams& params, const PumpConfig& pump, double lo_mw, double hi_mw) {
  if (!(lo_mw > 0.0 && hi_mw > lo_mw)) throw InvalidArgument("invalid power bracket");
  auto f = [&](double x) { return -car_model(params, std::exp(x), pump); };
  double a = std::log(lo_mw), b = std::log(hi_mw);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-10; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::exp(0.5 * (a + b));
}

VisibilityRecord visibility(const ProjectionQuad& r, VisibilityBasis basis) {
  const double x[4] = {r.same_same, r.orth_same, r.same_orth, r.orth_orth};
  for (double v : x)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("projection rates must be finite and >= 0");
  const double sum = x[0] + x[1] + x[2] + x[3];
  if (!(sum > 0.0)) throw Undefined("visibility undefined for zero total rate");
  VisibilityRecord out;
  out.basis = basis;
  out.rates = r;
  out.value = std::clamp((x[0] - x[1] - x[2] + x[3]) / sum, -1.0, 1.0);
  const double sign[4] = {1.0, -1.0, -1.0, 1.0};
  double var = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double deriv = (sign[k] - out.value) / sum;
    var += deriv * deriv * x[k];
  }
  out.sigma = std::sqrt(var);
  return out;
}

double fidelity_witness(double v_hv, double v_da) {
  if (!(std::abs(v_hv) <= 1.0) || !(std::abs(v_da) <= 1.0)) throw InvalidArgument("visibilities must be in [-1, 1]");
  return 0.5 * (v_hv + v_da);
}

EmittedEstimate estimate_emitted(double rate, double h_s, double h_i, double eta_s, double eta_i) {
  if (!(eta_s > 0.0 && eta_s <= 1.0) || !(eta_i > 0.0 && eta_i <= 1.0))
    throw InvalidArgument("efficiencies must be in (0, 1]");
  return {rate / (eta_s * eta_i), h_s / eta_i, h_i / eta_s};
}

EmittedEstimate estimate_emitted(const CoincidenceStats& stats, double eta_s, double eta_i) {
  return estimate_emitted(stats.coincidence_rate(), stats.heralding_signal(), stats.heralding_idler(), eta_s, eta_i);
}

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> data) {
  if (data.size() < 3) throw InvalidArgument("power-law fit needs at least 3 points");
  const double n = static_cast<double>(data.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : data) {
    if (!(x > 0.0) || !(y > 0.0)) throw InvalidArgument("power-law fit needs positive data");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : data) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("power-law fit needs distinct abscissae");
  PowerLawFit out;
  out.exponent = sxy / sxx;
  const double log_a = my - out.exponent * mx;
  out.prefactor = std::exp(log_a);
  double rss = 0;
  for (const auto& [x, y] : data) {
    const double e = std::log(y) - (log_a + out.exponent * std::log(x));
    rss += e * e;
  }
  const double s2 = data.size() > 2 ? rss / (n - 2.0) : 0.0;
  out.exponent_sigma = std::sqrt(s2 / sxx);
  out.log_prefactor_sigma = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  return out;
}

CarFit fit_car_model(std::span<const std::pair<double, double>> data, const PumpConfig& pump, const CarFixed& fixed,
                     int max_iterations, std::span<const double> sigmas) {
  if (data.size() < 4) throw InvalidArgument("CAR fit needs at least 4 points");
  if (!sigmas.empty() && sigmas.size() != data.size()) throw InvalidArgument("one sigma per CAR point required");
  for (double s : sigmas)
    if (!(s > 0.0)) throw InvalidArgument("CAR sigmas must be > 0");
  for (const auto& [p, car] : data)
    if (!(p > 0.0) || !std::isfinite(car)) throw InvalidArgument("CAR fit needs positive powers and finite CAR");

  CarModelParams base;
  base.eta_s = fixed.eta_s;
  base.eta_i = fixed.eta_i;
  base.d_s = fixed.d_s;
  base.d_i = fixed.d_i;
  base.window_ps = fixed.window_ps;
  base.cw_noise_multiplier = fixed.cw_noise_multiplier;
  base.noise_transmission = fixed.noise_transmission;
  base.validate();

  auto with = [&](const Eigen::VectorXd& x) {
    CarModelParams p = base;
    p.gamma_combined = std::exp(x(0));
    p.gamma_noise = std::exp(x(1));
    return p;
  };
  auto residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 700.0) {
      r.setConstant(std::numeric_limits<double>::infinity());
      return r;
    }
    const CarModelParams p = with(x);
    for (std::size_t k = 0; k < data.size(); ++k) {
      const auto& [pw, car] = data[k];
      const double scale = sigmas.empty() ? std::max(std::abs(car), 1e-12) : sigmas[k];
      r(static_cast<Eigen::Index>(k)) = (car_model(p, pw, pump) - car) / scale;
    }
    return r;
  };

  // Start from the noise-free low-power limit CAR ~ 1/mu and a noise level at
  // which the mean of the data sits near the peak.
  Eigen::VectorXd x0(2);
  {
    const auto& [p0, c0] = *std::min_element(data.begin(), data.end());
    CarModelParams unit = base;
    unit.gamma_combined = 1.0;
    const double mu_unit = unit.mu(p0, pump);
    const double gc = 1.0 / (std::max(c0, 1e-3) + 1.0) / mu_unit;
    unit.gamma_noise = 1.0;
    const double n_unit = unit.noise(p0, pump) * base.noise_transmission;
    x0(0) = std::log(gc);
    x0(1) = std::log(std::max(gc * mu_unit / std::max(n_unit, 1e-300), 1e-300));
  }

  // Multi-start over the noise coefficient: the cost is flat in gamma_noise
  // when the data never reach the rolloff.
  FitResult best;
  best.cost = std::numeric_limits<double>::infinity();
  LmOptions opts;
  opts.max_iterations = max_iterations;
  for (double shift : {0.0, -4.0, 4.0, -8.0}) {
    Eigen::VectorXd start = x0;
    start(1) += shift;
    FitResult r = levenberg_marquardt(residuals, start, opts);
    if (r.cost < best.cost) best = r;
  }
  if (!best.converged) {
    FitResult nm = nelder_mead([&](const Eigen::VectorXd& x) { return 0.5 * residuals(x).squaredNorm(); }, best.x);
    if (nm.cost < best.cost) best = nm;
    if (!best.converged) throw ConvergenceError("CAR fit did not converge", best);
  }
  CarFit out;
  out.params = with(best.x);
  out.residual_norm = std::sqrt(2.0 * best.cost);
  out.iterations = best.iterations;
  return out;
}

}  // namespace sagnac
