#include "sagnac/experiments.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include "sagnac/error.hpp"
#include "sagnac/rng.hpp"
#include "sagnac/simd/kernels.hpp"

#ifndef SAGNAC_VERSION
#define SAGNAC_VERSION "0.0.0"
#endif

namespace sagnac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RunPlan base_plan(const ExperimentConfig& cfg, const SourceConfig& source, const ProjectionSetting& setting,
                  double duration_s, std::uint64_t seed) {
  RunPlan plan = make_run_plan(source, setting, duration_s, seed);
  plan.signal_detector = cfg.detector;
  plan.idler_detector = cfg.detector;
  plan.state_noise = cfg.state_noise;
  plan.threads = cfg.threads;
  return plan;
}

CoincidenceWindowSpec window_for(const ExperimentConfig& cfg, const PumpConfig& pump) {
  auto spec = CoincidenceWindowSpec::for_pump(pump, cfg.coincidence_window_ps);
  spec.side_peaks = cfg.side_peaks;
  return spec;
}

void dump(const RunResult& run, const std::filesystem::path& prefix) {
  if (prefix.empty()) return;
  std::filesystem::create_directories(prefix.parent_path());
  for (const TimeTagStream* s : {&run.signal, &run.idler})
    write_binary_file(prefix.string() + "_ch" + std::to_string(s->channel) + ".bin", *s);
}

std::string pct(double duty) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", duty * 100.0);
  return buf;
}

double theta_for_state(const std::string& name) {
  if (name == "phi+") return 0.0;
  if (name == "phi-") return std::numbers::pi;
  if (name == "i+" || name == "phi_i+") return std::numbers::pi / 2.0;
  if (name == "i-" || name == "phi_i-") return -std::numbers::pi / 2.0;
  throw InvalidArgument("unknown state: " + name);
}

TomographyRecord tag_tomography(const ExperimentConfig& cfg, RunPlan plan, const PumpConfig& pump,
                                std::uint64_t seed, const std::filesystem::path& dump_prefix) {
  TomographyRecord rec;
  rec.convention = plan.convention;
  const double seconds = cfg.tomo.seconds * cfg.tomo.samples;
  plan.duration_s = seconds;
  const auto spec = window_for(cfg, pump);
  const auto settings = default_settings();
  for (std::size_t v = 0; v < settings.size(); ++v) {
    plan.setting = settings[v];
    plan.seed = substream_seed(seed, v);
    const RunResult run = simulate_run(plan);
    if (!dump_prefix.empty()) dump(run, dump_prefix.string() + "_" + settings[v].label());
    const auto c = count_matches(run.signal.tags, run.idler.tags, spec.width_ps);
    rec.entries.push_back({settings[v], static_cast<double>(c), seconds});
  }
  return rec;
}

TomoResult reconstruct(std::string name, double theta, TomographyRecord rec, const TwoQubitPure& target) {
  TomoResult out;
  out.name = std::move(name);
  out.theta = theta;
  out.record = std::move(rec);
  out.linear = linear_reconstruct(out.record);
  out.mle = mle_reconstruct(out.record);
  std::vector<NamedState> targets = bell_targets();
  targets.push_back({"target", target});
  out.report = density_matrix_report(out.mle.rho, targets);
  out.report["name"] = out.name;
  out.report["theta_rad"] = theta;
  out.report["warnings"] = out.mle.warnings;
  out.target_fidelity = fidelity_to_pure(out.mle.rho, target);
  return out;
}

}  // namespace

std::string library_version() { return SAGNAC_VERSION; }

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepCsvHeader << '\n';
  os.precision(10);
  for (const auto& r : rows) {
    os << r.p_in_dbm << ',' << r.duty << ',' << r.rep_rate_ghz << ',' << r.coincidences_cps << ','
       << r.singles_signal_cps << ',' << r.singles_idler_cps << ',' << r.car << ',' << r.v_hv << ',' << r.v_da << ','
       << r.f_witness << '\n';
  }
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "dt_ps,counts\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k) os << h.bin_center(k) << ',' << h.counts[k] << '\n';
}

std::vector<std::pair<std::string, PumpConfig>> sweep_pumps(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, PumpConfig>> out;
  const auto& base = cfg.source.pump;
  for (double d : cfg.grid.duties) {
    const double rate = base.mode == PumpMode::pulsed ? base.repetition_rate_ghz : 1.0;
    out.emplace_back("pulsed_" + pct(d), PumpConfig::pulsed(base.average_power_mw, rate, d));
  }
  if (cfg.grid.include_cw) out.emplace_back("cw", PumpConfig::cw(base.average_power_mw));
  for (auto& [label, p] : out) p.center_wavelength_nm = base.center_wavelength_nm;
  return out;
}

SweepRow measure_point(const ExperimentConfig& cfg, const SourceConfig& source, std::uint64_t seed,
                       const std::filesystem::path& dump_prefix) {
  SweepRow row;
  row.p_in_dbm = source.pump.average_power_mw > 0.0 ? mw_to_dbm(source.pump.average_power_mw)
                                                     : -std::numeric_limits<double>::infinity();
  row.duty = source.pump.duty_cycle;
  row.rep_rate_ghz = source.pump.mode == PumpMode::pulsed ? source.pump.repetition_rate_ghz : 0.0;
  row.v_hv = row.v_da = row.f_witness = kNaN;

  const RunPlan plan = base_plan(cfg, source, {Basis::H, Basis::H}, cfg.duration_s, seed);
  const RunResult run = simulate_run(plan);
  dump(run, dump_prefix);
  const auto spec = window_for(cfg, source.pump);
  const CoincidenceStats stats = count_coincidences(run.signal, run.idler, spec, run.duration_s);
  row.coincidences_cps = stats.coincidence_rate();
  row.singles_signal_cps = stats.signal_rate();
  row.singles_idler_cps = stats.idler_rate();
  if (stats.coincidences > 0 || stats.singles_signal > 0) {
    const CarEstimate car = car_from_tags(run.signal, run.idler, spec);
    row.car = car.car;
    row.car_sigma = car.sigma;
    row.car_censored = car.censored;
  } else {
    row.car = kNaN;
  }
  return row;
}

namespace {

std::vector<SweepSeries> sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<SweepSeries> out;
  std::uint64_t point = 0;
  for (const auto& [label, pump] : sweep_pumps(cfg)) {
    SweepSeries s;
    s.label = label;
    s.pump = pump;
    for (double dbm : cfg.grid.powers_dbm) {
      SourceConfig src = cfg.source;
      src.pump = pump;
      src.pump.average_power_mw = std::isinf(dbm) && dbm < 0 ? 0.0 : dbm_to_mw(dbm);
      std::filesystem::path prefix;
      if (cfg.dump_tags) prefix = cfg.out_dir / "tags" / (label + "_" + std::to_string(point));
      s.rows.push_back(measure_point(cfg, src, substream_seed(cfg.seed, point), prefix));
      ++point;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

PowerSweepResult run_power_sweep(const ExperimentConfig& cfg) {
  PowerSweepResult out;
  out.series = sweep(cfg);
  for (const auto& s : out.series) {
    std::vector<std::pair<double, double>> data;
    for (const auto& r : s.rows)
      if (r.coincidences_cps > 0.0) data.emplace_back(dbm_to_mw(r.p_in_dbm), r.coincidences_cps);
    out.fits.push_back(data.size() >= 3 ? fit_power_law(data) : PowerLawFit{kNaN, kNaN, kNaN, kNaN});
  }
  return out;
}

std::vector<CarSweepSeriesResult> run_car_sweep(const ExperimentConfig& cfg) {
  std::vector<CarSweepSeriesResult> out;
  for (auto& s : sweep(cfg)) {
    CarSweepSeriesResult r;
    r.series = std::move(s);
    std::vector<std::pair<double, double>> data;
    std::vector<double> sigmas;
    for (const auto& row : r.series.rows) {
      if (!std::isfinite(row.car) || row.car_censored || !(row.car_sigma > 0.0)) continue;
      data.emplace_back(dbm_to_mw(row.p_in_dbm), row.car);
      // Dead time and multi-pair terms sit outside the model; a 5 % floor
      // keeps the best-measured high-power points from dominating the fit.
      sigmas.push_back(std::hypot(row.car_sigma, 0.05 * row.car));
      if (row.car > r.simulated_peak_car) {
        r.simulated_peak_car = row.car;
        r.simulated_peak_mw = dbm_to_mw(row.p_in_dbm);
      }
    }
    const CarModelParams known = CarModelParams::from_source(cfg.source, cfg.detector.dark_rate_hz,
                                                             cfg.coincidence_window_ps);
    CarFixed fixed;
    fixed.eta_s = known.eta_s * cfg.detector.efficiency;
    fixed.eta_i = known.eta_i * cfg.detector.efficiency;
    fixed.d_s = known.d_s;
    fixed.d_i = known.d_i;
    fixed.window_ps = cfg.coincidence_window_ps;
    fixed.cw_noise_multiplier = cfg.source.conversion.cw_noise_multiplier;
    try {
      r.fit = fit_car_model(data, r.series.pump, fixed, 200, sigmas);
      r.fitted_peak_mw = car_model_peak_power(r.fit.params, r.series.pump);
      r.fitted_peak_car = car_model(r.fit.params, r.fitted_peak_mw, r.series.pump);
      r.fit_ok = true;
    } catch (const Error& e) {
      r.fit_error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

VisibilityResult run_visibility(const ExperimentConfig& cfg) {
  cfg.validate();
  VisibilityResult out;
  const SourceConfig& src = cfg.source;
  const auto spec = window_for(cfg, src.pump);
  auto rate = [&](Basis s, Basis i, std::uint64_t k, Histogram* h) {
    RunPlan plan = base_plan(cfg, src, {s, i}, cfg.duration_s, substream_seed(cfg.seed, k));
    const RunResult run = simulate_run(plan);
    if (cfg.dump_tags) dump(run, cfg.out_dir / "tags" / ("vis_" + ProjectionSetting{s, i}.label()));
    if (h) *h = coincidence_histogram(run.signal, run.idler, 50.0, 5.0);
    return static_cast<double>(count_matches(run.signal.tags, run.idler.tags, spec.width_ps)) / run.duration_s;
  };
  ProjectionQuad hv{rate(Basis::H, Basis::H, 0, &out.histogram), rate(Basis::V, Basis::H, 1, nullptr),
                    rate(Basis::H, Basis::V, 2, nullptr), rate(Basis::V, Basis::V, 3, nullptr)};
  ProjectionQuad da{rate(Basis::D, Basis::D, 4, nullptr), rate(Basis::A, Basis::D, 5, nullptr),
                    rate(Basis::D, Basis::A, 6, nullptr), rate(Basis::A, Basis::A, 7, nullptr)};
  // Visibility errors are Poisson in counts, not rates.
  auto counts = [&](ProjectionQuad q) {
    return ProjectionQuad{q.same_same * cfg.duration_s, q.orth_same * cfg.duration_s, q.same_orth * cfg.duration_s,
                          q.orth_orth * cfg.duration_s};
  };
  out.hv = visibility(counts(hv), VisibilityBasis::HV);
  out.da = visibility(counts(da), VisibilityBasis::DA);
  out.hv.rates = hv;
  out.da.rates = da;
  out.witness = fidelity_witness(out.hv.value, out.da.value);

  out.row = measure_point(cfg, src, substream_seed(cfg.seed, 100));
  out.row.v_hv = out.hv.value;
  out.row.v_da = out.da.value;
  out.row.f_witness = out.witness;
  return out;
}

TomoResult run_tomo(const ExperimentConfig& cfg) {
  cfg.validate();
  const double theta = theta_for_state(cfg.tomo.state);
  const auto [alpha, beta] = cfg.source.state_amplitudes();
  const TwoQubitPure target = make_phase_state(alpha, beta, theta);
  TomographyRecord rec;
  if (cfg.tomo.mode == TomoMode::analytic) {
    rec = simulate_tomography(noisy_phase_state(alpha, beta, theta, cfg.state_noise), cfg.tomo.rate_cps,
                              cfg.tomo.seconds, cfg.seed, cfg.tomo.samples);
  } else {
    RunPlan plan = base_plan(cfg, cfg.source, {}, cfg.tomo.seconds, cfg.seed);
    plan.schedule = {{theta, 1}};
    rec = tag_tomography(cfg, plan, cfg.source.pump, substream_seed(cfg.seed, "tomo"),
                         cfg.dump_tags ? cfg.out_dir / "tags" / "tomo" : std::filesystem::path{});
  }
  return reconstruct(cfg.tomo.state, theta, std::move(rec), target);
}

std::vector<TomoResult> run_switch_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& sw = cfg.switching;
  SourceConfig src = cfg.source;
  src.pump = PumpConfig::pulsed(dbm_to_mw(sw.pump_power_dbm), sw.pattern.repetition_rate_hz * 1e-9,
                                sw.pattern.optical_duty);
  src.shg_path_loss_db = sw.modulator.insertion_loss_db;
  const auto [alpha, beta] = src.state_amplitudes();
  const StateSchedule schedule = pattern_to_state_sequence(sw.pattern, sw.modulator, alpha, beta);

  std::vector<std::string> names;
  if (sw.preset == "cycle") {
    names = {"phi+", "phi-", "i+", "i-"};
  } else if (sw.preset != "custom") {
    names = {sw.preset};
  }
  auto name_of = [&](std::size_t entry) {
    return entry < names.size() ? names[entry] : "state" + std::to_string(entry);
  };
  auto target_of = [&](std::size_t entry) {
    return entry < names.size() ? preset_target(names[entry]) : schedule.entries[entry].state;
  };

  std::vector<TomoResult> out;
  RunPlan base = base_plan(cfg, src, {}, cfg.tomo.seconds, cfg.seed);
  const auto plans = schedule_verification_plan(schedule, base);
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const std::size_t entry = plans[k].gate_entries.front();
    const double theta = schedule.entries[entry].theta;
    TomographyRecord rec;
    if (cfg.tomo.mode == TomoMode::analytic) {
      rec = simulate_tomography(noisy_phase_state(alpha, beta, theta, cfg.state_noise), cfg.tomo.rate_cps,
                                cfg.tomo.seconds, substream_seed(cfg.seed, k), cfg.tomo.samples);
    } else {
      rec = tag_tomography(cfg, plans[k], src.pump, substream_seed(cfg.seed, k),
                           cfg.dump_tags ? cfg.out_dir / "tags" / ("switch_" + name_of(entry)) : std::filesystem::path{});
    }
    out.push_back(reconstruct(name_of(entry), theta, std::move(rec), target_of(entry)));
  }
  return out;
}

NoiseFloorResult run_noise_floor(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.source.conversion.gamma_spdc = 0.0;
  NoiseFloorResult out;
  auto series = sweep(c);
  out.series = std::move(series.front());
  std::vector<std::pair<double, double>> data;
  for (const auto& r : out.series.rows) {
    const double s = r.singles_signal_cps - c.detector.dark_rate_hz;
    if (s > 0.0) data.emplace_back(dbm_to_mw(r.p_in_dbm), s);
  }
  out.singles_fit = data.size() >= 3 ? fit_power_law(data) : PowerLawFit{kNaN, kNaN, kNaN, kNaN};
  return out;
}

nlohmann::json make_manifest(const ExperimentConfig& cfg, const std::string& command,
                             const std::vector<std::string>& outputs) {
  return {{"tool", "sagnac"},
          {"version", library_version()},
          {"command", command},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"config_hash", config_hash(cfg)},
          {"config", to_json(cfg)},
          {"heralding_convention", kHeraldingConvention},
          {"simd", simd::isa_name(simd::active_isa())},
          {"outputs", outputs}};
}

}  // namespace sagnac
