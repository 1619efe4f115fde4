// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "sagnac/control.hpp"
#include "sagnac/correlate.hpp"
#include "sagnac/error.hpp"
#include "sagnac/experiments.hpp"
#include "sagnac/model.hpp"
#include "sagnac/montecarlo.hpp"
#include "sagnac/simd/kernels.hpp"
#include "sagnac/tomography.hpp"
#include "unit/test_util.hpp"

using namespace sagnac;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2 from eigen-decompositions.
Matrix4c psd_sqrt(const Matrix4c& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (m + m.adjoint()));
  const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double uhlmann_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  const Matrix4c s = psd_sqrt(a.matrix());
  const Matrix4c inner = s * b.matrix() * s;
  const Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (inner + inner.adjoint()));
  const double t = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return t * t;
}

Outcome eq2_algebra() {
  CarModelParams p;
  p.gamma_combined = 4016.67;
  p.gamma_noise = 0.0;
  p.eta_s = 0.066;
  p.eta_i = 0.041;
  const auto pump = PumpConfig::pulsed(1.0, 1.0, 0.09);
  double worst = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double mu_target = std::pow(10.0, -4.0 + 4.0 * k / 400.0);
    const double p_mw = std::sqrt(mu_target * pump.duty_cycle / (p.gamma_combined * 1e-9));
    const double mu = p.mu(p_mw, pump);
    const double rel = std::abs(car_model(p, p_mw, pump) - (1.0 / mu - 1.0)) / (1.0 / mu);
    worst = std::max(worst, rel);
  }
  const double tol = 8.0 * std::numeric_limits<double>::epsilon();
  return {worst <= tol, fmt("max relative deviation %.2e over mu in [1e-4, 1] (tol %.1e)", worst, tol)};
}

Outcome mc_vs_model() {
  struct Point {
    double duty;  // 1 for CW
    double dbm;
  };
  const std::vector<Point> points{{0.09, -6}, {0.09, 3},  {0.09, 12}, {0.25, 0}, {0.25, 9},
                                  {0.25, 15}, {0.49, -3}, {0.49, 6},  {1.0, 3},  {1.0, 12}};
  const double dark_hz = 300.0;
  const int side_peaks = 20;
  int ok = 0;
  double worst = 0.0;
  std::uint64_t min_windows = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t k = 0; k < points.size(); ++k) {
    SourceConfig src = reference_source();
    const double mw = dbm_to_mw(points[k].dbm);
    src.pump = points[k].duty < 1.0 ? PumpConfig::pulsed(mw, 1.0, points[k].duty) : PumpConfig::cw(mw);
    const CarModelParams model = CarModelParams::from_source(src, dark_hz, 500.0);
    const double predicted = car_model(model, mw, src.pump);

    // Size the run for about 2000 accidental counts over all side peaks.
    const double mu = model.mu(mw, src.pump), n = model.noise(mw, src.pump) * model.noise_transmission;
    const double acc_per_window = ((mu + n) * model.eta_s + model.d_s) * ((mu + n) * model.eta_i + model.d_i);
    const double acc_per_s = acc_per_window / window_seconds(src.pump, 500.0);
    const double duration = std::clamp(2000.0 / (side_peaks * acc_per_s), 2e-3, 60.0);

    RunPlan plan = make_run_plan(src, ProjectionSetting::parse("HH"), duration, 1000 + k);
    plan.signal_detector.dead_time_ns = plan.idler_detector.dead_time_ns = 0.0;
    plan.signal_detector.dark_rate_hz = plan.idler_detector.dark_rate_hz = dark_hz;
    const RunResult run = simulate_run(plan);
    min_windows = std::min(min_windows, run.windows);
    auto spec = CoincidenceWindowSpec::for_pump(src.pump, 500.0);
    spec.side_peaks = side_peaks;
    const CarEstimate est = car_from_tags(run.signal, run.idler, spec);
    const double z = std::abs(est.car - predicted) / est.sigma;
    worst = std::max(worst, z);
    if (z <= 3.0 && !est.censored) ++ok;
    std::printf("    %s %5.1f dBm: simulated %.4g +- %.3g, model %.4g, %.2f sigma\n",
                points[k].duty < 1.0 ? fmt("%2.0f%%", points[k].duty * 100).c_str() : " CW", points[k].dbm, est.car,
                est.sigma, predicted, z);
  }
  return {ok == static_cast<int>(points.size()) && min_windows >= 1'000'000,
          fmt("%d/%zu points within 3 sigma (worst %.2f), >= %llu windows each", ok, points.size(), worst,
              static_cast<unsigned long long>(min_windows))};
}

Outcome table_arithmetic() {
  const auto bright = estimate_emitted(8027.0, 0.017, 0.036, 0.066, 0.041);
  const double eta_s = std::pow(10.0, -1.18), eta_i = std::pow(10.0, -1.39);
  const auto cw = estimate_emitted(535.0, 0.016, 0.029, eta_s, eta_i);
  const double e_rate = std::abs(bright.rate / 2.98e6 - 1.0);
  const double e_hs = std::abs(cw.heralding_signal / 0.398 - 1.0);
  const double e_hi = std::abs(cw.heralding_idler / 0.442 - 1.0);
  return {e_rate <= 0.02 && e_hs <= 0.03 && e_hi <= 0.03,
          fmt("R_est %.4g Mcps (%.2f%% off), CW heraldings %.1f%% / %.1f%% (%.2f%% / %.2f%% off)", bright.rate * 1e-6,
              100 * e_rate, 100 * cw.heralding_signal, 100 * cw.heralding_idler, 100 * e_hs, 100 * e_hi)};
}

Outcome visibility_fidelity() {
  auto cfg = default_config(ExperimentKind::visibility);
  cfg.duration_s = 20.0;
  cfg.seed = 2024;
  const auto r = run_visibility(cfg);
  const bool pass = std::abs(r.hv.value - 0.995) <= 0.005 && std::abs(r.da.value - 0.990) <= 0.005 &&
                    std::abs(r.witness - 0.9925) <= 0.005;
  return {pass, fmt("V_HV %.5f +- %.5f, V_DA %.5f +- %.5f, F >= %.5f", r.hv.value, r.hv.sigma, r.da.value, r.da.sigma,
                    r.witness)};
}

Outcome power_law() {
  auto cfg = default_config(ExperimentKind::power_sweep);
  cfg.seed = 77;
  const double lowest = *std::min_element(cfg.grid.powers_dbm.begin(), cfg.grid.powers_dbm.end());
  bool pass = true;
  std::string detail;
  std::vector<std::vector<double>> rates;
  std::vector<double> duties;
  for (const auto& [label, pump] : sweep_pumps(cfg)) {
    // Long enough for 4000 coincidences at the lowest power.
    SourceConfig src = cfg.source;
    src.pump = pump;
    src.pump.average_power_mw = dbm_to_mw(lowest);
    RunPlan probe = make_run_plan(src, ProjectionSetting::parse("HH"), 1.0, 1);
    probe.signal_detector = probe.idler_detector = cfg.detector;
    const double rate = expected_rates(probe, cfg.coincidence_window_ps).coincidences;
    ExperimentConfig one = cfg;
    one.duration_s = std::ceil(4400.0 / rate);
    one.grid.duties.clear();
    one.grid.include_cw = pump.mode == PumpMode::cw;
    if (pump.mode == PumpMode::pulsed) one.grid.duties = {pump.duty_cycle};
    one.seed = cfg.seed + duties.size();
    const auto res = run_power_sweep(one);
    const auto& fit = res.fits.front();
    const auto& rows = res.series.front().rows;
    const bool ok = std::abs(fit.exponent - 2.0) <= 0.05;
    pass = pass && ok;
    detail += fmt("%s %.3f+-%.3f (min C %.0f); ", label.c_str(), fit.exponent, fit.exponent_sigma,
                  rows.front().coincidences_cps * one.duration_s);
    std::vector<double> c;
    for (const auto& row : rows) c.push_back(row.coincidences_cps);
    rates.push_back(c);
    duties.push_back(pump.duty_cycle);
  }
  // Brightness of the shortest duty against CW, geometric mean over the grid.
  const auto shortest = std::min_element(duties.begin(), duties.end()) - duties.begin();
  const auto cw = std::max_element(duties.begin(), duties.end()) - duties.begin();
  double log_ratio = 0.0;
  for (std::size_t k = 0; k < rates[shortest].size(); ++k)
    log_ratio += std::log(rates[shortest][k] / rates[cw][k]);
  const double ratio = std::exp(log_ratio / rates[shortest].size());
  const double expected = 1.0 / duties[shortest];
  const bool ratio_ok = std::abs(ratio / expected - 1.0) <= 0.10;
  detail += fmt("brightness %g%%/CW %.2f vs 1/duty %.2f", 100 * duties[shortest], ratio, expected);
  return {pass && ratio_ok, detail};
}

Outcome car_ordering() {
  auto cfg = default_config(ExperimentKind::car_sweep);
  cfg.grid.powers_dbm = {-9.0, -6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0, 15.0};
  cfg.seed = 31;
  const auto res = run_car_sweep(cfg);
  bool pass = res.size() == 4;
  std::string detail;
  for (std::size_t k = 0; k < res.size(); ++k) {
    const auto& r = res[k];
    pass = pass && r.fit_ok;
    // The calibrated model is the reference for the fitted peak height.
    const CarModelParams truth = CarModelParams::from_source(cfg.source, cfg.detector.dark_rate_hz,
                                                             cfg.coincidence_window_ps);
    const double true_peak = car_model(truth, car_model_peak_power(truth, r.series.pump), r.series.pump);
    const bool close = std::abs(r.fitted_peak_car / true_peak - 1.0) <= 0.15;
    pass = pass && close;
    detail += fmt("%s peak %.0f at %.3g mW (model %.0f); ", r.series.label.c_str(), r.fitted_peak_car,
                  r.fitted_peak_mw, true_peak);
    if (k > 0) {
      pass = pass && r.fitted_peak_car < res[k - 1].fitted_peak_car;
      pass = pass && r.fitted_peak_mw > res[k - 1].fitted_peak_mw;
    }
  }
  detail += "order 9% > 25% > 49% > CW in CAR, reversed in power";
  return {pass, detail};
}

Outcome tomography_round_trip() {
  std::mt19937_64 rng(7);
  double worst_lin = 0.0, worst_fid = 1.0, worst_eig = 0.0, worst_trace = 0.0;
  for (int n = 0; n < 100; ++n) {
    const DensityMatrix rho = test::random_density(rng, 1 + n % 4);
    const DensityMatrix lin = linear_reconstruct(expected_tomography(rho, 1.0));
    worst_lin = std::max(worst_lin, (lin.matrix() - rho.matrix()).cwiseAbs().maxCoeff());
    // 4e7 pair-counts spread over a basis averages 1e7 counts per setting.
    const auto m = mle_reconstruct(simulate_tomography(rho, 4e7, 1.0, 5000 + n));
    worst_fid = std::min(worst_fid, uhlmann_fidelity(m.rho, rho));
    const auto low = mle_reconstruct(simulate_tomography(rho, 200.0, 1.0, 9000 + n));
    for (const auto* r : {&m.rho, &low.rho}) {
      worst_eig = std::min(worst_eig, r->min_eigenvalue());
      worst_trace = std::max(worst_trace, std::abs(r->matrix().trace().real() - 1.0));
    }
  }
  return {worst_lin <= 1e-9 && worst_fid >= 0.999 && worst_eig >= -1e-9 && worst_trace <= 1e-10,
          fmt("linear max error %.1e, min MLE fidelity %.6f, min eigenvalue %.1e, max trace error %.1e", worst_lin,
              worst_fid, worst_eig, worst_trace)};
}

Outcome switching() {
  const std::vector<std::string> names{"phi+", "phi-", "i+", "i-"};
  std::vector<double> mean(4, 0.0);
  const int runs = 5;
  for (int s = 0; s < runs; ++s) {
    auto cfg = default_config(ExperimentKind::switching);
    cfg.seed = 100 + s;
    const auto res = run_switch_experiment(cfg);
    for (std::size_t k = 0; k < 4; ++k) mean[k] += res.at(k).target_fidelity / runs;
  }
  bool pass = true;
  std::string detail = "tag-level mean fidelities";
  for (std::size_t k = 0; k < 4; ++k) {
    pass = pass && std::abs(mean[k] - 0.95) <= 0.015;
    detail += fmt(" %s %.4f", names[k].c_str(), mean[k]);
  }
  // Werner noise at the calibrated visibility.
  double werner = 1.0;
  for (const auto& n : names) werner = std::min(werner, fidelity_to_pure(werner_mix(preset_target(n), 0.9333), preset_target(n)));
  pass = pass && std::abs(werner - 0.95) <= 0.015;
  detail += fmt("; Werner %.4f", werner);

  // Sign rule: +V_pi/2 on the late pulse gives HH - i VV, on the early pulse HH + i VV.
  const ModulatorParams mod;
  const double half_mv = 1e3 * 0.25 / 2.0;
  EomPulsePattern late, early, late_neg;
  late.target = TargetPulse::late;
  late.slots = {{half_mv, 1}};
  early = late;
  early.target = TargetPulse::early;
  late_neg = late;
  late_neg.slots = {{-half_mv, 1}};
  auto fid = [&](const EomPulsePattern& p, const TwoQubitPure& t) {
    return fidelity_to_pure(DensityMatrix(pattern_to_state_sequence(p, mod, M_SQRT1_2, M_SQRT1_2).entries[0].state), t);
  };
  const bool signs = fid(late, states::phi_i_minus()) > 1 - 1e-12 && fid(early, states::phi_i_plus()) > 1 - 1e-12 &&
                     fid(late_neg, states::phi_i_plus()) > 1 - 1e-12;
  pass = pass && signs;
  detail += signs ? "; sign rule holds" : "; sign rule violated";
  return {pass, detail};
}

Outcome sfwm_gate() {
  FiberNoiseParams p;
  p.nonlinear_gamma = 1.0;
  p.pump_peak_power_w = 10e-3;
  p.fiber_length_km = 10e-3;
  const double v = sfwm_figure_of_merit(p);
  return {v == 1.0e-4, fmt("gamma P0 L = %.17g", v)};
}

Outcome determinism_performance() {
  SourceConfig src = reference_source();
  src.pump.average_power_mw = dbm_to_mw(9.0);
  RunPlan plan = make_run_plan(src, ProjectionSetting::parse("HD"), 0.05, 4242);
  plan.batch_windows = 1 << 18;
  plan.threads = 1;
  const RunResult ref = simulate_run(plan);
  bool same = true;
  for (unsigned t : {2u, 3u, 8u}) {
    plan.threads = t;
    const RunResult r = simulate_run(plan);
    same = same && r.signal.tags == ref.signal.tags && r.idler.tags == ref.idler.tags;
  }

  // Correlated streams: each signal tag has an idler partner 40% of the time.
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> gap(1.0 / 2000.0);
  std::normal_distribution<double> jitter(0.0, 50.0);
  std::bernoulli_distribution keep(0.4);
  std::vector<TimeTag> s, i;
  double t = 0.0;
  const std::size_t n = 5'000'000;
  s.reserve(n);
  i.reserve(n);
  while (s.size() < n) {
    t += gap(rng);
    s.push_back(static_cast<TimeTag>(t));
    const auto partner = static_cast<TimeTag>(t + (keep(rng) ? jitter(rng) : 700.0 + gap(rng)));
    i.push_back(std::max(partner, i.empty() ? partner : i.back() + 1));
  }
  double best = std::numeric_limits<double>::infinity();
  std::int64_t matches = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    matches = count_matches(s, i, 500.0);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  const double rate = static_cast<double>(s.size() + i.size()) / best;
  return {same && rate >= 1e7 && matches > 0,
          fmt("tag streams %s across 1/2/3/8 threads; correlator %.3g tags/s (%s)", same ? "identical" : "DIFFER",
              rate, std::string(simd::isa_name(simd::active_isa())).c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"CAR model algebra", eq2_algebra},
      {"Monte Carlo vs CAR model", mc_vs_model},
      {"emitted-rate and heralding arithmetic", table_arithmetic},
      {"visibility and fidelity witness", visibility_fidelity},
      {"coincidence power law", power_law},
      {"CAR peak ordering", car_ordering},
      {"tomography round trip", tomography_round_trip},
      {"state switching", switching},
      {"SFWM figure of merit", sfwm_gate},
      {"determinism and correlator throughput", determinism_performance},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str(),
                dt.count());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
