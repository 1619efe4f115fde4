#include "sagnac/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "sagnac/error.hpp"
#include "sagnac/rng.hpp"

namespace sagnac {

void DetectorModel::validate() const {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw InvalidArgument("detector efficiency must be in (0, 1]");
  if (!(dark_rate_hz >= 0.0 && dead_time_ns >= 0.0 && jitter_rms_ps >= 0.0))
    throw InvalidArgument("detector parameters must be >= 0");
}

std::size_t schedule_entry(std::span<const PhaseSlot> schedule, std::uint64_t window) {
  if (schedule.empty()) throw InvalidArgument("empty phase schedule");
  std::uint64_t cycle = 0;
  for (const auto& s : schedule) cycle += s.windows;
  if (cycle == 0) throw InvalidArgument("phase schedule has zero length");
  std::uint64_t r = window % cycle;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (r < schedule[k].windows) return k;
    r -= schedule[k].windows;
  }
  return schedule.size() - 1;
}

double phase_schedule_sample(std::span<const PhaseSlot> schedule, std::uint64_t window) {
  return schedule[schedule_entry(schedule, window)].theta;
}

void Emission::validate() const {
  if (!(window_ps > 0.0)) throw InvalidArgument("emission window must be > 0");
  if (!(pairs_per_window >= 0.0 && noise_signal >= 0.0 && noise_idler >= 0.0))
    throw InvalidArgument("emission rates must be >= 0");
  if (!(eta_signal > 0.0 && eta_signal <= 1.0 && eta_idler > 0.0 && eta_idler <= 1.0))
    throw InvalidArgument("efficiencies must be in (0, 1]");
}

Emission emission_from_source(const SourceConfig& source, double cw_slot_ps) {
  source.validate();
  Emission e;
  e.pulsed = source.pump.mode == PumpMode::pulsed;
  e.window_ps = e.pulsed ? source.pump.period_ps() : cw_slot_ps;
  e.pairs_per_window = source.total_pairs(e.window_ps);
  e.noise_signal = source.noise_per_arm(ChannelRole::signal, e.window_ps);
  e.noise_idler = source.noise_per_arm(ChannelRole::idler, e.window_ps);
  e.eta_signal = source.eta(ChannelRole::signal);
  e.eta_idler = source.eta(ChannelRole::idler);
  return e;
}

DensityMatrix noisy_phase_state(double alpha, double beta, double theta, const StateNoise& noise) {
  if (!(noise.white >= 0.0 && noise.white <= 1.0 && noise.dephasing >= 0.0 && noise.dephasing <= 1.0))
    throw InvalidArgument("state noise fractions must be in [0, 1]");
  const Matrix4c p = make_phase_state(alpha, beta, theta).projector();
  Matrix4c dephased = p;
  dephased(0, 3) *= (1.0 - noise.dephasing);
  dephased(3, 0) *= (1.0 - noise.dephasing);
  return DensityMatrix((1.0 - noise.white) * dephased + noise.white * 0.25 * Matrix4c::Identity());
}

void RunPlan::validate() const {
  emission.validate();
  signal_detector.validate();
  idler_detector.validate();
  if (!(duration_s > 0.0)) throw InvalidArgument("duration must be > 0");
  if (batch_windows == 0) throw InvalidArgument("batch size must be > 0");
  if (schedule.empty()) throw InvalidArgument("empty phase schedule");
  for (std::size_t g : gate_entries)
    if (g >= schedule.size()) throw InvalidArgument("gate entry outside schedule");
  if (std::abs(alpha * alpha + beta * beta - 1.0) > 1e-12) throw InvalidArgument("alpha^2 + beta^2 must equal 1");
}

std::uint64_t RunPlan::total_windows() const {
  return static_cast<std::uint64_t>(std::llround(duration_s * 1e12 / emission.window_ps));
}

namespace {

// Per schedule entry: conditional probabilities of the three detection
// patterns given that a pair produced at least one click.
struct PairOutcomes {
  double p_any = 0.0;  // P(at least one click)
  double c_both = 0.0;
  double c_signal_only = 0.0;  // cumulative thresholds on [0, 1)
};

struct EntryModel {
  PairOutcomes pair;
  bool gated_in = true;
};

struct Prepared {
  std::vector<EntryModel> entries;
  double eff_s = 1.0, eff_i = 1.0;
  double sigma_s = 0.0, sigma_i = 0.0;
  double window_s = 0.0;
};

Matrix4c kron_partial(const Vector2c& a, bool on_signal) {
  const Matrix2c pa = a * a.adjoint();
  const Matrix2c id = Matrix2c::Identity();
  const Matrix2c& s = on_signal ? pa : id;
  const Matrix2c& i = on_signal ? id : pa;
  Matrix4c m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = s(r / 2, c / 2) * i(r % 2, c % 2);
  return m;
}

struct AnalyzerProbs {
  double pp, p_s, p_i;  // both pass, signal passes, idler passes
};

AnalyzerProbs analyzer_probs(const RunPlan& plan, double theta) {
  const DensityMatrix rho = noisy_phase_state(plan.alpha, plan.beta, theta, plan.state_noise);
  const Vector2c as = analyzer_state(waveplate_angles(plan.setting.signal, plan.convention));
  const Vector2c ai = analyzer_state(waveplate_angles(plan.setting.idler, plan.convention));
  return {projection_probability(rho, setting_projector(plan.setting, plan.convention)),
          projection_probability(rho, kron_partial(as, true)), projection_probability(rho, kron_partial(ai, false))};
}

Prepared prepare(const RunPlan& plan) {
  Prepared p;
  p.eff_s = plan.emission.eta_signal * plan.signal_detector.efficiency;
  p.eff_i = plan.emission.eta_idler * plan.idler_detector.efficiency;
  p.sigma_s = std::hypot(plan.signal_detector.jitter_rms_ps, plan.tdc_jitter_ps);
  p.sigma_i = std::hypot(plan.idler_detector.jitter_rms_ps, plan.tdc_jitter_ps);
  p.window_s = plan.emission.window_ps * 1e-12;
  for (std::size_t k = 0; k < plan.schedule.size(); ++k) {
    const AnalyzerProbs a = analyzer_probs(plan, plan.schedule[k].theta);
    const double both = a.pp * p.eff_s * p.eff_i;
    const double s_only = a.p_s * p.eff_s - both;
    const double i_only = a.p_i * p.eff_i - both;
    EntryModel e;
    e.pair.p_any = std::max(0.0, both + s_only + i_only);
    if (e.pair.p_any > 0.0) {
      e.pair.c_both = both / e.pair.p_any;
      e.pair.c_signal_only = (both + std::max(0.0, s_only)) / e.pair.p_any;
    }
    e.gated_in = plan.gate_entries.empty() ||
                 std::find(plan.gate_entries.begin(), plan.gate_entries.end(), k) != plan.gate_entries.end();
    p.entries.push_back(e);
  }
  return p;
}

struct BatchOut {
  std::vector<TimeTag> signal;
  std::vector<TimeTag> idler;
};

BatchOut run_batch(const RunPlan& plan, const Prepared& prep, std::uint64_t batch, std::uint64_t first_window,
                   std::uint64_t n_windows) {
  Philox4x32 rng(plan.seed, batch);
  std::uniform_int_distribution<std::uint64_t> pick_window(0, n_windows - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double T = plan.emission.window_ps;
  const bool pulsed = plan.emission.pulsed;
  const auto& sched = plan.schedule;

  BatchOut out;
  auto emit_time = [&](std::uint64_t w) {
    const double start = static_cast<double>(w) * T;
    return pulsed ? start + 0.5 * T : start + unit(rng) * T;
  };
  auto push = [&](std::vector<TimeTag>& dst, double t, double sigma) {
    t += sigma * gauss(rng);
    if (t >= 0.0) dst.push_back(static_cast<TimeTag>(std::llround(t)));
  };

  // Pairs. Thinned up-front to those registering at least one click; the
  // per-window pair count stays Poisson because windows are drawn uniformly.
  double mean_any = 0.0;
  std::uint64_t cycle = 0;
  for (const auto& s : sched) cycle += s.windows;
  // Averaged p_any over the schedule, refined per pair by rejection.
  double p_max = 0.0;
  for (const auto& e : prep.entries) p_max = std::max(p_max, e.pair.p_any);
  mean_any = plan.emission.pairs_per_window * p_max * static_cast<double>(n_windows);
  if (mean_any > 0.0) {
    const std::uint64_t k = std::poisson_distribution<std::uint64_t>(mean_any)(rng);
    for (std::uint64_t n = 0; n < k; ++n) {
      const std::uint64_t w = first_window + pick_window(rng);
      const std::size_t entry = cycle == 1 ? 0 : schedule_entry(sched, w);
      const EntryModel& em = prep.entries[entry];
      const double u_accept = unit(rng);
      const double u_kind = unit(rng);
      const double t0 = emit_time(w);
      if (u_accept * p_max >= em.pair.p_any || !em.gated_in) continue;
      if (u_kind < em.pair.c_both) {
        push(out.signal, t0, prep.sigma_s);
        push(out.idler, t0, prep.sigma_i);
      } else if (u_kind < em.pair.c_signal_only) {
        push(out.signal, t0, prep.sigma_s);
      } else {
        push(out.idler, t0, prep.sigma_i);
      }
    }
  }

  // Unpolarized Raman photons: the analyzer passes half of them.
  auto noise = [&](std::vector<TimeTag>& dst, double per_window, double eff, double sigma) {
    const double mean = per_window * 0.5 * eff * static_cast<double>(n_windows);
    if (mean <= 0.0) return;
    const std::uint64_t k = std::poisson_distribution<std::uint64_t>(mean)(rng);
    for (std::uint64_t n = 0; n < k; ++n) {
      const std::uint64_t w = first_window + pick_window(rng);
      const double t0 = emit_time(w);
      if (!prep.entries[cycle == 1 ? 0 : schedule_entry(sched, w)].gated_in) continue;
      push(dst, t0, sigma);
    }
  };
  noise(out.signal, plan.emission.noise_signal, prep.eff_s, prep.sigma_s);
  noise(out.idler, plan.emission.noise_idler, prep.eff_i, prep.sigma_i);

  auto darks = [&](std::vector<TimeTag>& dst, double rate_hz, double sigma) {
    const double mean = rate_hz * prep.window_s * static_cast<double>(n_windows);
    if (mean <= 0.0) return;
    const std::uint64_t k = std::poisson_distribution<std::uint64_t>(mean)(rng);
    const double t_begin = static_cast<double>(first_window) * T;
    const double span = static_cast<double>(n_windows) * T;
    for (std::uint64_t n = 0; n < k; ++n) {
      const double t0 = t_begin + unit(rng) * span;
      const auto w = static_cast<std::uint64_t>(t0 / T);
      if (!prep.entries[cycle == 1 ? 0 : schedule_entry(sched, w)].gated_in) continue;
      push(dst, t0, sigma);
    }
  };
  darks(out.signal, plan.signal_detector.dark_rate_hz, prep.sigma_s);
  darks(out.idler, plan.idler_detector.dark_rate_hz, prep.sigma_i);

  std::sort(out.signal.begin(), out.signal.end());
  std::sort(out.idler.begin(), out.idler.end());
  return out;
}

std::vector<TimeTag> finish_stream(std::vector<BatchOut>& batches, bool signal, double dead_time_ns) {
  std::size_t total = 0;
  for (const auto& b : batches) total += (signal ? b.signal : b.idler).size();
  std::vector<TimeTag> all;
  all.reserve(total);
  for (auto& b : batches) {
    auto& v = signal ? b.signal : b.idler;
    all.insert(all.end(), v.begin(), v.end());
    std::vector<TimeTag>().swap(v);
  }
  // Jitter can carry a tag across a batch boundary; batches are already
  // sorted, so this is a near-linear pass.
  if (!std::is_sorted(all.begin(), all.end())) std::sort(all.begin(), all.end());
  // A detector cannot register two clicks in the same picosecond.
  const TimeTag dead_ps = std::max<TimeTag>(1, static_cast<TimeTag>(std::llround(dead_time_ns * 1e3)));
  return apply_dead_time(all, dead_ps);
}

}  // namespace

ExpectedRates expected_rates(const RunPlan& plan, double coincidence_window_ps) {
  plan.validate();
  const Prepared prep = prepare(plan);
  const double f = 1.0 / prep.window_s;
  std::uint64_t cycle = 0;
  for (const auto& s : plan.schedule) cycle += s.windows;

  double pairs_both = 0.0, pairs_s = 0.0, pairs_i = 0.0, gate = 0.0;
  for (std::size_t k = 0; k < plan.schedule.size(); ++k) {
    if (!prep.entries[k].gated_in) continue;
    const double share = static_cast<double>(plan.schedule[k].windows) / static_cast<double>(cycle);
    const AnalyzerProbs a = analyzer_probs(plan, plan.schedule[k].theta);
    pairs_both += share * a.pp;
    pairs_s += share * a.p_s;
    pairs_i += share * a.p_i;
    gate += share;
  }
  const double mu = plan.emission.pairs_per_window;
  const double rs = f * (mu * pairs_s * prep.eff_s + gate * 0.5 * plan.emission.noise_signal * prep.eff_s) +
                    gate * plan.signal_detector.dark_rate_hz;
  const double ri = f * (mu * pairs_i * prep.eff_i + gate * 0.5 * plan.emission.noise_idler * prep.eff_i) +
                    gate * plan.idler_detector.dark_rate_hz;
  const double tau_s = plan.signal_detector.dead_time_ns * 1e-9;
  const double tau_i = plan.idler_detector.dead_time_ns * 1e-9;
  ExpectedRates r;
  r.singles_signal = rs / (1.0 + rs * tau_s);
  r.singles_idler = ri / (1.0 + ri * tau_i);
  r.true_coincidences =
      f * mu * pairs_both * prep.eff_s * prep.eff_i * (1.0 - r.singles_signal * tau_s) * (1.0 - r.singles_idler * tau_i);
  // Uncorrelated clicks landing in the same window as a partner.
  const double overlap_s = plan.emission.pulsed ? prep.window_s / std::max(gate, 1e-300) : coincidence_window_ps * 1e-12;
  r.coincidences = r.true_coincidences + r.singles_signal * r.singles_idler * overlap_s;
  return r;
}

double calibrate_gamma_spdc(SourceConfig source, const RunPlan& plan_template, double target_cps,
                            double coincidence_window_ps) {
  if (!(target_cps > 0.0)) throw InvalidArgument("calibration target must be > 0");
  auto rate_for = [&](double gamma) {
    source.conversion.gamma_spdc = gamma;
    RunPlan plan = plan_template;
    plan.emission = emission_from_source(source);
    return expected_rates(plan, coincidence_window_ps).coincidences;
  };
  double lo = 0.0, hi = std::max(1.0, source.conversion.gamma_spdc);
  while (rate_for(hi) < target_cps) {
    hi *= 2.0;
    if (hi > 1e30) throw Error("calibration target unreachable");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate_for(mid) < target_cps ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

RunPlan make_run_plan(const SourceConfig& source, const ProjectionSetting& setting, double duration_s,
                      std::uint64_t seed) {
  RunPlan plan;
  plan.emission = emission_from_source(source);
  const auto [a, b] = source.state_amplitudes();
  plan.alpha = a;
  plan.beta = b;
  plan.setting = setting;
  plan.duration_s = duration_s;
  plan.seed = seed;
  return plan;
}

RunResult simulate_run(const RunPlan& plan) {
  plan.validate();
  const Prepared prep = prepare(plan);
  const std::uint64_t windows = plan.total_windows();

  // Rough pre-flight on memory: expected raw clicks before dead time.
  double p_max = 0.0;
  for (const auto& e : prep.entries) p_max = std::max(p_max, e.pair.p_any);
  const double expected =
      static_cast<double>(windows) *
          (plan.emission.pairs_per_window * p_max * 2.0 +
           0.5 * (plan.emission.noise_signal * prep.eff_s + plan.emission.noise_idler * prep.eff_i)) +
      (plan.signal_detector.dark_rate_hz + plan.idler_detector.dark_rate_hz) * plan.duration_s;
  if (expected > static_cast<double>(plan.max_tags))
    throw CapacityError("run would generate ~" + std::to_string(static_cast<long long>(expected)) +
                        " tags, above the budget of " + std::to_string(plan.max_tags));

  const std::uint64_t n_batches = (windows + plan.batch_windows - 1) / plan.batch_windows;
  std::vector<BatchOut> batches(n_batches);
  std::atomic<std::uint64_t> next{0};
  std::atomic<std::size_t> produced{0};
  std::atomic<bool> over_budget{false};
  auto worker = [&] {
    for (std::uint64_t b = next++; b < n_batches && !over_budget; b = next++) {
      const std::uint64_t first = b * plan.batch_windows;
      const std::uint64_t n = std::min(plan.batch_windows, windows - first);
      batches[b] = run_batch(plan, prep, b, first, n);
      const std::size_t total = produced += batches[b].signal.size() + batches[b].idler.size();
      if (total > plan.max_tags) over_budget = true;
    }
  };
  const unsigned threads = std::max(1u, plan.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (over_budget) throw CapacityError("run exceeded the tag budget of " + std::to_string(plan.max_tags));

  RunResult r;
  r.windows = windows;
  r.duration_s = static_cast<double>(windows) * plan.emission.window_ps * 1e-12;
  r.signal.channel = 0;
  r.idler.channel = 1;
  r.signal.tags = finish_stream(batches, true, plan.signal_detector.dead_time_ns);
  r.idler.tags = finish_stream(batches, false, plan.idler_detector.dead_time_ns);
  return r;
}

}  // namespace sagnac
