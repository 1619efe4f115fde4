#include "sagnac/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sagnac/error.hpp"

namespace sagnac {

namespace {

constexpr double kPi = std::numbers::pi;

// Generator voltages of the four states when the late pulse is modulated:
// 0, +V_pi, -V_pi/2 and +V_pi/2 at the default gain.
constexpr double kPhiPlusMv = 0.0;
constexpr double kPhiMinusMv = 250.0;
constexpr double kPhiIPlusMv = -125.0;
constexpr double kPhiIMinusMv = 125.0;

double wrap(double x) {
  double y = std::remainder(x, 2.0 * kPi);  // [-pi, pi]
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

}  // namespace

double ModulatorParams::gain_for_v_pi(double generator_v, double v_pi) {
  if (!(generator_v > 0.0) || !(v_pi > 0.0)) throw InvalidArgument("voltages must be > 0");
  return 20.0 * std::log10(v_pi / generator_v);
}

void ModulatorParams::validate() const {
  if (!(v_pi > 0.0)) throw InvalidArgument("V_pi must be > 0");
  if (!std::isfinite(amplifier_gain_db)) throw InvalidArgument("amplifier gain must be finite");
  if (!(insertion_loss_db >= 0.0)) throw InvalidArgument("insertion loss must be >= 0");
  if (!(band_min_hz >= 0.0 && band_max_hz > band_min_hz)) throw InvalidArgument("invalid modulator band");
}

double voltage_to_phase(double generator_v, const ModulatorParams& params) {
  params.validate();
  const double v = generator_v * std::pow(10.0, params.amplifier_gain_db / 20.0);
  return wrap(kPi * v / params.v_pi);
}

void EomPulsePattern::validate() const {
  if (!(repetition_rate_hz > 0.0)) throw InvalidArgument("repetition rate must be > 0");
  if (!(electrical_duty > 0.0 && electrical_duty <= 1.0)) throw InvalidArgument("electrical duty must be in (0, 1]");
  if (!(optical_duty > 0.0 && optical_duty <= 1.0)) throw InvalidArgument("optical duty must be in (0, 1]");
  if (!(delta_t_ps > 0.0 && delta_t_ps < period_ps())) throw InvalidArgument("delay must be in (0, period)");
  if (slots.empty()) throw InvalidArgument("pulse pattern has no slots");
  for (const auto& s : slots) {
    if (!std::isfinite(s.voltage_mv)) throw InvalidArgument("slot voltage must be finite");
    if (s.periods == 0) throw InvalidArgument("slot must last at least one period");
  }
}

void StateSchedule::validate() const {
  if (entries.empty()) throw InvalidArgument("state schedule is empty");
  for (const auto& e : entries)
    if (e.windows == 0) throw InvalidArgument("schedule entry must last at least one window");
}

std::uint64_t StateSchedule::cycle_windows() const {
  std::uint64_t n = 0;
  for (const auto& e : entries) n += e.windows;
  return n;
}

std::vector<PhaseSlot> StateSchedule::phase_slots() const {
  std::vector<PhaseSlot> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({e.theta, e.windows});
  return out;
}

bool modulation_covers_target(const EomPulsePattern& p) {
  p.validate();
  return p.electrical_width_ps() >= p.optical_width_ps();
}

StateSchedule pattern_to_state_sequence(const EomPulsePattern& pattern, const ModulatorParams& mod, double alpha,
                                        double beta) {
  pattern.validate();
  mod.validate();
  // The electrical pulse is centered on its target; it must clear the other
  // SHG pulse or both directions pick up the phase.
  if (pattern.delta_t_ps < pattern.electrical_width_ps())
    throw InvalidArgument("modulation pulse overlaps both SHG pulses: delay " + std::to_string(pattern.delta_t_ps) +
                          " ps < electrical pulse " + std::to_string(pattern.electrical_width_ps()) + " ps");
  const double sign = pattern.target == TargetPulse::early ? 1.0 : -1.0;
  StateSchedule out;
  for (const auto& s : pattern.slots) {
    const double theta = wrap(sign * voltage_to_phase(s.voltage_mv * 1e-3, mod));
    out.entries.push_back({make_phase_state(alpha, beta, theta), theta, s.periods});
  }
  return out;
}

std::vector<RunPlan> schedule_verification_plan(const StateSchedule& schedule, const RunPlan& base) {
  schedule.validate();
  std::vector<RunPlan> plans;
  std::vector<double> phases;
  const auto slots = schedule.phase_slots();
  for (std::size_t k = 0; k < schedule.entries.size(); ++k) {
    const double theta = schedule.entries[k].theta;
    auto it = std::find_if(phases.begin(), phases.end(),
                           [&](double t) { return std::abs(wrap(t - theta)) < 1e-12; });
    if (it == phases.end()) {
      phases.push_back(theta);
      RunPlan p = base;
      p.schedule = slots;
      p.gate_entries = {k};
      plans.push_back(std::move(p));
    } else {
      plans[static_cast<std::size_t>(it - phases.begin())].gate_entries.push_back(k);
    }
  }
  return plans;
}

std::vector<std::string> preset_names() { return {"phi+", "phi-", "i+", "i-", "cycle"}; }

EomPulsePattern preset_pattern(std::string_view name) {
  EomPulsePattern p;
  p.target = TargetPulse::late;
  if (name == "phi+")
    p.slots = {{kPhiPlusMv, 1}};
  else if (name == "phi-")
    p.slots = {{kPhiMinusMv, 1}};
  else if (name == "i+")
    p.slots = {{kPhiIPlusMv, 1}};
  else if (name == "i-")
    p.slots = {{kPhiIMinusMv, 1}};
  else if (name == "cycle")
    p.slots = {{kPhiPlusMv, 1}, {kPhiMinusMv, 1}, {kPhiIPlusMv, 1}, {kPhiIMinusMv, 1}};
  else
    throw InvalidArgument("unknown preset: " + std::string(name));
  return p;
}

TwoQubitPure preset_target(std::string_view name) {
  if (name == "phi+") return states::phi_plus();
  if (name == "phi-") return states::phi_minus();
  if (name == "i+") return states::phi_i_plus();
  if (name == "i-") return states::phi_i_minus();
  throw InvalidArgument("no single target for preset: " + std::string(name));
}

}  // namespace sagnac
