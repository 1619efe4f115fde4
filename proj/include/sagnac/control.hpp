#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sagnac/montecarlo.hpp"
#include "sagnac/qstate.hpp"

namespace sagnac {

struct ModulatorParams {
  double v_pi = 4.0;  // V at the modulator
  /// Voltage gain of the RF amplifier. The default maps a 250 mV generator
  /// pulse onto V_pi.
  double amplifier_gain_db = gain_for_v_pi(0.25, 4.0);
  double insertion_loss_db = 3.5;
  double band_min_hz = 50e3;
  double band_max_hz = 2e9;

  void validate() const;

  /// Gain that turns a generator voltage into exactly v_pi.
  static double gain_for_v_pi(double generator_v, double v_pi);
};

/// Phase in (-pi, pi] written by a generator voltage after amplification.
double voltage_to_phase(double generator_v, const ModulatorParams& params);

enum class TargetPulse { early, late };

struct EomSlot {
  double voltage_mv = 0.0;  // generator peak voltage
  std::uint64_t periods = 1;
};

/// Electrical drive of the phase modulator, one rectangular pulse per
/// optical period aimed at one of the two delayed SHG pulses.
struct EomPulsePattern {
  double repetition_rate_hz = 100e6;
  double electrical_duty = 0.05;
  double optical_duty = 0.01;
  TargetPulse target = TargetPulse::late;
  /// Separation of the two SHG pulses at the modulator.
  double delta_t_ps = 2000.0;
  std::vector<EomSlot> slots{{0.0, 1}};

  void validate() const;
  double period_ps() const { return 1e12 / repetition_rate_hz; }
  double electrical_width_ps() const { return electrical_duty * period_ps(); }
  double optical_width_ps() const { return optical_duty * period_ps(); }
};

struct ScheduledState {
  TwoQubitPure state;
  double theta = 0.0;
  std::uint64_t windows = 1;
};

struct StateSchedule {
  std::vector<ScheduledState> entries;

  void validate() const;
  std::uint64_t cycle_windows() const;
  std::vector<PhaseSlot> phase_slots() const;
};

/// theta = +phi for the early pulse and -phi for the late one. Throws when the
/// electrical pulse would also hit the other SHG pulse.
StateSchedule pattern_to_state_sequence(const EomPulsePattern& pattern, const ModulatorParams& mod, double alpha,
                                        double beta);

/// Whether every electrical pulse fully covers its optical target pulse.
bool modulation_covers_target(const EomPulsePattern& pattern);

/// One plan per distinct phase, gated to the schedule entries carrying it.
/// Together the plans' gates cover every schedule entry exactly once.
std::vector<RunPlan> schedule_verification_plan(const StateSchedule& schedule, const RunPlan& base);

/// Named presets phi+, phi-, i+, i- (single state) and cycle (all four).
EomPulsePattern preset_pattern(std::string_view name);
std::vector<std::string> preset_names();

/// Target state each single-state preset should produce.
TwoQubitPure preset_target(std::string_view name);

}  // namespace sagnac
