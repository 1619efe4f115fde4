#include "sagnac/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "sagnac/error.hpp"

namespace sagnac {

namespace pt = boost::property_tree;

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::power_sweep: return "power-sweep";
    case ExperimentKind::car_sweep: return "car-sweep";
    case ExperimentKind::visibility: return "visibility";
    case ExperimentKind::tomography: return "tomography";
    case ExperimentKind::switching: return "switch";
    case ExperimentKind::noise_floor: return "noise-floor";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  source.validate();
  detector.validate();
  if (!(duration_s > 0.0)) throw InvalidArgument("run duration must be > 0");
  if (!(coincidence_window_ps > 0.0)) throw InvalidArgument("coincidence window must be > 0");
  if (threads == 0) throw InvalidArgument("threads must be >= 1");
  if (side_peaks < 1) throw InvalidArgument("side_peaks must be >= 1");
  const bool sweep = kind == ExperimentKind::power_sweep || kind == ExperimentKind::car_sweep ||
                     kind == ExperimentKind::noise_floor;
  if (sweep) {
    if (grid.powers_dbm.empty()) throw InvalidArgument("sweep grid has no powers");
    if (grid.duties.empty() && !grid.include_cw) throw InvalidArgument("sweep grid has no pump configuration");
    for (double d : grid.duties)
      if (!(d > 0.0 && d <= 1.0)) throw InvalidArgument("sweep duty cycles must be in (0, 1]");
  }
  if (kind == ExperimentKind::tomography || kind == ExperimentKind::switching) {
    if (!(tomo.seconds > 0.0) || tomo.samples < 1) throw InvalidArgument("invalid tomography integration");
    if (tomo.mode == TomoMode::analytic && !(tomo.rate_cps > 0.0)) throw InvalidArgument("tomography rate must be > 0");
  }
  if (kind == ExperimentKind::switching) {
    switching.pattern.validate();
    switching.modulator.validate();
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::power_sweep:
      c.grid.powers_dbm = {-3.0, -1.5, 0.0, 1.5, 3.0};
      c.duration_s = 30.0;
      c.grid.duties = {0.09, 0.25, 0.49};
      c.grid.include_cw = true;
      break;
    case ExperimentKind::car_sweep:
      c.grid.powers_dbm = {-6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0, 15.0};
      c.duration_s = 10.0;
      c.side_peaks = 50;
      c.grid.duties = {0.09, 0.25, 0.49};
      c.grid.include_cw = true;
      break;
    case ExperimentKind::noise_floor:
      c.source.conversion.gamma_spdc = 0.0;
      c.grid.powers_dbm = {0.0, 3.0, 6.0, 9.0, 12.0};
      c.grid.duties = {0.09};
      break;
    case ExperimentKind::visibility:
      c.source.pump.average_power_mw = 5.0;
      c.state_noise.dephasing = 0.006;
      break;
    case ExperimentKind::tomography:
      c.source.pump.average_power_mw = 5.0;
      c.state_noise.dephasing = 0.006;
      break;
    case ExperimentKind::switching:
      break;
  }
  return c;
}

namespace {

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item.substr(b), &used));
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad number in list " + key + ": " + item);
    }
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidArgument("bad boolean for " + key + ": " + v);
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <class Fn>
  void on(const std::string& section, const std::string& key, Fn&& apply) {
    known_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return;
    try {
      apply(*v);
    } catch (const InvalidArgument&) {
      throw;
    } catch (const std::exception&) {
      throw InvalidArgument("bad value for " + section + "." + key + ": " + *v);
    }
  }

  void number(const std::string& section, const std::string& key, double& dst) {
    on(section, key, [&](const std::string& v) {
      std::size_t used = 0;
      dst = std::stod(v, &used);
      if (v.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(v);
    });
  }

  void reject_unknown() const {
    for (const auto& [section, keys] : tree_) {
      if (keys.empty() && !keys.data().empty()) throw InvalidArgument("config key outside a section: " + section);
      for (const auto& [key, value] : keys)
        if (!known_.count(section + "." + key)) throw InvalidArgument("unknown config key: " + section + "." + key);
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> known_;
};

}  // namespace

ExperimentConfig parse_config(std::string_view text, ExperimentConfig c) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(std::string("config parse error: ") + e.what());
  }
  Reader r(tree);
  auto& pump = c.source.pump;
  auto& conv = c.source.conversion;

  r.on("pump", "mode", [&](const std::string& v) {
    if (v == "cw") {
      pump.mode = PumpMode::cw;
      pump.duty_cycle = 1.0;
    } else if (v == "pulsed") {
      pump.mode = PumpMode::pulsed;
    } else {
      throw InvalidArgument("pump.mode must be cw or pulsed");
    }
  });
  r.on("pump", "power_dbm", [&](const std::string& v) { pump.average_power_mw = dbm_to_mw(std::stod(v)); });
  r.number("pump", "power_mw", pump.average_power_mw);
  r.number("pump", "rep_rate_ghz", pump.repetition_rate_ghz);
  r.number("pump", "duty", pump.duty_cycle);
  r.number("pump", "wavelength_nm", pump.center_wavelength_nm);

  r.number("conversion", "gamma_shg", conv.gamma_shg);
  r.number("conversion", "gamma_spdc", conv.gamma_spdc);
  r.number("conversion", "gamma_noise", conv.gamma_noise);
  r.number("conversion", "cw_noise_multiplier", conv.cw_noise_multiplier);
  r.on("conversion", "split", [&](const std::string& v) {
    const double a = std::stod(v);
    conv.pump_split = {a, 1.0 - a};
  });
  r.number("conversion", "wg2_shg_ratio", c.source.wg2_shg_ratio);
  r.number("conversion", "shg_path_loss_db", c.source.shg_path_loss_db);

  r.on("loss", "stages_db", [&](const std::string& v) {
    const auto values = parse_list(v, "loss.stages_db");
    c.source.loss.stages.clear();
    for (std::size_t k = 0; k < values.size(); ++k) c.source.loss.stages.push_back({"stage" + std::to_string(k), values[k]});
  });
  r.number("loss", "signal_imbalance_db", c.source.loss.signal_imbalance_db);
  r.number("loss", "idler_imbalance_db", c.source.loss.idler_imbalance_db);

  r.number("channels", "signal_nm", c.source.signal.center_nm);
  r.number("channels", "idler_nm", c.source.idler.center_nm);
  r.on("channels", "bandwidth_nm", [&](const std::string& v) {
    c.source.signal.bandwidth_nm = c.source.idler.bandwidth_nm = std::stod(v);
  });

  r.number("detector", "efficiency", c.detector.efficiency);
  r.number("detector", "dark_rate_hz", c.detector.dark_rate_hz);
  r.number("detector", "dead_time_ns", c.detector.dead_time_ns);
  r.number("detector", "jitter_ps", c.detector.jitter_rms_ps);

  r.number("run", "duration_s", c.duration_s);
  r.number("run", "window_ps", c.coincidence_window_ps);
  r.on("run", "side_peaks", [&](const std::string& v) { c.side_peaks = std::stoi(v); });
  r.on("run", "seed", [&](const std::string& v) { c.seed = std::stoull(v); });
  r.on("run", "threads", [&](const std::string& v) { c.threads = static_cast<unsigned>(std::stoul(v)); });
  r.on("run", "dump_tags", [&](const std::string& v) { c.dump_tags = parse_bool(v, "run.dump_tags"); });
  r.on("run", "out", [&](const std::string& v) { c.out_dir = v; });

  r.number("state", "white", c.state_noise.white);
  r.number("state", "dephasing", c.state_noise.dephasing);

  r.on("sweep", "powers_dbm", [&](const std::string& v) { c.grid.powers_dbm = parse_list(v, "sweep.powers_dbm"); });
  r.on("sweep", "duties", [&](const std::string& v) { c.grid.duties = parse_list(v, "sweep.duties"); });
  r.on("sweep", "include_cw", [&](const std::string& v) { c.grid.include_cw = parse_bool(v, "sweep.include_cw"); });

  r.on("tomo", "mode", [&](const std::string& v) {
    if (v == "tags")
      c.tomo.mode = TomoMode::tags;
    else if (v == "analytic")
      c.tomo.mode = TomoMode::analytic;
    else
      throw InvalidArgument("tomo.mode must be tags or analytic");
  });
  r.number("tomo", "seconds", c.tomo.seconds);
  r.on("tomo", "samples", [&](const std::string& v) { c.tomo.samples = std::stoi(v); });
  r.number("tomo", "rate_cps", c.tomo.rate_cps);
  r.on("tomo", "state", [&](const std::string& v) { c.tomo.state = v; });

  auto& sw = c.switching;
  r.on("eom", "preset", [&](const std::string& v) {
    const auto keep = sw.pattern;
    sw.preset = v;
    sw.pattern = preset_pattern(v);
    sw.pattern.repetition_rate_hz = keep.repetition_rate_hz;
    sw.pattern.electrical_duty = keep.electrical_duty;
    sw.pattern.optical_duty = keep.optical_duty;
    sw.pattern.delta_t_ps = keep.delta_t_ps;
  });
  r.on("eom", "rep_rate_mhz", [&](const std::string& v) { sw.pattern.repetition_rate_hz = std::stod(v) * 1e6; });
  r.number("eom", "electrical_duty", sw.pattern.electrical_duty);
  r.number("eom", "optical_duty", sw.pattern.optical_duty);
  r.number("eom", "delay_ps", sw.pattern.delta_t_ps);
  r.on("eom", "target", [&](const std::string& v) {
    if (v == "early")
      sw.pattern.target = TargetPulse::early;
    else if (v == "late")
      sw.pattern.target = TargetPulse::late;
    else
      throw InvalidArgument("eom.target must be early or late");
  });
  r.on("eom", "voltages_mv", [&](const std::string& v) {
    sw.pattern.slots.clear();
    for (double mv : parse_list(v, "eom.voltages_mv")) sw.pattern.slots.push_back({mv, 1});
    sw.preset = "custom";
  });
  r.number("eom", "v_pi", sw.modulator.v_pi);
  r.number("eom", "gain_db", sw.modulator.amplifier_gain_db);
  r.number("eom", "insertion_loss_db", sw.modulator.insertion_loss_db);
  r.number("eom", "pump_power_dbm", sw.pump_power_dbm);

  r.reject_unknown();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& s = c.source;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : s.loss.stages) stages.push_back({{"name", st.name}, {"loss_db", st.loss_db}});
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& sl : c.switching.pattern.slots) slots.push_back({{"voltage_mv", sl.voltage_mv}, {"periods", sl.periods}});
  return {
      {"experiment", experiment_name(c.kind)},
      {"pump",
       {{"mode", s.pump.mode == PumpMode::cw ? "cw" : "pulsed"},
        {"power_mw", s.pump.average_power_mw},
        {"rep_rate_ghz", s.pump.repetition_rate_ghz},
        {"duty", s.pump.duty_cycle},
        {"wavelength_nm", s.pump.center_wavelength_nm}}},
      {"conversion",
       {{"gamma_shg", s.conversion.gamma_shg},
        {"gamma_spdc", s.conversion.gamma_spdc},
        {"gamma_noise", s.conversion.gamma_noise},
        {"split", s.conversion.pump_split.first},
        {"cw_noise_multiplier", s.conversion.cw_noise_multiplier},
        {"wg2_shg_ratio", s.wg2_shg_ratio},
        {"shg_path_loss_db", s.shg_path_loss_db}}},
      {"loss",
       {{"stages", stages},
        {"signal_imbalance_db", s.loss.signal_imbalance_db},
        {"idler_imbalance_db", s.loss.idler_imbalance_db}}},
      {"channels",
       {{"signal_nm", s.signal.center_nm},
        {"idler_nm", s.idler.center_nm},
        {"signal_bandwidth_nm", s.signal.bandwidth_nm},
        {"idler_bandwidth_nm", s.idler.bandwidth_nm}}},
      {"detector",
       {{"efficiency", c.detector.efficiency},
        {"dark_rate_hz", c.detector.dark_rate_hz},
        {"dead_time_ns", c.detector.dead_time_ns},
        {"jitter_ps", c.detector.jitter_rms_ps}}},
      {"run",
       {{"duration_s", c.duration_s},
        {"window_ps", c.coincidence_window_ps},
        {"side_peaks", c.side_peaks},
        {"seed", c.seed},
        {"threads", c.threads}}},
      {"state", {{"white", c.state_noise.white}, {"dephasing", c.state_noise.dephasing}}},
      {"sweep", {{"powers_dbm", c.grid.powers_dbm}, {"duties", c.grid.duties}, {"include_cw", c.grid.include_cw}}},
      {"tomo",
       {{"mode", c.tomo.mode == TomoMode::tags ? "tags" : "analytic"},
        {"seconds", c.tomo.seconds},
        {"samples", c.tomo.samples},
        {"rate_cps", c.tomo.rate_cps},
        {"state", c.tomo.state}}},
      {"eom",
       {{"preset", c.switching.preset},
        {"rep_rate_hz", c.switching.pattern.repetition_rate_hz},
        {"electrical_duty", c.switching.pattern.electrical_duty},
        {"optical_duty", c.switching.pattern.optical_duty},
        {"delay_ps", c.switching.pattern.delta_t_ps},
        {"target", c.switching.pattern.target == TargetPulse::early ? "early" : "late"},
        {"slots", slots},
        {"v_pi", c.switching.modulator.v_pi},
        {"gain_db", c.switching.modulator.amplifier_gain_db},
        {"insertion_loss_db", c.switching.modulator.insertion_loss_db},
        {"pump_power_dbm", c.switching.pump_power_dbm}}},
  };
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Seed and thread count do not change the physics; keep them out of the hash.
  nlohmann::json j = to_json(cfg);
  j["run"].erase("seed");
  j["run"].erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sagnac
