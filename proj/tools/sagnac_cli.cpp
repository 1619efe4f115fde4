// Command-line front end: one subcommand per experiment, config file plus
// flag overrides, CSV/JSON outputs and a manifest in the output directory.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sagnac/config.hpp"
#include "sagnac/error.hpp"
#include "sagnac/experiments.hpp"

namespace fs = std::filesystem;
using namespace sagnac;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  bool dump_tags = false;
  std::optional<std::string> preset;
  std::optional<std::string> state;
};

ExperimentConfig resolve(ExperimentKind kind, const Common& c) {
  // Precedence: built-in defaults < config file < command-line flags.
  ExperimentConfig cfg = default_config(kind);
  if (!c.config.empty()) cfg = load_config(c.config, cfg);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  if (c.threads) cfg.threads = *c.threads;
  if (c.dump_tags) cfg.dump_tags = true;
  if (c.preset) {
    const auto keep = cfg.switching.pattern;
    cfg.switching.preset = *c.preset;
    cfg.switching.pattern = preset_pattern(*c.preset);
    cfg.switching.pattern.repetition_rate_hz = keep.repetition_rate_hz;
    cfg.switching.pattern.electrical_duty = keep.electrical_duty;
    cfg.switching.pattern.optical_duty = keep.optical_duty;
    cfg.switching.pattern.delta_t_ps = keep.delta_t_ps;
  }
  if (c.state) cfg.tomo.state = *c.state;
  cfg.validate();
  return cfg;
}

class Outputs {
 public:
  explicit Outputs(const ExperimentConfig& cfg) : cfg_(cfg) { fs::create_directories(cfg.out_dir); }

  std::ofstream open(const std::string& name) {
    const fs::path p = cfg_.out_dir / name;
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    names_.push_back(name);
    return os;
  }

  void json(const std::string& name, const nlohmann::json& j) { open(name) << j.dump(2) << '\n'; }

  void finish(const std::string& command) {
    std::ofstream os(cfg_.out_dir / "manifest.json");
    os << make_manifest(cfg_, command, names_).dump(2) << '\n';
    std::cout << "wrote " << names_.size() << " file(s) and manifest.json to " << cfg_.out_dir.string() << '\n';
  }

 private:
  const ExperimentConfig& cfg_;
  std::vector<std::string> names_;
};

nlohmann::json fit_json(const PowerLawFit& f) {
  return {{"exponent", f.exponent},
          {"exponent_sigma", f.exponent_sigma},
          {"prefactor", f.prefactor},
          {"log_prefactor_sigma", f.log_prefactor_sigma}};
}

nlohmann::json car_params_json(const CarModelParams& p) {
  return {{"gamma_combined", p.gamma_combined}, {"gamma_noise", p.gamma_noise}, {"eta_s", p.eta_s},
          {"eta_i", p.eta_i},                   {"d_s", p.d_s},                 {"d_i", p.d_i}};
}

void cmd_sweep_power(const Common& c) {
  const auto cfg = resolve(ExperimentKind::power_sweep, c);
  const auto res = run_power_sweep(cfg);
  Outputs out(cfg);
  std::vector<SweepRow> rows;
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t k = 0; k < res.series.size(); ++k) {
    const auto& s = res.series[k];
    rows.insert(rows.end(), s.rows.begin(), s.rows.end());
    nlohmann::json brightness = nlohmann::json::array();
    for (const auto& r : s.rows)
      brightness.push_back({{"P_in_dBm", r.p_in_dbm}, {"cps_per_nm", r.coincidences_cps / cfg.source.signal.bandwidth_nm}});
    summary.push_back({{"series", s.label}, {"fit", fit_json(res.fits[k])}, {"brightness", brightness}});
    std::cout << s.label << ": exponent " << res.fits[k].exponent << " +- " << res.fits[k].exponent_sigma << '\n';
  }
  auto csv = out.open("power_sweep.csv");
  write_sweep_csv(csv, rows);
  csv.close();
  out.json("power_sweep.json", summary);
  out.finish("sweep-power");
}

void cmd_sweep_car(const Common& c) {
  const auto cfg = resolve(ExperimentKind::car_sweep, c);
  const auto res = run_car_sweep(cfg);
  Outputs out(cfg);
  std::vector<SweepRow> rows;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& r : res) {
    rows.insert(rows.end(), r.series.rows.begin(), r.series.rows.end());
    nlohmann::json j{{"series", r.series.label},
                     {"simulated_peak", {{"power_mw", r.simulated_peak_mw}, {"car", r.simulated_peak_car}}}};
    if (r.fit_ok) {
      j["fit"] = car_params_json(r.fit.params);
      j["fit_residual_norm"] = r.fit.residual_norm;
      j["fitted_peak"] = {{"power_mw", r.fitted_peak_mw}, {"car", r.fitted_peak_car}};
      std::cout << r.series.label << ": peak CAR " << r.fitted_peak_car << " at " << r.fitted_peak_mw << " mW\n";
    } else {
      j["fit_error"] = r.fit_error;
      std::cout << r.series.label << ": fit failed (" << r.fit_error << ")\n";
    }
    summary.push_back(j);
  }
  auto csv = out.open("car_sweep.csv");
  write_sweep_csv(csv, rows);
  csv.close();
  out.json("car_sweep.json", summary);
  out.finish("sweep-car");
}

void cmd_visibility(const Common& c) {
  const auto cfg = resolve(ExperimentKind::visibility, c);
  const auto res = run_visibility(cfg);
  Outputs out(cfg);
  auto csv = out.open("visibility.csv");
  write_sweep_csv(csv, {res.row});
  csv.close();
  auto hist = out.open("histogram.csv");
  write_histogram_csv(hist, res.histogram);
  hist.close();
  out.json("visibility.json", {{"V_HV", res.hv.value},
                               {"V_HV_sigma", res.hv.sigma},
                               {"V_DA", res.da.value},
                               {"V_DA_sigma", res.da.sigma},
                               {"F_witness", res.witness}});
  std::cout << "V_HV " << res.hv.value << " +- " << res.hv.sigma << ", V_DA " << res.da.value << " +- "
            << res.da.sigma << ", F >= " << res.witness << '\n';
  out.finish("visibility");
}

void cmd_tomo(const Common& c) {
  const auto cfg = resolve(ExperimentKind::tomography, c);
  const auto res = run_tomo(cfg);
  Outputs out(cfg);
  auto csv = out.open("tomography.csv");
  write_csv(csv, res.record);
  csv.close();
  out.json("density_matrix.json", to_json(res.mle.rho));
  out.json("tomography_report.json", res.report);
  for (const auto& w : res.mle.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << res.name << ": fidelity " << res.target_fidelity << '\n';
  out.finish("tomo");
}

void cmd_switch(const Common& c) {
  const auto cfg = resolve(ExperimentKind::switching, c);
  const auto res = run_switch_experiment(cfg);
  Outputs out(cfg);
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : res) {
    auto csv = out.open("tomography_" + r.name + ".csv");
    write_csv(csv, r.record);
    reports.push_back(r.report);
    for (const auto& w : r.mle.warnings) std::cerr << "warning (" << r.name << "): " << w << '\n';
    std::cout << r.name << ": theta " << r.theta << " rad, fidelity " << r.target_fidelity << '\n';
  }
  out.json("switch_report.json", reports);
  out.finish("switch");
}

void cmd_noise(const Common& c) {
  const auto cfg = resolve(ExperimentKind::noise_floor, c);
  const auto res = run_noise_floor(cfg);
  Outputs out(cfg);
  auto csv = out.open("noise_floor.csv");
  write_sweep_csv(csv, res.series.rows);
  csv.close();
  out.json("noise_floor.json", {{"series", res.series.label}, {"singles_fit", fit_json(res.singles_fit)}});
  std::cout << "noise singles exponent " << res.singles_fit.exponent << " +- " << res.singles_fit.exponent_sigma
            << '\n';
  out.finish("noise");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber-Sagnac entangled photon source simulator"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "top-level seed");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--dump-tags", common.dump_tags, "write binary time-tag files");
  };

  struct Entry {
    const char* name;
    const char* help;
    void (*run)(const Common&);
  };
  const Entry entries[] = {
      {"sweep-power", "coincidences versus pump power, power-law fit", cmd_sweep_power},
      {"sweep-car", "CAR versus pump power, model fit and peak", cmd_sweep_car},
      {"visibility", "H/V and D/A visibilities and fidelity witness", cmd_visibility},
      {"tomo", "16-setting tomography with MLE reconstruction", cmd_tomo},
      {"switch", "phase-switched states, gated tomography per state", cmd_switch},
      {"noise", "Raman noise floor with the pair process off", cmd_noise},
  };
  std::vector<std::pair<CLI::App*, void (*)(const Common&)>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub);
    subs.emplace_back(sub, e.run);
  }
  subs[3].first->add_option("--state", common.state, "phi+, phi-, i+ or i-");
  subs[4].first->add_option("--preset", common.preset, "phi+, phi-, i+, i- or cycle");

  CLI11_PARSE(app, argc, argv);
  try {
    for (const auto& [sub, run] : subs)
      if (*sub) run(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
