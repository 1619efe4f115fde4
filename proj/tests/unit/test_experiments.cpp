#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sagnac/experiments.hpp"

using namespace sagnac;

TEST(Experiments, ZeroPumpGivesZeroRow) {
  auto cfg = default_config(ExperimentKind::power_sweep);
  cfg.detector.dark_rate_hz = 0.0;
  cfg.duration_s = 0.01;
  SourceConfig src = cfg.source;
  src.pump.average_power_mw = 0.0;
  const auto row = measure_point(cfg, src, 1);
  EXPECT_EQ(row.coincidences_cps, 0.0);
  EXPECT_EQ(row.singles_signal_cps, 0.0);
  EXPECT_EQ(row.singles_idler_cps, 0.0);
}

TEST(Experiments, PulsedBrighterThanCwAtEqualPower) {
  auto cfg = default_config(ExperimentKind::power_sweep);
  cfg.duration_s = 0.5;
  cfg.detector.dead_time_ns = 0.0;
  cfg.grid.powers_dbm = {6.0, 8.0, 10.0};
  cfg.grid.duties = {0.09};
  cfg.grid.include_cw = true;
  const auto r = run_power_sweep(cfg);
  ASSERT_EQ(r.series.size(), 2u);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_GT(r.series[0].rows[k].coincidences_cps, r.series[1].rows[k].coincidences_cps);
  for (const auto& f : r.fits) EXPECT_NEAR(f.exponent, 2.0, 0.15);
}

TEST(Experiments, NoNoiseCarFallsWithPower) {
  auto cfg = default_config(ExperimentKind::car_sweep);
  cfg.source.conversion.gamma_noise = 0.0;
  cfg.detector.dark_rate_hz = 0.0;
  CarModelParams p = CarModelParams::from_source(cfg.source, 0.0);
  const auto pump = PumpConfig::pulsed(1.0, 1.0, 0.25);
  double prev = INFINITY;
  for (double dbm = -10; dbm <= 15; dbm += 1) {
    const double c = car_model(p, dbm_to_mw(dbm), pump);
    EXPECT_LT(c, prev);
    prev = c;
  }
  cfg.duration_s = 0.2;
  cfg.side_peaks = 20;
  cfg.detector.dead_time_ns = 0.0;
  cfg.grid.powers_dbm = {12.0, 16.0, 20.0};
  cfg.grid.duties = {0.25};
  cfg.grid.include_cw = false;
  const auto res = run_car_sweep(cfg);
  const auto& rows = res.front().series.rows;
  EXPECT_GT(rows[0].car, rows[1].car);
  EXPECT_GT(rows[1].car, rows[2].car);
}

TEST(Experiments, TomoAnalyticMode) {
  auto cfg = default_config(ExperimentKind::tomography);
  cfg.tomo.mode = TomoMode::analytic;
  cfg.tomo.state = "i-";
  cfg.state_noise = {};
  cfg.tomo.rate_cps = 1e6;
  const auto r = run_tomo(cfg);
  EXPECT_GT(r.target_fidelity, 0.99);
  EXPECT_TRUE(r.mle.rho.is_physical());
}

TEST(Experiments, SwitchMismatchedTargetIsLow) {
  auto cfg = default_config(ExperimentKind::switching);
  cfg.tomo.mode = TomoMode::analytic;
  cfg.tomo.rate_cps = 1e6;
  cfg.switching.preset = "phi-";
  cfg.switching.pattern = preset_pattern("phi-");
  const auto res = run_switch_experiment(cfg);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_LE(fidelity_to_pure(res[0].mle.rho, states::phi_plus()), 0.1);
  EXPECT_GE(res[0].target_fidelity, 0.999);
}

TEST(Experiments, SwitchNoiseFreeLimit) {
  auto cfg = default_config(ExperimentKind::switching);
  cfg.tomo.mode = TomoMode::analytic;
  cfg.tomo.rate_cps = 1e8;
  const auto res = run_switch_experiment(cfg);
  ASSERT_EQ(res.size(), 4u);
  for (const auto& r : res) EXPECT_GE(r.target_fidelity, 0.999) << r.name;
}

TEST(Experiments, CsvSchemas) {
  std::ostringstream os;
  SweepRow row;
  row.p_in_dbm = 1.5;
  write_sweep_csv(os, {row});
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), kSweepCsvHeader);
  Histogram h;
  h.bin_ps = 50;
  h.counts = {1, 2, 3};
  h.center_index = 1;
  std::ostringstream hs;
  write_histogram_csv(hs, h);
  EXPECT_EQ(hs.str(), "dt_ps,counts\n-50,1\n0,2\n50,3\n");
}

TEST(Experiments, ManifestCarriesReproductionData) {
  const auto cfg = default_config(ExperimentKind::visibility);
  const auto m = make_manifest(cfg, "visibility", {"a.csv"});
  EXPECT_EQ(m["config_hash"], config_hash(cfg));
  EXPECT_EQ(m["seed"], cfg.seed);
  EXPECT_EQ(m["version"], library_version());
  EXPECT_TRUE(m.contains("config"));
}

TEST(Experiments, SweepReproducibleAcrossThreads) {
  auto cfg = default_config(ExperimentKind::power_sweep);
  cfg.duration_s = 0.02;
  cfg.grid.powers_dbm = {3.0, 6.0};
  cfg.grid.duties = {0.49};
  cfg.grid.include_cw = false;
  cfg.threads = 1;
  const auto a = run_power_sweep(cfg);
  cfg.threads = 4;
  const auto b = run_power_sweep(cfg);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(a.series[0].rows[k].coincidences_cps, b.series[0].rows[k].coincidences_cps);
    EXPECT_EQ(a.series[0].rows[k].singles_signal_cps, b.series[0].rows[k].singles_signal_cps);
  }
}
