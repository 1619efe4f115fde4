#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sagnac/error.hpp"
#include "sagnac/model.hpp"

using namespace sagnac;

namespace {

ConversionParams conv_with(double shg, double spdc = 1.0, double noise = 1.0) {
  ConversionParams c;
  c.gamma_shg = shg;
  c.gamma_spdc = spdc;
  c.gamma_noise = noise;
  return c;
}

// Composite Simpson over a Gaussian with the given FWHM.
double simpson_gauss(double center, double fwhm, double a, double b, int n = 20000) {
  if (b <= a) return 0.0;
  auto f = [&](double x) {
    const double u = (x - center) / fwhm;
    return std::exp(-4.0 * std::log(2.0) * u * u);
  };
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST(PumpConfig, RejectsInvalid) {
  EXPECT_THROW(PumpConfig::pulsed(-1.0, 1.0, 0.5).validate(), InvalidArgument);
  EXPECT_THROW(PumpConfig::pulsed(1.0, 1.0, 0.0).validate(), InvalidArgument);
  EXPECT_THROW(PumpConfig::pulsed(1.0, 1.0, 1.5).validate(), InvalidArgument);
  EXPECT_THROW(PumpConfig::pulsed(1.0, 0.0, 0.5).validate(), InvalidArgument);
  EXPECT_NO_THROW(PumpConfig::cw(0.0).validate());
  EXPECT_DOUBLE_EQ(PumpConfig::pulsed(1.0, 1.0, 0.09).period_ps(), 1000.0);
  EXPECT_THROW(PumpConfig::cw(1.0).period_ps(), InvalidArgument);
}

TEST(ConversionParams, RejectsInvalid) {
  auto c = conv_with(-1.0);
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = conv_with(1.0);
  c.pump_split = {0.6, 0.6};
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(ShgPower, TenPercentAt300mW) {
  EXPECT_NEAR(shg_average_power(PumpConfig::cw(300.0), conv_with(0.1 / 300.0)), 30.0, 1e-12);
}

TEST(ShgPower, ZeroInputAndDutyScaling) {
  const auto c = conv_with(0.1 / 300.0);
  EXPECT_EQ(shg_average_power(PumpConfig::pulsed(0.0, 1.0, 0.09), c), 0.0);
  EXPECT_NEAR(shg_average_power(PumpConfig::pulsed(300.0, 1.0, 0.5), c), 60.0, 1e-12);
}

TEST(ShgPower, ExactlyQuadratic) {
  const auto c = conv_with(0.0037);
  for (double p : {0.1, 1.0, 7.3, 250.0})
    for (double k : {0.0, 0.5, 2.0, 3.7}) {
      const double f1 = shg_average_power(PumpConfig::pulsed(p, 1.0, 0.25), c);
      const double fk = shg_average_power(PumpConfig::pulsed(k * p, 1.0, 0.25), c);
      EXPECT_NEAR(fk, k * k * f1, 1e-12 * std::max(1.0, fk));
    }
}

TEST(MeanPairs, ScalingLaws) {
  const auto c = conv_with(0.001, 1e6);
  const auto p1 = PumpConfig::pulsed(2.0, 1.0, 0.2);
  EXPECT_EQ(mean_pairs_per_window(PumpConfig::pulsed(0.0, 1.0, 0.2), c, 500.0), 0.0);
  const double mu = mean_pairs_per_window(p1, c, 500.0);
  EXPECT_NEAR(mean_pairs_per_window(PumpConfig::pulsed(4.0, 1.0, 0.2), c, 500.0), 4.0 * mu, 1e-12 * mu);
  EXPECT_NEAR(mean_pairs_per_window(PumpConfig::pulsed(2.0, 1.0, 0.1), c, 500.0), 2.0 * mu, 1e-12 * mu);
  // Pulsed window is one period regardless of the coincidence window.
  EXPECT_DOUBLE_EQ(mean_pairs_per_window(p1, c, 123.0), mu);
  EXPECT_THROW(mean_pairs_per_window(p1, c, 0.0), InvalidArgument);
}

TEST(MeanNoise, LinearAndCwMultiplier) {
  const auto c = conv_with(0.001, 1.0, 2e5);
  const double n1 = mean_noise_per_window(PumpConfig::pulsed(1.5, 1.0, 0.09), c, 500.0);
  EXPECT_EQ(mean_noise_per_window(PumpConfig::pulsed(0.0, 1.0, 0.09), c, 500.0), 0.0);
  for (double k : {2.0, 0.3, 11.0})
    EXPECT_NEAR(mean_noise_per_window(PumpConfig::pulsed(1.5 * k, 1.0, 0.09), c, 500.0), k * n1, 1e-12 * k * n1);
  const double cw = mean_noise_per_window(PumpConfig::cw(1.5), c, 1000.0);
  EXPECT_NEAR(cw, 1.2 * n1, 1e-12);
}

TEST(Sfwm, FigureOfMerit) {
  EXPECT_EQ(sfwm_figure_of_merit({1.0, 0.01, 0.010}), 1e-4);
  EXPECT_EQ(sfwm_figure_of_merit({0.0, 0.01, 0.010}), 0.0);
  EXPECT_NEAR(sfwm_figure_of_merit({1.0, 0.1, 1.0}), 0.1, 1e-15);
}

TEST(Spectrum, HalfMaximumAtFwhm) {
  SpdcSpectrum s;
  EXPECT_DOUBLE_EQ(spectral_density(s, 1560.0, 1), 1.0);
  EXPECT_NEAR(spectral_density(s, 1560.0 + 29.0, 1), 0.5, 1e-12);
  EXPECT_NEAR(spectral_density(s, 1560.0 - 29.0, 1), 0.5, 1e-12);
  EXPECT_NEAR(spectral_density(s, 1560.0 + 34.0, 2), 0.5, 1e-12);
  EXPECT_NEAR(spectral_density(s, 1560.0 - 34.0, 2), 0.5, 1e-12);
  EXPECT_THROW(spectral_density(s, 1560.0, 3), InvalidArgument);
}

TEST(Conjugate, EnergyConservation) {
  EXPECT_NEAR(conjugate_wavelength(1560.0, 1560.0), 1560.0, 1e-9);
  const double oracle = 1.0 / (2.0 / 1560.0 - 1.0 / 1550.0);
  EXPECT_NEAR(conjugate_wavelength(1550.0, 1560.0), oracle, 1e-9);
  EXPECT_NEAR(conjugate_wavelength(1550.0, 1560.0), 1570.13, 0.01);
  for (double l : {1531.0, 1558.4, 1561.6, 1589.0})
    EXPECT_NEAR(conjugate_wavelength(conjugate_wavelength(l, 1560.0), 1560.0), l, 1e-9);
  EXPECT_THROW(conjugate_wavelength(700.0, 1560.0), InvalidArgument);
  EXPECT_THROW(conjugate_wavelength(0.0, 1560.0), InvalidArgument);
}

TEST(Overlap, MatchesNumericalIntegration) {
  SpdcSpectrum s;
  for (int wg : {1, 2}) {
    const double fwhm = s.fwhm_nm[wg - 1];
    const double total = simpson_gauss(1560.0, fwhm, 1530.0, 1590.0);
    for (double bw : {1.0, 3.2, 8.0}) {
      SpectralChannel ch{1558.4, bw, ChannelRole::signal};
      const double oracle = simpson_gauss(1560.0, fwhm, 1558.4 - bw / 2, 1558.4 + bw / 2) / total;
      EXPECT_NEAR(channel_overlap_fraction(ch, s, wg), oracle, 1e-9);
    }
  }
}

TEST(Overlap, LimitsAndMonotonicity) {
  SpdcSpectrum s;
  EXPECT_EQ(channel_overlap_fraction({1558.4, 0.0, ChannelRole::signal}, s, 1), 0.0);
  EXPECT_GE(channel_overlap_fraction({1560.0, 60.0, ChannelRole::signal}, s, 1), 0.95);
  double prev = 0.0;
  for (double bw = 0.5; bw <= 20.0; bw += 0.5) {
    const double f = channel_overlap_fraction({1558.4, bw, ChannelRole::signal}, s, 2);
    EXPECT_GT(f, prev);
    prev = f;
  }
  EXPECT_GT(channel_overlap_fraction({1558.4, 8.0, ChannelRole::signal}, s, 1),
            channel_overlap_fraction({1558.4, 1.0, ChannelRole::signal}, s, 1));
}

TEST(LossChain, ReferenceTotals) {
  const auto c = LossChain::reference();
  EXPECT_NEAR(c.average_db(), 12.85, 1e-12);
  EXPECT_NEAR(chain_efficiency(c, ChannelRole::signal), std::pow(10.0, -1.18), 1e-12);
  EXPECT_NEAR(chain_efficiency(c, ChannelRole::signal), 0.066, 0.0005);
  EXPECT_NEAR(chain_efficiency(c, ChannelRole::idler), std::pow(10.0, -1.39), 1e-12);
  LossChain flat;
  flat.stages = c.stages;
  EXPECT_NEAR(chain_efficiency(flat, ChannelRole::signal), 0.0519, 0.0001);
  EXPECT_EQ(chain_efficiency(LossChain{}, ChannelRole::idler), 1.0);
}

TEST(LossChain, SplittingStageIsMultiplicative) {
  LossChain a;
  a.stages = {{"x", 3.7}, {"y", 1.1}};
  LossChain b;
  b.stages = {{"x1", 1.85}, {"x2", 1.85}, {"y", 1.1}};
  const double ea = chain_efficiency(a, ChannelRole::signal);
  EXPECT_NEAR(chain_efficiency(b, ChannelRole::signal), ea, 1e-12 * ea);
  a.stages.push_back({"bad", -1.0});
  EXPECT_THROW(chain_efficiency(a, ChannelRole::signal), InvalidArgument);
}

TEST(SourceConfig, BalancedSplitGivesEqualAmplitudes) {
  auto s = reference_source();
  s.wg2_shg_ratio = 1.0;
  s.spectrum.fwhm_nm = {60.0, 60.0};
  const auto [a, b] = s.state_amplitudes();
  EXPECT_NEAR(a, std::numbers::sqrt2 / 2, 1e-12);
  EXPECT_NEAR(a * a + b * b, 1.0, 1e-12);
}

TEST(SourceConfig, ShgPathLossScalesPairs) {
  auto s = reference_source();
  const double base = s.total_pairs(500.0);
  s.shg_path_loss_db = 3.0;
  EXPECT_NEAR(s.total_pairs(500.0), base * std::pow(10.0, -0.3), 1e-12 * base);
}
