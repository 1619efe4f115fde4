#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sagnac/error.hpp"
#include "sagnac/tomography.hpp"
#include "test_util.hpp"

using namespace sagnac;

namespace {

const TomographyEntry& entry(const TomographyRecord& r, const char* label) {
  for (const auto& e : r.entries)
    if (e.setting.label() == label) return e;
  throw std::runtime_error("missing setting");
}

}  // namespace

TEST(Tomography, DefaultSettingsAreComplete) {
  const auto s = default_settings();
  ASSERT_EQ(s.size(), 16u);
  EXPECT_EQ(s.front().label(), "HH");
  EXPECT_EQ(s.back().label(), "RR");
}

TEST(Simulate, ZeroTimeAndOrthogonalSetting) {
  const DensityMatrix phi(states::phi_plus());
  const auto z = simulate_tomography(phi, 4500.0, 0.0, 1);
  EXPECT_EQ(z.total_counts(), 0.0);
  const auto r = simulate_tomography(phi, 4500.0, 0.1, 2, 10);
  EXPECT_EQ(entry(r, "HV").counts, 0.0);
  EXPECT_EQ(entry(r, "HH").seconds, 1.0);
}

TEST(Simulate, CountMeanMatchesExpectation) {
  const DensityMatrix phi(states::phi_plus());
  EXPECT_NEAR(entry(expected_tomography(phi, 4500.0 * 0.1 * 10), "HH").counts, 2250.0, 1e-9);
  double sum = 0;
  const int reps = 200;
  for (int k = 0; k < reps; ++k) sum += entry(simulate_tomography(phi, 4500.0, 0.1, 100 + k, 10), "HH").counts;
  EXPECT_NEAR(sum / reps, 2250.0, 4 * std::sqrt(2250.0 / reps));
}

TEST(Simulate, SameSeedReproduces) {
  const DensityMatrix phi(states::phi_minus());
  const auto a = simulate_tomography(phi, 1e4, 0.1, 5, 3);
  const auto b = simulate_tomography(phi, 1e4, 0.1, 5, 3);
  for (std::size_t k = 0; k < a.entries.size(); ++k) EXPECT_EQ(a.entries[k].counts, b.entries[k].counts);
}

TEST(Linear, ExactInversionOfBellAndMixed) {
  const DensityMatrix phi(states::phi_plus());
  EXPECT_LT((linear_reconstruct(expected_tomography(phi, 1e4)).matrix() - phi.matrix()).norm(), 1e-10);
  const DensityMatrix mixed;
  EXPECT_LT((linear_reconstruct(expected_tomography(mixed, 1e4)).matrix() - mixed.matrix()).norm(), 1e-10);
}

TEST(Linear, LeftInverseOnRandomStates) {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 100; ++n) {
    const auto rho = test::random_density(rng, 1 + n % 4);
    for (auto conv : {CircularConvention::r_is_h_minus_iv, CircularConvention::r_is_h_plus_iv}) {
      const auto rec = expected_tomography(rho, 1.0, default_settings(), conv);
      EXPECT_LE((linear_reconstruct(rec).matrix() - rho.matrix()).norm(), 1e-9);
    }
  }
}

TEST(Linear, LowCountsCanBeUnphysical) {
  const DensityMatrix phi(states::phi_plus());
  int unphysical = 0;
  for (int s = 0; s < 20; ++s) {
    const auto lin = linear_reconstruct(simulate_tomography(phi, 50.0, 1.0, 300 + s));
    const Matrix4c& m = lin.matrix();
    EXPECT_LT((m - m.adjoint()).norm(), 1e-10);
    EXPECT_NEAR(m.trace().real(), 1.0, 1e-10);
    unphysical += lin.min_eigenvalue() < -1e-9;
  }
  EXPECT_GT(unphysical, 0);
}

TEST(Linear, IncompleteSetRejected) {
  std::vector<ProjectionSetting> s = default_settings();
  s.resize(9);
  EXPECT_THROW(linear_reconstruct(expected_tomography(DensityMatrix(), 100.0, s)), InvalidArgument);
}

TEST(Mle, HighCountPureState) {
  const DensityMatrix phi(states::phi_plus());
  const auto rec = simulate_tomography(phi, 1e7, 1.0, 8);
  const auto m = mle_reconstruct(rec);
  EXPECT_GE(fidelity_to_pure(m.rho, states::phi_plus()), 0.999);
  EXPECT_TRUE(m.rho.is_physical());
}

TEST(Mle, MaximallyMixed) {
  const DensityMatrix mixed;
  const auto m = mle_reconstruct(simulate_tomography(mixed, 1e6 / 0.25, 1.0, 9));
  EXPECT_LE(trace_distance(m.rho, mixed), 0.02);
}

TEST(Mle, WernerAtSwitchingNoiseLevel) {
  const auto psi = states::phi_i_plus();
  const auto rho = werner_mix(psi, 0.9333);
  std::vector<double> f;
  for (std::uint64_t seed = 10; seed < 17; ++seed)
    f.push_back(fidelity_to_pure(mle_reconstruct(simulate_tomography(rho, 4500.0, 0.1, seed, 10)).rho, psi));
  std::nth_element(f.begin(), f.begin() + 3, f.end());
  EXPECT_NEAR(f[3], 0.95, 0.01);
}

TEST(Mle, AlwaysPhysicalAndImprovesOnStart) {
  std::mt19937_64 rng(31);
  for (int n = 0; n < 25; ++n) {
    const auto rho = test::random_density(rng, 1 + n % 4);
    const double rate = n % 3 == 0 ? 30.0 : 1e4;
    const auto rec = simulate_tomography(rho, rate, 1.0, 500 + n);
    const auto m = mle_reconstruct(rec);
    EXPECT_GE(m.rho.min_eigenvalue(), -1e-9);
    EXPECT_NEAR(m.rho.matrix().trace().real(), 1.0, 1e-10);
    EXPECT_LT((m.rho.matrix() - m.rho.matrix().adjoint()).norm(), 1e-10);
    EXPECT_LE(m.nll, m.initial_nll + 1e-9);
    const auto start = project_to_physical(linear_reconstruct(rec).matrix());
    EXPECT_LE(m.nll, poisson_nll(rec, start) + 1e-9);
  }
}

TEST(Mle, ConsistencyImprovesWithCounts) {
  std::mt19937_64 rng(41);
  const auto rho = test::random_density(rng);
  double prev = 1e9;
  for (double counts : {1e3, 1e5, 1e7}) {
    std::vector<double> d;
    for (int s = 0; s < 5; ++s) d.push_back(trace_distance(mle_reconstruct(simulate_tomography(rho, counts, 1.0, s)).rho, rho));
    std::nth_element(d.begin(), d.begin() + 2, d.end());
    EXPECT_LT(d[2], prev);
    prev = d[2];
  }
  EXPECT_LT(prev, 0.01);
}

TEST(Mle, WarnsOnLowCounts) {
  const auto m = mle_reconstruct(simulate_tomography(DensityMatrix(states::phi_plus()), 20.0, 1.0, 4));
  EXPECT_FALSE(m.warnings.empty());
}

TEST(Report, BellStateEntries) {
  const auto r = density_matrix_report(DensityMatrix(states::phi_plus()));
  for (int k : {0, 3}) EXPECT_NEAR(r["real"][k][k].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(r["real"][0][3].get<double>(), 0.5, 1e-12);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_NEAR(r["imag"][a][b].get<double>(), 0.0, 1e-12);
  const auto ri = density_matrix_report(DensityMatrix(states::phi_i_plus()));
  EXPECT_NEAR(std::abs(ri["imag"][0][3].get<double>()), 0.5, 1e-12);
  EXPECT_NEAR(std::abs(ri["imag"][3][0].get<double>()), 0.5, 1e-12);
  EXPECT_NEAR(state_phase(DensityMatrix(states::phi_i_plus())), std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(state_phase(DensityMatrix(states::phi_i_minus())), -std::numbers::pi / 2, 1e-12);
}

TEST(Report, DiagonalsAgreeAcrossStates) {
  std::vector<Eigen::Vector4d> diags;
  int seed = 0;
  for (const auto& t : bell_targets()) {
    const auto m = mle_reconstruct(simulate_tomography(werner_mix(t.state, 0.9333), 4500.0, 0.1, ++seed, 10));
    diags.push_back(m.rho.matrix().diagonal().real());
  }
  for (const auto& d : diags) EXPECT_LT((d - diags.front()).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Csv, RoundTrip) {
  const auto rec = simulate_tomography(DensityMatrix(states::phi_minus()), 1e4, 0.1, 3);
  std::stringstream ss;
  write_csv(ss, rec);
  EXPECT_EQ(ss.str().substr(0, 22), "setting,counts,seconds");
  const auto back = read_tomography_csv(ss);
  ASSERT_EQ(back.entries.size(), 16u);
  for (std::size_t k = 0; k < 16; ++k) {
    EXPECT_EQ(back.entries[k].setting, rec.entries[k].setting);
    EXPECT_EQ(back.entries[k].counts, rec.entries[k].counts);
    EXPECT_EQ(back.entries[k].seconds, rec.entries[k].seconds);
  }
  std::stringstream bad("setting,counts,seconds\nHH,-1,0.1\n");
  EXPECT_THROW(read_tomography_csv(bad).validate(), InvalidArgument);
}
