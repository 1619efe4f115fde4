#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sagnac/qstate.hpp"

namespace sagnac {

struct TomographyEntry {
  ProjectionSetting setting;
  double counts = 0.0;
  double seconds = 0.0;
};

struct TomographyRecord {
  std::vector<TomographyEntry> entries;
  CircularConvention convention = CircularConvention::r_is_h_minus_iv;

  void validate() const;
  double total_counts() const;
};

/// {H, V, D, R} on each arm, signal-major.
std::vector<ProjectionSetting> default_settings();

/// CSV with header `setting,counts,seconds`; setting labels look like "HD".
void write_csv(std::ostream& os, const TomographyRecord& rec);
TomographyRecord read_tomography_csv(std::istream& is);
TomographyRecord read_tomography_csv(const std::filesystem::path& path);

/// Poisson counts accumulated over `samples` integrations of `seconds` each.
TomographyRecord simulate_tomography(const DensityMatrix& rho, double rate_cps, double seconds, std::uint64_t seed,
                                     int samples = 1, const std::vector<ProjectionSetting>& settings = default_settings(),
                                     CircularConvention conv = CircularConvention::r_is_h_minus_iv);

/// Noise-free record: counts are the exact expectations.
TomographyRecord expected_tomography(const DensityMatrix& rho, double counts_per_setting,
                                     const std::vector<ProjectionSetting>& settings = default_settings(),
                                     CircularConvention conv = CircularConvention::r_is_h_minus_iv);

/// Linear inversion in the two-qubit Pauli basis. Hermitian with unit trace,
/// not necessarily positive. Throws InvalidArgument on an incomplete setting set.
DensityMatrix linear_reconstruct(const TomographyRecord& rec);

struct MleConfig {
  double tolerance = 1e-12;
  int max_iterations = 500;
  /// Settings with fewer counts than this produce a warning.
  double low_count_warning = 10.0;
};

struct MleResult {
  DensityMatrix rho;
  /// Poisson negative log-likelihood, constant terms dropped.
  double nll = 0.0;
  double initial_nll = 0.0;
  int iterations = 0;
  bool used_fallback = false;
  std::vector<std::string> warnings;
};

/// rho = T T^dagger / tr(T T^dagger) with T lower triangular (16 real
/// parameters), fitted to the counts by maximum likelihood. Starts from the
/// physical projection of the linear estimate.
MleResult mle_reconstruct(const TomographyRecord& rec, const MleConfig& cfg = {});

double poisson_nll(const TomographyRecord& rec, const DensityMatrix& rho);

struct NamedState {
  std::string name;
  TwoQubitPure state;
};

/// phi+, phi-, phi_i+ and phi_i-.
std::vector<NamedState> bell_targets();

/// Real and imaginary parts, fidelity to every target and the HH/VV phase.
nlohmann::json density_matrix_report(const DensityMatrix& rho, const std::vector<NamedState>& targets = bell_targets());

/// arg(rho_VV,HH), the relative phase of the VV term.
double state_phase(const DensityMatrix& rho);

}  // namespace sagnac
