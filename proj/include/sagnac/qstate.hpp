#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace sagnac {

using Complex = std::complex<double>;
using Vector2c = Eigen::Matrix<Complex, 2, 1>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;
using Matrix2c = Eigen::Matrix<Complex, 2, 2>;
using Matrix4c = Eigen::Matrix<Complex, 4, 4>;

// Two-qubit amplitudes are always ordered (HH, HV, VH, VV), signal first.

/// Pure polarization state of a signal/idler pair.
class TwoQubitPure {
 public:
  TwoQubitPure();  // |HH>
  explicit TwoQubitPure(const Vector4c& amplitudes);

  const Vector4c& amplitudes() const { return amps_; }
  Matrix4c projector() const { return amps_ * amps_.adjoint(); }

 private:
  Vector4c amps_;
};

/// 4x4 density matrix. Construction validates Hermiticity, unit trace and
/// positivity unless `unchecked` is used (linear reconstruction output).
class DensityMatrix {
 public:
  DensityMatrix();  // I/4
  explicit DensityMatrix(const Matrix4c& m);
  explicit DensityMatrix(const TwoQubitPure& pure);

  static DensityMatrix unchecked(const Matrix4c& m);

  const Matrix4c& matrix() const { return m_; }
  Complex operator()(int r, int c) const { return m_(r, c); }

  Eigen::Vector4d eigenvalues() const;
  double min_eigenvalue() const { return eigenvalues().minCoeff(); }
  bool is_physical(double eig_tol = 1e-9, double herm_tol = 1e-10, double trace_tol = 1e-10) const;

 private:
  struct NoCheck {};
  DensityMatrix(const Matrix4c& m, NoCheck) : m_(m) {}
  Matrix4c m_;
};

enum class Basis { H, V, D, A, R, L };

/// Handedness used to label the circular analyzer states.
enum class CircularConvention {
  r_is_h_minus_iv,  // R = (H - iV)/sqrt2, L = (H + iV)/sqrt2
  r_is_h_plus_iv,
};

struct WaveplateAngles {
  double qwp_deg = 0.0;
  double hwp_deg = 0.0;
};

/// Analyzer element per arm.
struct ProjectionSetting {
  Basis signal = Basis::H;
  Basis idler = Basis::H;

  std::string label() const;
  static ProjectionSetting parse(std::string_view label);
  friend bool operator==(const ProjectionSetting&, const ProjectionSetting&) = default;
};

char basis_letter(Basis b);
Basis parse_basis(char c);
Basis orthogonal(Basis b);

Vector2c basis_vector(Basis b, CircularConvention conv = CircularConvention::r_is_h_minus_iv);

/// QWP then HWP in front of an H-transmitting polarizer.
WaveplateAngles waveplate_angles(Basis b, CircularConvention conv = CircularConvention::r_is_h_minus_iv);

/// Ideal Jones matrices; global phases dropped.
Matrix2c hwp_jones(double angle_rad);
Matrix2c qwp_jones(double angle_rad);

/// Single-photon state transmitted by the waveplate analyzer.
Vector2c analyzer_state(const WaveplateAngles& angles);

/// Rank-1 projector of a two-arm setting, built from the waveplate model.
Matrix4c setting_projector(const ProjectionSetting& s, CircularConvention conv = CircularConvention::r_is_h_minus_iv);

/// alpha|HH> + e^{i theta} beta|VV>.
TwoQubitPure make_phase_state(double alpha, double beta, double theta);

double projection_probability(const DensityMatrix& rho, const ProjectionSetting& setting,
                              CircularConvention conv = CircularConvention::r_is_h_minus_iv);
double projection_probability(const DensityMatrix& rho, const Matrix4c& projector);

double fidelity_to_pure(const DensityMatrix& rho, const TwoQubitPure& target);
DensityMatrix werner_mix(const TwoQubitPure& state, double visibility);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

/// Closest physical state: clip negative eigenvalues and renormalize.
DensityMatrix project_to_physical(const Matrix4c& m);

namespace states {
TwoQubitPure phi_plus();
TwoQubitPure phi_minus();
TwoQubitPure phi_i_plus();   // (HH + i VV)/sqrt2
TwoQubitPure phi_i_minus();  // (HH - i VV)/sqrt2
}  // namespace states

/// Row-major [re, im] pairs.
nlohmann::json to_json(const DensityMatrix& rho);
DensityMatrix density_matrix_from_json(const nlohmann::json& j);

}  // namespace sagnac
