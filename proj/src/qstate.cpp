#include "sagnac/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "sagnac/error.hpp"

namespace sagnac {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kDeg = std::numbers::pi / 180.0;

Vector4c kron(const Vector2c& a, const Vector2c& b) {
  Vector4c v;
  v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
  return v;
}

}  // namespace

TwoQubitPure::TwoQubitPure() : amps_(Vector4c::Zero()) { amps_(0) = 1.0; }

TwoQubitPure::TwoQubitPure(const Vector4c& amplitudes) : amps_(amplitudes) {
  if (std::abs(amps_.squaredNorm() - 1.0) > 1e-12) throw InvalidArgument("state vector is not normalized");
}

DensityMatrix::DensityMatrix() : m_(Matrix4c::Identity() * 0.25) {}

DensityMatrix::DensityMatrix(const TwoQubitPure& pure) : m_(pure.projector()) {}

DensityMatrix::DensityMatrix(const Matrix4c& m) : m_(m) {
  if ((m_ - m_.adjoint()).norm() > 1e-10) throw InvalidArgument("density matrix is not Hermitian");
  if (std::abs(m_.trace() - Complex(1.0)) > 1e-10) throw InvalidArgument("density matrix trace != 1");
  if (min_eigenvalue() < -1e-9) throw InvalidArgument("density matrix has a negative eigenvalue");
}

DensityMatrix DensityMatrix::unchecked(const Matrix4c& m) { return DensityMatrix(m, NoCheck{}); }

Eigen::Vector4d DensityMatrix::eigenvalues() const {
  const Matrix4c h = 0.5 * (m_ + m_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

bool DensityMatrix::is_physical(double eig_tol, double herm_tol, double trace_tol) const {
  return (m_ - m_.adjoint()).norm() <= herm_tol && std::abs(m_.trace() - Complex(1.0)) <= trace_tol &&
         min_eigenvalue() >= -eig_tol;
}

char basis_letter(Basis b) { return "HVDARL"[static_cast<int>(b)]; }

Basis parse_basis(char c) {
  switch (c) {
    case 'H': return Basis::H;
    case 'V': return Basis::V;
    case 'D': return Basis::D;
    case 'A': return Basis::A;
    case 'R': return Basis::R;
    case 'L': return Basis::L;
    default: throw InvalidArgument(std::string("unknown basis letter: ") + c);
  }
}

Basis orthogonal(Basis b) {
  switch (b) {
    case Basis::H: return Basis::V;
    case Basis::V: return Basis::H;
    case Basis::D: return Basis::A;
    case Basis::A: return Basis::D;
    case Basis::R: return Basis::L;
    case Basis::L: return Basis::R;
  }
  return b;
}

std::string ProjectionSetting::label() const { return {basis_letter(signal), basis_letter(idler)}; }

ProjectionSetting ProjectionSetting::parse(std::string_view label) {
  if (label.size() != 2) throw InvalidArgument("setting label must have two letters");
  return {parse_basis(label[0]), parse_basis(label[1])};
}

Vector2c basis_vector(Basis b, CircularConvention conv) {
  const Complex i(0.0, conv == CircularConvention::r_is_h_minus_iv ? 1.0 : -1.0);
  Vector2c v;
  switch (b) {
    case Basis::H: v << 1.0, 0.0; break;
    case Basis::V: v << 0.0, 1.0; break;
    case Basis::D: v << kInvSqrt2, kInvSqrt2; break;
    case Basis::A: v << kInvSqrt2, -kInvSqrt2; break;
    case Basis::R: v << kInvSqrt2, -i * kInvSqrt2; break;
    case Basis::L: v << kInvSqrt2, i * kInvSqrt2; break;
  }
  return v;
}

WaveplateAngles waveplate_angles(Basis b, CircularConvention conv) {
  if (conv == CircularConvention::r_is_h_plus_iv) {
    if (b == Basis::R) b = Basis::L;
    else if (b == Basis::L) b = Basis::R;
  }
  switch (b) {
    case Basis::H: return {0.0, 0.0};
    case Basis::V: return {0.0, 45.0};
    case Basis::D: return {45.0, 22.5};
    case Basis::A: return {45.0, -22.5};
    case Basis::R: return {0.0, 22.5};
    case Basis::L: return {0.0, -22.5};
  }
  return {};
}

Matrix2c hwp_jones(double angle_rad) {
  const double c = std::cos(2.0 * angle_rad), s = std::sin(2.0 * angle_rad);
  Matrix2c m;
  m << c, s, s, -c;
  return m;
}

Matrix2c qwp_jones(double angle_rad) {
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  const Complex i(0.0, 1.0);
  Matrix2c m;
  m << c * c + i * s * s, (1.0 - i) * s * c, (1.0 - i) * s * c, s * s + i * c * c;
  return m;
}

Vector2c analyzer_state(const WaveplateAngles& angles) {
  const Matrix2c optics = hwp_jones(angles.hwp_deg * kDeg) * qwp_jones(angles.qwp_deg * kDeg);
  Vector2c h;
  h << 1.0, 0.0;
  return optics.adjoint() * h;
}

Matrix4c setting_projector(const ProjectionSetting& s, CircularConvention conv) {
  const Vector4c v = kron(analyzer_state(waveplate_angles(s.signal, conv)),
                          analyzer_state(waveplate_angles(s.idler, conv)));
  return v * v.adjoint();
}

TwoQubitPure make_phase_state(double alpha, double beta, double theta) {
  if (std::abs(alpha * alpha + beta * beta - 1.0) > 1e-12)
    throw InvalidArgument("alpha^2 + beta^2 must equal 1");
  Vector4c v = Vector4c::Zero();
  v(0) = alpha;
  v(3) = beta * std::polar(1.0, theta);
  return TwoQubitPure(v);
}

double projection_probability(const DensityMatrix& rho, const Matrix4c& projector) {
  const double p = (rho.matrix() * projector).trace().real();
  return std::clamp(p, 0.0, 1.0);
}

double projection_probability(const DensityMatrix& rho, const ProjectionSetting& setting, CircularConvention conv) {
  return projection_probability(rho, setting_projector(setting, conv));
}

double fidelity_to_pure(const DensityMatrix& rho, const TwoQubitPure& target) {
  const auto& v = target.amplitudes();
  return std::clamp((v.adjoint() * rho.matrix() * v)(0, 0).real(), 0.0, 1.0);
}

DensityMatrix werner_mix(const TwoQubitPure& state, double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) throw InvalidArgument("visibility must be in [0, 1]");
  return DensityMatrix(visibility * state.projector() + (1.0 - visibility) * 0.25 * Matrix4c::Identity());
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  const Matrix4c d = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

DensityMatrix project_to_physical(const Matrix4c& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (m + m.adjoint()));
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  if (ev.sum() <= 0.0) return DensityMatrix();
  ev /= ev.sum();
  Matrix4c out = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  out = 0.5 * (out + out.adjoint());
  out /= out.trace().real();
  return DensityMatrix(out);
}

namespace states {
TwoQubitPure phi_plus() { return make_phase_state(kInvSqrt2, kInvSqrt2, 0.0); }
TwoQubitPure phi_minus() { return make_phase_state(kInvSqrt2, kInvSqrt2, std::numbers::pi); }
TwoQubitPure phi_i_plus() { return make_phase_state(kInvSqrt2, kInvSqrt2, std::numbers::pi / 2.0); }
TwoQubitPure phi_i_minus() { return make_phase_state(kInvSqrt2, kInvSqrt2, -std::numbers::pi / 2.0); }
}  // namespace states

nlohmann::json to_json(const DensityMatrix& rho) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back({rho(r, c).real(), rho(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

DensityMatrix density_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw InvalidArgument("density matrix JSON must have 4 rows");
  Matrix4c m;
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4) throw InvalidArgument("density matrix row must have 4 entries");
    for (int c = 0; c < 4; ++c) m(r, c) = Complex(j[r][c].at(0).get<double>(), j[r][c].at(1).get<double>());
  }
  return DensityMatrix(m);
}

}  // namespace sagnac
