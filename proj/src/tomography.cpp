#include "sagnac/tomography.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sagnac/error.hpp"
#include "sagnac/fit.hpp"
#include "sagnac/rng.hpp"

namespace sagnac {

namespace {

const std::array<Matrix2c, 4>& paulis() {
  static const std::array<Matrix2c, 4> p = [] {
    const Complex i(0.0, 1.0);
    std::array<Matrix2c, 4> out;
    out[0] << 1, 0, 0, 1;
    out[1] << 0, 1, 1, 0;
    out[2] << 0, -i, i, 0;
    out[3] << 1, 0, 0, -1;
    return out;
  }();
  return p;
}

Matrix4c pauli_product(int k) {
  const auto& p = paulis();
  const Matrix2c& a = p[static_cast<std::size_t>(k / 4)];
  const Matrix2c& b = p[static_cast<std::size_t>(k % 4)];
  Matrix4c out;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
  return out;
}

std::vector<Matrix4c> projectors(const TomographyRecord& rec) {
  std::vector<Matrix4c> out;
  out.reserve(rec.entries.size());
  for (const auto& e : rec.entries) out.push_back(setting_projector(e.setting, rec.convention));
  return out;
}

Matrix4c factor_from_params(const Eigen::VectorXd& t) {
  Matrix4c L = Matrix4c::Zero();
  for (int d = 0; d < 4; ++d) L(d, d) = t(d);
  int k = 4;
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < r; ++c, k += 2) L(r, c) = Complex(t(k), t(k + 1));
  return L;
}

Matrix4c from_params(const Eigen::VectorXd& t) {
  const Matrix4c L = factor_from_params(t);
  return L * L.adjoint();
}

// Unit vector spanning a rank-1 projector.
Vector4c projector_vector(const Matrix4c& p) {
  Eigen::Index j = 0;
  p.diagonal().real().maxCoeff(&j);
  return p.col(j) / std::sqrt(p(j, j).real());
}

Eigen::VectorXd to_params(const Matrix4c& rho) {
  // Small admixture of I keeps the factor well defined for rank-deficient rho.
  const Matrix4c m = rho + 1e-6 * Matrix4c::Identity();
  const Eigen::LLT<Matrix4c> llt(m);
  const Matrix4c L = llt.matrixL();
  Eigen::VectorXd t(16);
  for (int d = 0; d < 4; ++d) t(d) = L(d, d).real();
  int k = 4;
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < r; ++c, k += 2) {
      t(k) = L(r, c).real();
      t(k + 1) = L(r, c).imag();
    }
  return t;
}

Matrix4c normalized(const Matrix4c& m) {
  Matrix4c out = 0.5 * (m + m.adjoint());
  return out / out.trace().real();
}

}  // namespace

void TomographyRecord::validate() const {
  if (entries.empty()) throw InvalidArgument("tomography record is empty");
  for (const auto& e : entries) {
    if (!(e.counts >= 0.0) || !std::isfinite(e.counts)) throw InvalidArgument("counts must be finite and >= 0");
    if (!(e.seconds > 0.0)) throw InvalidArgument("integration time must be > 0");
  }
}

double TomographyRecord::total_counts() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.counts;
  return s;
}

std::vector<ProjectionSetting> default_settings() {
  const Basis set[4] = {Basis::H, Basis::V, Basis::D, Basis::R};
  std::vector<ProjectionSetting> out;
  for (Basis a : set)
    for (Basis b : set) out.push_back({a, b});
  return out;
}

void write_csv(std::ostream& os, const TomographyRecord& rec) {
  os << "setting,counts,seconds\n";
  os.precision(17);
  for (const auto& e : rec.entries) os << e.setting.label() << ',' << e.counts << ',' << e.seconds << '\n';
}

TomographyRecord read_tomography_csv(std::istream& is) {
  TomographyRecord rec;
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("tomography CSV is empty");
  if (line.rfind("setting,counts,seconds", 0) != 0) throw InvalidArgument("unexpected tomography CSV header: " + line);
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string label, counts, seconds;
    if (!std::getline(ss, label, ',') || !std::getline(ss, counts, ',') || !std::getline(ss, seconds))
      throw InvalidArgument("malformed tomography CSV line " + std::to_string(lineno));
    try {
      rec.entries.push_back({ProjectionSetting::parse(label), std::stod(counts), std::stod(seconds)});
    } catch (const std::logic_error&) {
      throw InvalidArgument("malformed tomography CSV line " + std::to_string(lineno));
    }
  }
  rec.validate();
  return rec;
}

TomographyRecord read_tomography_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_tomography_csv(in);
}

TomographyRecord simulate_tomography(const DensityMatrix& rho, double rate_cps, double seconds, std::uint64_t seed,
                                     int samples, const std::vector<ProjectionSetting>& settings,
                                     CircularConvention conv) {
  if (!(rate_cps > 0.0)) throw InvalidArgument("rate must be > 0");
  if (!(seconds >= 0.0)) throw InvalidArgument("integration time must be >= 0");
  if (samples < 1) throw InvalidArgument("samples must be >= 1");
  TomographyRecord rec;
  rec.convention = conv;
  Philox4x32 gen(substream_seed(seed, "tomography"), 0);
  for (const auto& s : settings) {
    const double mean = rate_cps * seconds * projection_probability(rho, s, conv);
    double counts = 0.0;
    for (int k = 0; k < samples; ++k) {
      if (mean > 0.0) counts += static_cast<double>(std::poisson_distribution<std::int64_t>(mean)(gen));
    }
    rec.entries.push_back({s, counts, seconds * samples});
  }
  return rec;
}

TomographyRecord expected_tomography(const DensityMatrix& rho, double counts_per_setting,
                                     const std::vector<ProjectionSetting>& settings, CircularConvention conv) {
  TomographyRecord rec;
  rec.convention = conv;
  for (const auto& s : settings)
    rec.entries.push_back({s, counts_per_setting * projection_probability(rho, s, conv), 1.0});
  return rec;
}

DensityMatrix linear_reconstruct(const TomographyRecord& rec) {
  rec.validate();
  const auto proj = projectors(rec);
  const auto n = static_cast<Eigen::Index>(rec.entries.size());
  Eigen::MatrixXd A(n, 16);
  Eigen::VectorXd r(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (int k = 0; k < 16; ++k)
      A(v, k) = 0.25 * (proj[static_cast<std::size_t>(v)] * pauli_product(k)).trace().real();
    r(v) = rec.entries[static_cast<std::size_t>(v)].counts / rec.entries[static_cast<std::size_t>(v)].seconds;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 16) throw InvalidArgument("tomography setting set is not complete");
  const Eigen::VectorXd coeff = qr.solve(r);
  if (!(coeff(0) > 0.0)) throw Undefined("linear reconstruction has no counts to normalize");
  Matrix4c m = Matrix4c::Zero();
  for (int k = 0; k < 16; ++k) m += (coeff(k) / coeff(0)) * pauli_product(k);
  m *= 0.25;
  return DensityMatrix::unchecked(0.5 * (m + m.adjoint()));
}

double poisson_nll(const TomographyRecord& rec, const DensityMatrix& rho) {
  rec.validate();
  const auto proj = projectors(rec);
  // The rate scale that maximizes the likelihood for this rho.
  double expected = 0.0;
  for (std::size_t v = 0; v < proj.size(); ++v)
    expected += rec.entries[v].seconds * projection_probability(rho, proj[v]);
  const double scale = expected > 0.0 ? rec.total_counts() / expected : 0.0;
  double nll = 0.0;
  for (std::size_t v = 0; v < proj.size(); ++v) {
    const double lambda = scale * rec.entries[v].seconds * projection_probability(rho, proj[v]);
    const double c = rec.entries[v].counts;
    if (lambda <= 0.0) {
      if (c > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    nll += lambda - c * std::log(lambda);
  }
  return nll;
}

MleResult mle_reconstruct(const TomographyRecord& rec, const MleConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw InvalidArgument("MLE tolerance must be > 0");
  rec.validate();
  MleResult out;
  for (const auto& e : rec.entries)
    if (e.counts < cfg.low_count_warning) {
      out.warnings.push_back("setting " + e.setting.label() + " has fewer than " +
                             std::to_string(static_cast<int>(cfg.low_count_warning)) + " counts");
    }

  const DensityMatrix lin = linear_reconstruct(rec);
  const DensityMatrix start = project_to_physical(lin.matrix());
  const auto proj = projectors(rec);
  const double total = rec.total_counts();
  double seconds_mean = 0.0;
  for (const auto& e : rec.entries) seconds_mean += e.seconds;
  seconds_mean /= static_cast<double>(rec.entries.size());

  // Expected counts are w_v |B_v t|^2 with B_v t = L(t)^dag a_v, linear in
  // the Cholesky parameters t. The trace of L L^dag carries the rate in units
  // of counts per setting at the mean integration time.
  const std::size_t nv = proj.size();
  std::vector<Eigen::Matrix<Complex, 4, 16>> B(nv);
  std::vector<double> w(nv), c(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    const Vector4c a = projector_vector(proj[v]);
    for (int k = 0; k < 16; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(16);
      e(k) = 1.0;
      B[v].col(k) = factor_from_params(e).adjoint() * a;
    }
    w[v] = rec.entries[v].seconds / seconds_mean;
    c[v] = rec.entries[v].counts;
  }
  std::vector<Eigen::Matrix<double, 16, 16>> M(nv);
  for (std::size_t v = 0; v < nv; ++v) M[v] = w[v] * (B[v].adjoint() * B[v]).real();

  auto nll = [&](const Eigen::VectorXd& t) {
    double f = 0.0;
    for (std::size_t v = 0; v < nv; ++v) {
      const double lambda = t.dot(M[v] * t);
      if (c[v] > 0.0) {
        if (!(lambda > 0.0)) return std::numeric_limits<double>::infinity();
        f += lambda - c[v] * std::log(lambda);
      } else {
        f += lambda;
      }
    }
    return f;
  };

  double norm = 0.0;
  for (std::size_t v = 0; v < nv; ++v) norm += w[v] * projection_probability(start, proj[v]);
  const double scale = norm > 0.0 ? total / norm : 1.0;
  const Eigen::VectorXd t0 = to_params(start.matrix() * scale);
  const double f0 = nll(t0);

  // Damped Newton with the exact Hessian; the damping keeps every step a
  // descent step and is relaxed after each success.
  Eigen::VectorXd t = t0;
  double f = f0;
  double mu = 1e-3;
  bool converged = false;
  int it = 0;
  for (; it < cfg.max_iterations && std::isfinite(f); ++it) {
    Eigen::Matrix<double, 16, 1> g = Eigen::Matrix<double, 16, 1>::Zero();
    Eigen::Matrix<double, 16, 16> H = Eigen::Matrix<double, 16, 16>::Zero();
    for (std::size_t v = 0; v < nv; ++v) {
      const Eigen::Matrix<double, 16, 1> Mt = M[v] * t;
      const double lambda = t.dot(Mt);
      const double ratio = c[v] > 0.0 ? c[v] / lambda : 0.0;
      g += 2.0 * (1.0 - ratio) * Mt;
      H += 2.0 * (1.0 - ratio) * M[v] + 4.0 * (ratio / lambda) * Mt * Mt.transpose();
    }
    const double diag = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    bool accepted = false;
    for (int inner = 0; inner < 60 && !accepted; ++inner) {
      Eigen::Matrix<double, 16, 16> A = H;
      A.diagonal().array() += mu * diag;
      const Eigen::LLT<Eigen::Matrix<double, 16, 16>> llt(A);
      if (llt.info() != Eigen::Success) {
        mu *= 10.0;
        continue;
      }
      const Eigen::Matrix<double, 16, 1> step = llt.solve(-g);
      const double f_new = nll(t + step);
      if (f_new <= f) {
        const double decrement = -g.dot(step);
        t += step;
        const double drop = f - f_new;
        f = f_new;
        mu = std::max(mu / 10.0, 1e-15);
        accepted = true;
        if (drop <= cfg.tolerance * std::max(1.0, std::abs(f)) && decrement <= cfg.tolerance * std::max(1.0, std::abs(f)))
          converged = true;
      } else {
        mu *= 10.0;
        if (mu > 1e20) break;
      }
    }
    if (!accepted) converged = true;  // stationary to machine precision
    if (converged) {
      ++it;
      break;
    }
  }

  FitResult fit{t, f, it, converged, converged ? "newton" : "iteration limit"};
  if (!converged || !std::isfinite(f)) {
    NelderMeadOptions nm;
    nm.max_iterations = 200 * cfg.max_iterations;
    nm.f_tol = cfg.tolerance;
    const FitResult alt = nelder_mead(nll, std::isfinite(f) ? t : t0, nm);
    out.used_fallback = true;
    if (alt.cost < fit.cost || !std::isfinite(fit.cost)) fit = alt;
    if (!alt.converged) throw ConvergenceError("MLE tomography did not converge", fit);
  }
  const double cost0 = f0;
  const Eigen::VectorXd& best = fit.cost <= cost0 ? fit.x : t0;
  out.rho = project_to_physical(normalized(from_params(best)));
  out.iterations = fit.iterations;
  out.initial_nll = poisson_nll(rec, start);
  out.nll = poisson_nll(rec, out.rho);
  return out;
}

std::vector<NamedState> bell_targets() {
  return {{"phi+", states::phi_plus()},
          {"phi-", states::phi_minus()},
          {"phi_i+", states::phi_i_plus()},
          {"phi_i-", states::phi_i_minus()}};
}

double state_phase(const DensityMatrix& rho) { return std::arg(rho(3, 0)); }

nlohmann::json density_matrix_report(const DensityMatrix& rho, const std::vector<NamedState>& targets) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json rr = nlohmann::json::array(), ri = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(rho(r, c).real());
      ri.push_back(rho(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  nlohmann::json fid = nlohmann::json::object();
  for (const auto& t : targets) fid[t.name] = fidelity_to_pure(rho, t.state);
  return {{"basis_order", {"HH", "HV", "VH", "VV"}},
          {"real", re},
          {"imag", im},
          {"fidelity", fid},
          {"phase_rad", state_phase(rho)},
          {"min_eigenvalue", rho.min_eigenvalue()}};
}

}  // namespace sagnac
