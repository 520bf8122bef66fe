#pragma once

// Discrete-time LTI state-space algebra shared by every other module:
// discretization, series composition, inversion, stability tests and
// Lyapunov certificates.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mwm/errors.hpp"

namespace mwm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

namespace detail {

inline std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace detail

/// Discrete-time realization x[k+1] = A x[k] + B u[k], y[k] = C x[k] + D u[k].
///
/// Immutable after construction; dimensions and finiteness are validated in
/// the constructor. A model with zero states is a static gain D.
class StateSpaceModel {
 public:
  StateSpaceModel() : StateSpaceModel(Matrix(0, 0), Matrix(0, 0), Matrix(0, 0), Matrix(0, 0)) {}

  StateSpaceModel(Matrix A, Matrix B, Matrix C, Matrix D)
      : a_(std::move(A)), b_(std::move(B)), c_(std::move(C)), d_(std::move(D)) {
    const auto n = a_.rows();
    if (a_.cols() != n) throw DimensionError("A must be square, got " + detail::shape(a_));
    if (b_.rows() != n)
      throw DimensionError("B must have " + std::to_string(n) + " rows, got " + detail::shape(b_));
    if (c_.cols() != n)
      throw DimensionError("C must have " + std::to_string(n) + " columns, got " + detail::shape(c_));
    // A zero-state model may be given with empty B/C; infer the I/O sizes from D.
    if (n == 0) {
      if (b_.cols() == 0 && d_.cols() > 0) b_.resize(0, d_.cols());
      if (c_.rows() == 0 && d_.rows() > 0) c_.resize(d_.rows(), 0);
    }
    if (d_.rows() != c_.rows() || d_.cols() != b_.cols())
      throw DimensionError("D must be " + std::to_string(c_.rows()) + "x" + std::to_string(b_.cols()) +
                           ", got " + detail::shape(d_));
    if (!detail::all_finite(a_) || !detail::all_finite(b_) || !detail::all_finite(c_) ||
        !detail::all_finite(d_))
      throw NumericalError("state-space matrices contain non-finite entries");
  }

  /// Static gain y = D u.
  static StateSpaceModel gain(Matrix D) {
    const auto p = D.rows(), m = D.cols();
    return StateSpaceModel(Matrix(0, 0), Matrix(0, m), Matrix(p, 0), std::move(D));
  }

  const Matrix& A() const noexcept { return a_; }
  const Matrix& B() const noexcept { return b_; }
  const Matrix& C() const noexcept { return c_; }
  const Matrix& D() const noexcept { return d_; }

  Eigen::Index states() const noexcept { return a_.rows(); }
  Eigen::Index inputs() const noexcept { return b_.cols(); }
  Eigen::Index outputs() const noexcept { return c_.rows(); }
  bool square() const noexcept { return inputs() == outputs(); }

 private:
  Matrix a_, b_, c_, d_;
};

/// G(z) = C (zI - A)^{-1} B + D.
inline ComplexMatrix transfer(const StateSpaceModel& g, Complex z) {
  const auto n = g.states();
  ComplexMatrix result = g.D().cast<Complex>();
  if (n == 0) return result;
  ComplexMatrix pencil = z * ComplexMatrix::Identity(n, n) - g.A().cast<Complex>();
  result += g.C().cast<Complex>() * pencil.partialPivLu().solve(g.B().cast<Complex>());
  return result;
}

// ---------------------------------------------------------------------------
// Matrix exponential and zero-order hold
// ---------------------------------------------------------------------------

/// exp(M) by scaling and squaring with a degree-13 Pade approximant.
inline Matrix expm(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("expm needs a square matrix, got " + detail::shape(m));
  if (!m.allFinite()) throw NumericalError("expm: non-finite entries");
  const auto n = m.rows();
  if (n == 0) return m;

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix a = m / std::ldexp(1.0, squarings);

  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  const Matrix u = a * u_inner;
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

struct DiscretePair {
  Matrix Ad;
  Matrix Bd;
};

/// Zero-order-hold discretization via the augmented exponential
/// exp([[Ac, Bc], [0, 0]] Ts) = [[Ad, Bd], [0, I]].
inline DiscretePair zoh_discretize(const Matrix& Ac, const Matrix& Bc, double Ts) {
  if (!(Ts > 0.0) || !std::isfinite(Ts)) throw DomainError("sampling time must be positive and finite");
  if (Ac.rows() != Ac.cols()) throw DimensionError("continuous A must be square, got " + detail::shape(Ac));
  if (Bc.rows() != Ac.rows())
    throw DimensionError("continuous B must have " + std::to_string(Ac.rows()) + " rows, got " + detail::shape(Bc));
  if (!Ac.allFinite() || !Bc.allFinite()) throw NumericalError("zoh_discretize: non-finite entries");

  const auto n = Ac.rows(), m = Bc.cols();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = Ac * Ts;
  aug.topRightCorner(n, m) = Bc * Ts;
  const Matrix e = expm(aug);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

// ---------------------------------------------------------------------------
// Interconnection
// ---------------------------------------------------------------------------

/// Cascade where g1 feeds g2 (transfer function G2(z) G1(z)). The state is
/// stacked [x1; x2], upstream first.
inline StateSpaceModel series(const StateSpaceModel& g1, const StateSpaceModel& g2) {
  if (g1.outputs() != g2.inputs())
    throw DimensionError("series: upstream has " + std::to_string(g1.outputs()) + " outputs, downstream expects " +
                         std::to_string(g2.inputs()) + " inputs");
  const auto n1 = g1.states(), n2 = g2.states();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = g1.A();
  a.bottomLeftCorner(n2, n1) = g2.B() * g1.C();
  a.bottomRightCorner(n2, n2) = g2.A();
  Matrix b(n1 + n2, g1.inputs());
  b << g1.B(), g2.B() * g1.D();
  Matrix c(g2.outputs(), n1 + n2);
  c << g2.D() * g1.C(), g2.C();
  return StateSpaceModel(std::move(a), std::move(b), std::move(c), g2.D() * g1.D());
}

/// Largest feedthrough condition number accepted by inverse_realization.
inline constexpr double kMaxFeedthroughCondition = 1e8;

inline double condition_number(const Matrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

/// Realization of G^{-1}: (A - B D^{-1} C, B D^{-1}, -D^{-1} C, D^{-1}).
inline StateSpaceModel inverse_realization(const StateSpaceModel& g,
                                           double max_condition = kMaxFeedthroughCondition) {
  if (!g.square())
    throw DimensionError("inverse_realization: system is not square (" + std::to_string(g.outputs()) + "x" +
                         std::to_string(g.inputs()) + ")");
  const double cond = condition_number(g.D());
  if (!(cond <= max_condition)) throw SingularFeedthroughError(cond);
  const Matrix d_inv = g.D().partialPivLu().inverse();
  return StateSpaceModel(g.A() - g.B() * d_inv * g.C(), g.B() * d_inv, -d_inv * g.C(), d_inv);
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

inline constexpr double kSchurTolerance = 1e-9;

inline double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("spectral_radius needs a square matrix, got " + detail::shape(a));
  if (a.size() == 0) return 0.0;
  if (!a.allFinite()) throw NumericalError("spectral_radius: non-finite entries");
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: eigenvalue iteration failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// True iff rho(A) < 1 - tol.
inline bool is_schur(const Matrix& a, double tol = kSchurTolerance) { return spectral_radius(a) < 1.0 - tol; }

/// Z > 0 with A' Z A - Z < 0; margin is the smallest eigenvalue of Z - A' Z A.
struct LyapunovCertificate {
  Matrix Z;
  double margin = 0.0;
};

/// Solves A' Z A - Z = -I by squared Smith iteration when A is Schur.
/// Returns nullopt for non-Schur A (same tolerance as is_schur).
inline std::optional<LyapunovCertificate> lyapunov_certificate(const Matrix& a, double tol = kSchurTolerance) {
  if (!is_schur(a, tol)) return std::nullopt;
  const auto n = a.rows();
  if (n == 0) return LyapunovCertificate{Matrix(0, 0), std::numeric_limits<double>::infinity()};

  // Z = sum_k (A')^k A^k; each sweep doubles the number of accumulated terms.
  Matrix z = Matrix::Identity(n, n);
  Matrix power = a;
  for (int sweep = 0; sweep < 200; ++sweep) {
    const Matrix increment = power.transpose() * z * power;
    z += increment;
    power = power * power;
    if (increment.norm() <= 1e-16 * z.norm() || power.norm() == 0.0) break;
  }
  z = 0.5 * (z + z.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> z_eig(z, Eigen::EigenvaluesOnly);
  const Matrix decrease = z - a.transpose() * z * a;
  Eigen::SelfAdjointEigenSolver<Matrix> d_eig(0.5 * (decrease + decrease.transpose()), Eigen::EigenvaluesOnly);
  const double margin = d_eig.eigenvalues().minCoeff();
  if (!(z_eig.eigenvalues().minCoeff() > 0.0) || !(margin > 0.0)) return std::nullopt;
  return LyapunovCertificate{std::move(z), margin};
}

/// Checks a candidate certificate against A (Z > 0 and Z - A' Z A >= margin_floor).
inline bool certifies(const Matrix& z, const Matrix& a, double margin_floor = 0.0) {
  if (z.rows() != a.rows() || z.cols() != a.cols()) return false;
  if (a.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> z_eig(0.5 * (z + z.transpose()), Eigen::EigenvaluesOnly);
  const Matrix decrease = z - a.transpose() * z * a;
  Eigen::SelfAdjointEigenSolver<Matrix> d_eig(0.5 * (decrease + decrease.transpose()), Eigen::EigenvaluesOnly);
  return z_eig.eigenvalues().minCoeff() > 0.0 && d_eig.eigenvalues().minCoeff() > margin_floor;
}

// ---------------------------------------------------------------------------
// Simulation and norms
// ---------------------------------------------------------------------------

/// Drives g from x0 with the columns of `inputs` (m x N); returns outputs (p x N).
inline Matrix simulate(const StateSpaceModel& g, const Matrix& inputs, const Vector& x0) {
  if (inputs.rows() != g.inputs())
    throw DimensionError("simulate: input has " + std::to_string(inputs.rows()) + " channels, model expects " +
                         std::to_string(g.inputs()));
  if (x0.size() != g.states()) throw DimensionError("simulate: initial state has wrong dimension");
  Matrix out(g.outputs(), inputs.cols());
  Vector x = x0;
  for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
    out.col(k) = g.C() * x + g.D() * inputs.col(k);
    x = g.A() * x + g.B() * inputs.col(k);
  }
  return out;
}

inline Matrix simulate(const StateSpaceModel& g, const Matrix& inputs) {
  return simulate(g, inputs, Vector::Zero(g.states()));
}

namespace detail {

inline double sigma_max(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace detail

/// H-infinity norm of a Schur-stable discrete-time system.
///
/// The system is mapped to continuous time with the bilinear transform
/// z = (1 + s) / (1 - s), which preserves the norm, and the level is bisected
/// using the Hamiltonian imaginary-axis eigenvalue test.
inline double hinf_norm(const StateSpaceModel& g, double rel_tol = 1e-10) {
  if (!is_schur(g.A(), 0.0)) throw DomainError("hinf_norm: system is not Schur stable");
  const auto n = g.states();
  const auto m = g.inputs(), p = g.outputs();
  if (n == 0) return detail::sigma_max(g.D().cast<Complex>());

  const Matrix id = Matrix::Identity(n, n);
  const auto shifted = (g.A() + id).partialPivLu();
  const Matrix ac = shifted.solve(g.A() - id);
  const Matrix bc = std::sqrt(2.0) * shifted.solve(g.B());
  const Matrix cc = std::sqrt(2.0) * g.C() * shifted.inverse();
  const Matrix dc = g.D() - g.C() * shifted.solve(g.B());

  auto sigma_at = [&](double omega) { return detail::sigma_max(transfer(g, std::exp(Complex(0.0, omega)))); };

  // Lower bound from D and a coarse frequency scan.
  double lower = detail::sigma_max(dc.cast<Complex>());
  constexpr int kScan = 64;
  for (int i = 0; i <= kScan; ++i) lower = std::max(lower, sigma_at(M_PI * i / kScan));
  if (lower == 0.0) return 0.0;

  // Imaginary-axis eigenvalues of the Hamiltonian at level gamma; returns
  // their continuous-time frequencies.
  auto crossings = [&](double gamma) {
    const Matrix r = dc.transpose() * dc - gamma * gamma * Matrix::Identity(m, m);
    const Matrix s = dc * dc.transpose() - gamma * gamma * Matrix::Identity(p, p);
    const auto r_lu = r.partialPivLu();
    const auto s_lu = s.partialPivLu();
    Matrix h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = ac - bc * r_lu.solve(dc.transpose() * cc);
    h.topRightCorner(n, n) = -gamma * bc * r_lu.solve(bc.transpose());
    h.bottomLeftCorner(n, n) = gamma * cc.transpose() * s_lu.solve(cc);
    h.bottomRightCorner(n, n) = -ac.transpose() + cc.transpose() * dc * r_lu.solve(bc.transpose());
    Eigen::EigenSolver<Matrix> es(h, false);
    std::vector<double> freqs;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const Complex lambda = es.eigenvalues()(i);
      if (std::abs(lambda.real()) <= 1e-8 * (1.0 + std::abs(lambda))) freqs.push_back(std::abs(lambda.imag()));
    }
    return freqs;
  };
  // Continuous frequency w maps to the discrete angle 2 atan(w).
  auto sigma_ct = [&](double w) { return sigma_at(2.0 * std::atan(w)); };

  double upper = 2.0 * lower;
  for (int i = 0; i < 200 && !crossings(upper).empty(); ++i) upper *= 2.0;

  while (upper - lower > rel_tol * lower) {
    const double gamma = 0.5 * (lower + upper);
    const auto freqs = crossings(gamma);
    if (freqs.empty()) {
      upper = gamma;
    } else {
      lower = gamma;
      for (double w : freqs) lower = std::max(lower, std::min(sigma_ct(w), upper));
    }
  }
  return 0.5 * (lower + upper);
}

}  // namespace mwm
