#pragma once

// Attack-energy-constrained output-to-output gain of a fixed closed loop:
//
//   sup ||y_J||^2  s.t.  ||phi_u||^2 <= eps_a,  ||y_r||^2 <= eps_r,
//
// bounded by the convex program
//
//   minimize   eps_r g + eps_a g_a + eps_p tr(P)
//   subject to R(P) + [[C_J'C_J - g C_r'C_r, C_J'D_J], [D_J'C_J, D_J'D_J - g_a I]] <= 0,
//              P >= 0, g >= 0, g_a >= 0,
//
// with R(P) = [A B]' P [A B] - diag(P, 0).

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mwm/closed_loop.hpp"
#include "mwm/lti.hpp"
#include "mwm/sdp.hpp"

namespace mwm {

struct AecOogProblem {
  /// Closed-loop dynamics x+ = A x + B phi_u with outputs y_J = C_J x + D_J phi_u, y_r = C_r x.
  Matrix A, B, C_J, D_J, C_r;
  double eps_r = 1.0;
  double eps_a = 1.0;
  double eps_p = 0.0;
  /// Tolerance on the definiteness checks of the returned certificate.
  double delta = 1e-8;

  static AecOogProblem from_model(const ClosedLoopModel& model, double eps_r, double eps_a, double eps_p) {
    return {model.A(), model.B(), model.C_J(), model.D_J(), model.C_r(), eps_r, eps_a, eps_p, 1e-8};
  }

  Eigen::Index states() const noexcept { return A.rows(); }
  Eigen::Index inputs() const noexcept { return B.cols(); }

  void validate() const {
    const auto n = A.rows(), m = B.cols();
    if (A.cols() != n || B.rows() != n) throw DimensionError("AEC-OOG: A must be n x n and B n x m");
    if (C_J.cols() != n || D_J.rows() != C_J.rows() || D_J.cols() != m)
      throw DimensionError("AEC-OOG: performance output (C_J, D_J) has inconsistent dimensions");
    if (C_r.cols() != n) throw DimensionError("AEC-OOG: C_r must have n columns");
    if (!(eps_r > 0.0) || !(eps_a > 0.0)) throw DomainError("AEC-OOG: eps_r and eps_a must be positive");
    if (!(eps_p >= 0.0)) throw DomainError("AEC-OOG: eps_p must be nonnegative");
    if (!A.allFinite() || !B.allFinite() || !C_J.allFinite() || !D_J.allFinite() || !C_r.allFinite())
      throw NumericalError("AEC-OOG: non-finite system matrices");
  }
};

/// Variable layout of the conic program: the upper triangle of P row by row,
/// then gamma, then gamma_a.
struct AecOogLayout {
  Eigen::Index n = 0;
  Eigen::Index p_vars() const noexcept { return n * (n + 1) / 2; }
  Eigen::Index gamma() const noexcept { return p_vars(); }
  Eigen::Index gamma_a() const noexcept { return p_vars() + 1; }
  Eigen::Index total() const noexcept { return p_vars() + 2; }
  Eigen::Index p_index(Eigen::Index a, Eigen::Index b) const noexcept {
    if (a > b) std::swap(a, b);
    return a * n - a * (a - 1) / 2 + (b - a);
  }
};

/// Constant part of the LMI block, [[C_J'C_J, C_J'D_J], [D_J'C_J, D_J'D_J]].
inline Matrix aec_oog_constant(const AecOogProblem& prob) {
  Matrix cd(prob.C_J.rows(), prob.states() + prob.inputs());
  cd << prob.C_J, prob.D_J;
  return cd.transpose() * cd;
}

/// Emits the conic program in LMI form F0 + sum y_i F_i >= 0. Block 0 is the
/// negated dissipation LMI, block 1 is P >= 0, blocks 2 and 3 are g, g_a >= 0.
inline sdp::ConicProgram build_sdp(const AecOogProblem& prob) {
  prob.validate();
  const auto n = prob.states(), m = prob.inputs();
  const AecOogLayout lay{n};
  sdp::ConicProgram cp;
  cp.objective = Vector::Zero(lay.total());
  for (Eigen::Index a = 0; a < n; ++a) cp.objective(lay.p_index(a, a)) = prob.eps_p;
  cp.objective(lay.gamma()) = prob.eps_r;
  cp.objective(lay.gamma_a()) = prob.eps_a;
  cp.variable_names.resize(static_cast<std::size_t>(lay.total()));
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b)
      cp.variable_names[static_cast<std::size_t>(lay.p_index(a, b))] =
          "P[" + std::to_string(a) + "," + std::to_string(b) + "]";
  cp.variable_names[static_cast<std::size_t>(lay.gamma())] = "gamma";
  cp.variable_names[static_cast<std::size_t>(lay.gamma_a())] = "gamma_a";

  // Dissipation LMI: -(R(P) + M(g, g_a)) >= 0.
  sdp::PsdBlock lmi(n + m, lay.total());
  lmi.set_constant(-aec_oog_constant(prob));
  Matrix ab(n, n + m);
  ab << prob.A, prob.B;
  std::vector<int> phi(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < n; ++a) phi[static_cast<std::size_t>(a)] = lmi.add_vector(ab.row(a).transpose());
  for (Eigen::Index a = 0; a < n; ++a) e[static_cast<std::size_t>(a)] = lmi.add_vector(Vector::Unit(n + m, a));
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const double w = a == b ? 1.0 : 2.0;
      const auto var = lay.p_index(a, b);
      lmi.add_term(var, phi[static_cast<std::size_t>(a)], phi[static_cast<std::size_t>(b)], -w);
      lmi.add_term(var, e[static_cast<std::size_t>(a)], e[static_cast<std::size_t>(b)], w);
    }
  }
  for (Eigen::Index r = 0; r < prob.C_r.rows(); ++r) {
    Vector v = Vector::Zero(n + m);
    v.head(n) = prob.C_r.row(r).transpose();
    const int idx = lmi.add_vector(v);
    lmi.add_term(lay.gamma(), idx, idx, 1.0);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const int idx = lmi.add_vector(Vector::Unit(n + m, n + i));
    lmi.add_term(lay.gamma_a(), idx, idx, 1.0);
  }
  cp.blocks.push_back(std::move(lmi));

  sdp::PsdBlock pos(n, lay.total());
  for (Eigen::Index a = 0; a < n; ++a) pos.add_vector(Vector::Unit(n, a));
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b)
      pos.add_term(lay.p_index(a, b), static_cast<int>(a), static_cast<int>(b), a == b ? 1.0 : 2.0);
  cp.blocks.push_back(std::move(pos));

  for (auto var : {lay.gamma(), lay.gamma_a()}) {
    sdp::PsdBlock s(1, lay.total());
    const int idx = s.add_vector(Vector::Ones(1));
    s.add_term(var, idx, idx, 1.0);
    cp.blocks.push_back(std::move(s));
  }
  return cp;
}

enum class AecOogStatus { solved, unstable_loop, infeasible, solver_failure };

inline const char* to_string(AecOogStatus s) {
  switch (s) {
    case AecOogStatus::solved: return "solved";
    case AecOogStatus::unstable_loop: return "unstable_closed_loop";
    case AecOogStatus::infeasible: return "infeasible";
    case AecOogStatus::solver_failure: return "solver_failure";
  }
  return "?";
}

struct AecOogSolution {
  AecOogStatus status = AecOogStatus::solver_failure;
  /// eps_r g + eps_a g_a (excludes the regularizer).
  double value = std::numeric_limits<double>::infinity();
  /// eps_p tr(P).
  double regularizer = 0.0;
  double gamma = 0.0;
  double gamma_a = 0.0;
  Matrix P;
  /// Largest eigenvalue of the dissipation block at the returned point.
  double lmi_residual = std::numeric_limits<double>::quiet_NaN();
  /// Smallest eigenvalue of P.
  double p_min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  double spectral_radius = std::numeric_limits<double>::quiet_NaN();
  sdp::Status solver_status = sdp::Status::numerical_failure;
  int iterations = 0;
  double relative_gap = std::numeric_limits<double>::quiet_NaN();
  double primal_infeasibility = std::numeric_limits<double>::quiet_NaN();
  double dual_infeasibility = std::numeric_limits<double>::quiet_NaN();
  double solve_ms = 0.0;
  std::string diagnostic;

  bool ok() const noexcept { return status == AecOogStatus::solved; }
  double objective() const noexcept { return value + regularizer; }
};

/// The dissipation block R(P) + M(g, g_a) at a given certificate.
inline Matrix aec_oog_block(const AecOogProblem& prob, const Matrix& P, double gamma, double gamma_a) {
  const auto n = prob.states(), m = prob.inputs();
  Matrix ab(n, n + m);
  ab << prob.A, prob.B;
  Matrix blk = ab.transpose() * P * ab + aec_oog_constant(prob);
  blk.topLeftCorner(n, n) -= P + gamma * prob.C_r.transpose() * prob.C_r;
  blk.bottomRightCorner(m, m) -= gamma_a * Matrix::Identity(m, m);
  return 0.5 * (blk + blk.transpose());
}

/// Solves the program. A closed loop that is not Schur is reported as
/// infeasible without calling the solver: the gain is then unbounded.
inline AecOogSolution solve_aec_oog(const AecOogProblem& prob, const sdp::ConicSolver& solver) {
  prob.validate();
  AecOogSolution sol;
  sol.spectral_radius = mwm::spectral_radius(prob.A);
  if (!is_schur(prob.A)) {
    sol.status = AecOogStatus::unstable_loop;
    sol.diagnostic = "infeasible: closed-loop A is not Schur stable (spectral radius " +
                     std::to_string(sol.spectral_radius) + "); the gain is finite only for Schur A";
    return sol;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto cp = build_sdp(prob);
  const auto res = solver.solve(cp);
  sol.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  sol.solver_status = res.status;
  sol.iterations = res.iterations;
  sol.relative_gap = res.relative_gap;
  sol.primal_infeasibility = res.primal_infeasibility;
  sol.dual_infeasibility = res.dual_infeasibility;

  if (res.status == sdp::Status::infeasible) {
    sol.status = AecOogStatus::infeasible;
    sol.diagnostic = "solver reported infeasibility although A is Schur (spectral radius " +
                     std::to_string(sol.spectral_radius) + "): numerical failure";
    return sol;
  }
  if (!res.solved()) {
    sol.status = AecOogStatus::solver_failure;
    sol.diagnostic = std::string("solver did not converge: ") + sdp::to_string(res.status) + " after " +
                     std::to_string(res.iterations) + " iterations (gap " + std::to_string(res.relative_gap) +
                     ", primal " + std::to_string(res.primal_infeasibility) + ", dual " +
                     std::to_string(res.dual_infeasibility) + "): " + res.message;
    return sol;
  }

  const auto n = prob.states();
  const AecOogLayout lay{n};
  sol.P.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) sol.P(a, b) = sol.P(b, a) = res.y(lay.p_index(a, b));
  sol.gamma = std::max(0.0, res.y(lay.gamma()));
  sol.gamma_a = std::max(0.0, res.y(lay.gamma_a()));
  sol.value = prob.eps_r * sol.gamma + prob.eps_a * sol.gamma_a;
  sol.regularizer = prob.eps_p * sol.P.trace();
  Eigen::SelfAdjointEigenSolver<Matrix> lmi(aec_oog_block(prob, sol.P, sol.gamma, sol.gamma_a),
                                            Eigen::EigenvaluesOnly);
  sol.lmi_residual = lmi.eigenvalues().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> pe(sol.P, Eigen::EigenvaluesOnly);
  sol.p_min_eigenvalue = pe.eigenvalues().minCoeff();
  sol.status = AecOogStatus::solved;
  sol.diagnostic = res.status == sdp::Status::optimal ? "optimal" : "optimal (reduced accuracy)";
  if (!std::isfinite(sol.value)) {
    sol.status = AecOogStatus::solver_failure;
    sol.diagnostic = "solver returned a non-finite value";
  }
  return sol;
}

inline AecOogSolution solve_aec_oog(const AecOogProblem& prob) {
  return solve_aec_oog(prob, sdp::InteriorPointSolver{});
}

}  // namespace mwm
