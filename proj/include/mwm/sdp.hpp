#pragma once

// Small dense semidefinite programming kernel.
//
// Problems are posed in LMI form
//
//   minimize    c' y
//   subject to  F0_j + sum_i y_i F_ij  >= 0      for every block j,
//
// and solved with an infeasible primal-dual interior-point method (HKM
// search direction, Mehrotra predictor-corrector). Scalar nonnegativity
// constraints are 1x1 blocks.
//
// Each coefficient matrix F_ij is stored as a short list of symmetric rank-two
// terms over a per-block dictionary of vectors U_j:
//
//   F_ij = sum_t w_t (u_p u_q' + u_q u_p') / 2.
//
// The Schur complement entries tr(F_i X F_k Z^{-1}) then reduce to products
// of entries of U'XU and U'Z^{-1}U, which keeps Lyapunov-type LMIs (where
// every F_ij is rank four) cheap to assemble.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mwm/errors.hpp"

namespace mwm::sdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// weight * (u_p u_q' + u_q u_p') / 2 with u_p, u_q dictionary columns.
struct Term {
  int p = 0;
  int q = 0;
  double weight = 0.0;
};

/// One LMI block F0 + sum_i y_i F_i >= 0.
class PsdBlock {
 public:
  PsdBlock(Eigen::Index dim, Eigen::Index variables)
      : constant_(Matrix::Zero(dim, dim)), dictionary_(dim, 0), terms_(static_cast<std::size_t>(variables)) {}

  Eigen::Index dim() const noexcept { return constant_.rows(); }
  Eigen::Index variables() const noexcept { return static_cast<Eigen::Index>(terms_.size()); }

  const Matrix& constant() const noexcept { return constant_; }
  const Matrix& dictionary() const noexcept { return dictionary_; }
  const std::vector<Term>& terms(Eigen::Index var) const { return terms_.at(static_cast<std::size_t>(var)); }

  void set_constant(const Matrix& f0) {
    if (f0.rows() != dim() || f0.cols() != dim()) throw DimensionError("PsdBlock: constant has wrong size");
    constant_ = 0.5 * (f0 + f0.transpose());
  }

  /// Appends a dictionary vector and returns its index.
  int add_vector(const Vector& u) {
    if (u.size() != dim()) throw DimensionError("PsdBlock: dictionary vector has wrong length");
    dictionary_.conservativeResize(Eigen::NoChange, dictionary_.cols() + 1);
    dictionary_.col(dictionary_.cols() - 1) = u;
    return static_cast<int>(dictionary_.cols() - 1);
  }

  void add_term(Eigen::Index var, int p, int q, double weight) {
    if (var < 0 || var >= variables()) throw DimensionError("PsdBlock: variable index out of range");
    if (p < 0 || q < 0 || p >= dictionary_.cols() || q >= dictionary_.cols())
      throw DimensionError("PsdBlock: dictionary index out of range");
    if (weight != 0.0) terms_[static_cast<std::size_t>(var)].push_back({p, q, weight});
  }

  /// Adds a dense symmetric coefficient through its eigen-decomposition.
  void add_dense(Eigen::Index var, const Matrix& f) {
    if (f.rows() != dim() || f.cols() != dim()) throw DimensionError("PsdBlock: coefficient has wrong size");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (f + f.transpose()));
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < dim(); ++k) {
      const double lambda = es.eigenvalues()(k);
      if (std::abs(lambda) <= 1e-15 * scale) continue;
      const int idx = add_vector(es.eigenvectors().col(k));
      add_term(var, idx, idx, lambda);
    }
  }

  /// Dense F_var.
  Matrix coefficient(Eigen::Index var) const {
    Matrix w = Matrix::Zero(dictionary_.cols(), dictionary_.cols());
    for (const auto& t : terms(var)) {
      w(t.p, t.q) += 0.5 * t.weight;
      w(t.q, t.p) += 0.5 * t.weight;
    }
    return dictionary_ * w * dictionary_.transpose();
  }

  /// F0 + sum_i y_i F_i.
  Matrix evaluate(const Vector& y) const {
    Matrix w = Matrix::Zero(dictionary_.cols(), dictionary_.cols());
    for (std::size_t i = 0; i < terms_.size(); ++i)
      for (const auto& t : terms_[i]) {
        w(t.p, t.q) += 0.5 * t.weight * y(static_cast<Eigen::Index>(i));
        w(t.q, t.p) += 0.5 * t.weight * y(static_cast<Eigen::Index>(i));
      }
    return constant_ + dictionary_ * w * dictionary_.transpose();
  }

 private:
  Matrix constant_;
  Matrix dictionary_;
  std::vector<std::vector<Term>> terms_;
};

struct ConicProgram {
  Vector objective;
  std::vector<PsdBlock> blocks;
  std::vector<std::string> variable_names;

  Eigen::Index variables() const noexcept { return objective.size(); }

  void validate() const {
    for (const auto& b : blocks)
      if (b.variables() != variables()) throw DimensionError("ConicProgram: block variable count mismatch");
    if (!objective.allFinite()) throw NumericalError("ConicProgram: non-finite objective");
  }
};

enum class Status { optimal, inaccurate, infeasible, unbounded, max_iterations, numerical_failure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::inaccurate: return "inaccurate";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::max_iterations: return "max_iterations";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "?";
}

struct Settings {
  int max_iterations = 100;
  double gap_tolerance = 1e-8;
  double feasibility_tolerance = 1e-8;
  /// Accepted as `inaccurate` when the run stalls.
  double fallback_tolerance = 1e-6;
  double infeasibility_tolerance = 1e-8;
  double step_fraction = 0.98;
};

struct Result {
  Status status = Status::numerical_failure;
  Vector y;
  /// c'y at the returned point.
  double objective = std::numeric_limits<double>::quiet_NaN();
  /// Lower bound from the multipliers: -<F0, X>.
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double relative_gap = std::numeric_limits<double>::quiet_NaN();
  double primal_infeasibility = std::numeric_limits<double>::quiet_NaN();
  double dual_infeasibility = std::numeric_limits<double>::quiet_NaN();
  /// F_j(y) for each block.
  std::vector<Matrix> slacks;
  /// Multipliers X_j for each block.
  std::vector<Matrix> multipliers;
  std::string message;

  bool solved() const noexcept { return status == Status::optimal || status == Status::inaccurate; }
};

/// Backend interface: objective, PSD blocks in, status and primal values out.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual Result solve(const ConicProgram& program) const = 0;
};

namespace detail {

/// Internal data in standard dual form: max b'y s.t. C - sum y_i A_i = Z >= 0,
/// with C = F0, A_i = -F_i, b = -c.
struct BlockData {
  Eigen::Index n = 0;
  Matrix C;
  Matrix U;
  std::vector<Eigen::Index> vars;            // variables entering this block
  std::vector<std::vector<Term>> terms;      // negated weights, aligned with vars
};

inline BlockData prepare(const PsdBlock& block) {
  BlockData d;
  d.n = block.dim();
  d.C = block.constant();
  d.U = block.dictionary();
  for (Eigen::Index i = 0; i < block.variables(); ++i) {
    if (block.terms(i).empty()) continue;
    d.vars.push_back(i);
    auto ts = block.terms(i);
    for (auto& t : ts) t.weight = -t.weight;
    d.terms.push_back(std::move(ts));
  }
  return d;
}

/// sum_i y_i A_i.
inline Matrix adjoint(const BlockData& d, const Vector& y) {
  const auto dd = d.U.cols();
  Matrix w = Matrix::Zero(dd, dd);
  for (std::size_t k = 0; k < d.vars.size(); ++k) {
    const double yi = y(d.vars[k]);
    if (yi == 0.0) continue;
    for (const auto& t : d.terms[k]) {
      w(t.p, t.q) += 0.5 * t.weight * yi;
      w(t.q, t.p) += 0.5 * t.weight * yi;
    }
  }
  return d.U * w * d.U.transpose();
}

/// out_i += <A_i, N> for a (possibly nonsymmetric) N.
inline void accumulate_operator(const BlockData& d, const Matrix& n_mat, Vector& out) {
  const Matrix g = d.U.transpose() * n_mat * d.U;
  for (std::size_t k = 0; k < d.vars.size(); ++k) {
    double s = 0.0;
    for (const auto& t : d.terms[k]) s += 0.5 * t.weight * (g(t.p, t.q) + g(t.q, t.p));
    out(d.vars[k]) += s;
  }
}

/// M_ik += tr(A_i X A_k Z^{-1}).
inline void accumulate_schur(const BlockData& d, const Matrix& x, const Matrix& z_inv, Matrix& m) {
  const Matrix gx = d.U.transpose() * x * d.U;
  const Matrix gz = d.U.transpose() * z_inv * d.U;
  const auto nv = d.vars.size();
  for (std::size_t a = 0; a < nv; ++a) {
    const auto i = d.vars[a];
    for (std::size_t b = a; b < nv; ++b) {
      const auto k = d.vars[b];
      double s = 0.0;
      for (const auto& t : d.terms[a]) {
        for (const auto& u : d.terms[b]) {
          const double v = gx(t.q, u.p) * gz(u.q, t.p) + gx(t.q, u.q) * gz(u.p, t.p) + gx(t.p, u.p) * gz(u.q, t.q) +
                           gx(t.p, u.q) * gz(u.p, t.q);
          s += 0.25 * t.weight * u.weight * v;
        }
      }
      m(i, k) += s;
      if (i != k) m(k, i) += s;
    }
  }
}

inline Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline double inner(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

/// Largest alpha with X + alpha dX >= 0 (infinity when unbounded).
inline double max_step(const Matrix& x, const Matrix& dx) {
  if (x.rows() == 1) {
    const double d = dx(0, 0);
    return d < 0.0 ? -x(0, 0) / d : std::numeric_limits<double>::infinity();
  }
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix t = llt.matrixL().solve(dx);
  t = llt.matrixL().solve(t.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline bool inverse_spd(const Matrix& z, Matrix& z_inv) {
  Eigen::LLT<Matrix> llt(z);
  if (llt.info() != Eigen::Success) return false;
  z_inv = llt.solve(Matrix::Identity(z.rows(), z.cols()));
  z_inv = sym(z_inv);
  return z_inv.allFinite();
}

}  // namespace detail

/// Infeasible primal-dual path-following solver.
class InteriorPointSolver final : public ConicSolver {
 public:
  InteriorPointSolver() = default;
  explicit InteriorPointSolver(Settings settings) : settings_(settings) {}

  const Settings& settings() const noexcept { return settings_; }

  Result solve(const ConicProgram& program) const override {
    program.validate();
    using namespace detail;
    const auto m = program.variables();
    const Vector b = -program.objective;
    std::vector<BlockData> blocks;
    blocks.reserve(program.blocks.size());
    for (const auto& blk : program.blocks) blocks.push_back(prepare(blk));
    const auto nb = blocks.size();

    double total_dim = 0.0, norm_c = 0.0;
    for (const auto& d : blocks) {
      total_dim += static_cast<double>(d.n);
      norm_c += d.C.squaredNorm();
    }
    norm_c = std::sqrt(norm_c);
    const double norm_b = b.norm();

    // Starting point: scaled identities (SDPT3-style heuristics).
    Vector a_norm2 = Vector::Zero(m);
    for (const auto& d : blocks) {
      Matrix tmp = Matrix::Zero(m, m);
      const Matrix id = Matrix::Identity(d.n, d.n);
      accumulate_schur(d, id, id, tmp);
      a_norm2 += tmp.diagonal();
    }
    std::vector<Matrix> X(nb), Z(nb), Zinv(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      const auto& d = blocks[j];
      const double sn = std::sqrt(static_cast<double>(d.n));
      double xi = std::max(10.0, sn), eta = std::max({10.0, sn, d.C.norm()});
      for (auto i : d.vars) {
        xi = std::max(xi, sn * (1.0 + std::abs(b(i))) / (1.0 + std::sqrt(a_norm2(i))));
        eta = std::max(eta, std::sqrt(a_norm2(i)));
      }
      X[j] = xi * Matrix::Identity(d.n, d.n);
      Z[j] = eta * Matrix::Identity(d.n, d.n);
    }
    Vector y = Vector::Zero(m);

    Result res;
    std::vector<Matrix> Rd(nb), dX(nb), dZ(nb), dXp(nb), dZp(nb);
    Vector rp(m);
    int stall = 0;
    double best_merit = std::numeric_limits<double>::infinity();

    auto residuals = [&](double& pobj, double& dobj, double& gap, double& pinf, double& dinf, double& mu) {
      rp = b;
      pobj = 0.0;
      mu = 0.0;
      double rd2 = 0.0;
      for (std::size_t j = 0; j < nb; ++j) {
        Vector ax = Vector::Zero(m);
        accumulate_operator(blocks[j], X[j], ax);
        rp -= ax;
        Rd[j] = blocks[j].C - Z[j] - adjoint(blocks[j], y);
        rd2 += Rd[j].squaredNorm();
        pobj += inner(blocks[j].C, X[j]);
        mu += inner(X[j], Z[j]);
      }
      mu /= total_dim;
      dobj = b.dot(y);
      gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      pinf = rp.norm() / (1.0 + norm_b);
      dinf = std::sqrt(rd2) / (1.0 + norm_c);
    };

    auto finish = [&](Status s, std::string msg, double pobj, double gap, double pinf, double dinf, int it) {
      const bool near = gap < settings_.fallback_tolerance && pinf < settings_.fallback_tolerance &&
                        dinf < settings_.fallback_tolerance;
      if ((s == Status::numerical_failure || s == Status::max_iterations) && near) {
        s = Status::inaccurate;
        msg += "; accepted within fallback tolerance";
      }
      res.status = s;
      res.message = std::move(msg);
      res.y = y;
      res.objective = program.objective.dot(y);
      res.dual_objective = -pobj;
      res.relative_gap = gap;
      res.primal_infeasibility = dinf;  // LMI (dual-form) residual
      res.dual_infeasibility = pinf;    // multiplier equality residual
      res.iterations = it;
      res.slacks.clear();
      for (const auto& blk : program.blocks) res.slacks.push_back(blk.evaluate(y));
      res.multipliers = X;
      return res;
    };

    const auto& st = settings_;
    for (int it = 0;; ++it) {
      double pobj, dobj, gap, pinf, dinf, mu;
      residuals(pobj, dobj, gap, pinf, dinf, mu);
      if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu))
        return finish(Status::numerical_failure, "non-finite iterate", pobj, gap, pinf, dinf, it);
      if (gap < st.gap_tolerance && pinf < st.feasibility_tolerance && dinf < st.feasibility_tolerance)
        return finish(Status::optimal, "converged", pobj, gap, pinf, dinf, it);

      // Farkas-type certificates.
      {
        Vector ax = Vector::Zero(m);
        for (std::size_t j = 0; j < nb; ++j) accumulate_operator(blocks[j], X[j], ax);
        if (pobj < 0.0 && ax.norm() / -pobj < st.infeasibility_tolerance)
          return finish(Status::infeasible, "LMI infeasible (multiplier certificate)", pobj, gap, pinf, dinf, it);
        if (dobj > 0.0) {
          double r2 = 0.0;
          for (std::size_t j = 0; j < nb; ++j) r2 += (adjoint(blocks[j], y) + Z[j]).squaredNorm();
          if (std::sqrt(r2) / dobj < st.infeasibility_tolerance)
            return finish(Status::unbounded, "objective unbounded below", pobj, gap, pinf, dinf, it);
        }
      }

      const double merit = std::max({gap, pinf, dinf});
      if (merit < 0.5 * best_merit) {
        best_merit = merit;
        stall = 0;
      } else if (++stall > 15 || it >= st.max_iterations) {
        return finish(it >= st.max_iterations ? Status::max_iterations : Status::numerical_failure,
                      "no progress", pobj, gap, pinf, dinf, it);
      }

      // Schur complement.
      Matrix M = Matrix::Zero(m, m);
      for (std::size_t j = 0; j < nb; ++j) {
        if (!inverse_spd(Z[j], Zinv[j]))
          return finish(Status::numerical_failure, "slack lost definiteness", pobj, gap, pinf, dinf, it);
        accumulate_schur(blocks[j], X[j], Zinv[j], M);
      }
      if (!M.allFinite())
        return finish(Status::numerical_failure, "non-finite Schur complement", pobj, gap, pinf, dinf, it);
      // Near-singular M (degenerate programs): add a growing diagonal shift.
      Eigen::LLT<Matrix> chol(M);
      const double diag_scale = std::max(M.diagonal().cwiseAbs().maxCoeff(), 1.0);
      for (double shift = 1e-14; chol.info() != Eigen::Success; shift *= 100.0) {
        if (shift > 1e-4)
          return finish(Status::numerical_failure, "Schur complement factorization failed", pobj, gap, pinf, dinf, it);
        Matrix Ms = M;
        Ms.diagonal().array() += shift * diag_scale;
        chol.compute(Ms);
      }
      auto solve_m = [&](const Vector& r) -> Vector { return chol.solve(r); };

      // Direction for target sigma_mu with optional second-order correction.
      auto direction = [&](double sigma_mu, bool corrected, Vector& dy) {
        std::vector<Matrix> h(nb);
        Vector rhs = rp;
        for (std::size_t j = 0; j < nb; ++j) {
          h[j] = sigma_mu * Zinv[j] - X[j];
          if (corrected) h[j] -= dXp[j] * dZp[j] * Zinv[j];
          Vector t = Vector::Zero(m);
          accumulate_operator(blocks[j], X[j] * Rd[j] * Zinv[j] - h[j], t);
          rhs += t;
        }
        dy = solve_m(rhs);
        for (std::size_t j = 0; j < nb; ++j) {
          dZ[j] = Rd[j] - adjoint(blocks[j], dy);
          dX[j] = sym(h[j] - X[j] * dZ[j] * Zinv[j]);
        }
      };
      auto steps = [&](double& ap, double& ad) {
        ap = ad = 1.0;
        for (std::size_t j = 0; j < nb; ++j) {
          ap = std::min(ap, st.step_fraction * max_step(X[j], dX[j]));
          ad = std::min(ad, st.step_fraction * max_step(Z[j], dZ[j]));
        }
      };

      Vector dy;
      direction(0.0, false, dy);
      double ap, ad;
      steps(ap, ad);
      double mu_aff = 0.0;
      for (std::size_t j = 0; j < nb; ++j) mu_aff += inner(X[j] + ap * dX[j], Z[j] + ad * dZ[j]);
      mu_aff /= total_dim;
      const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
      const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expon), 0.0, 1.0);
      for (std::size_t j = 0; j < nb; ++j) {
        dXp[j] = dX[j];
        dZp[j] = dZ[j];
      }

      direction(sigma * mu, true, dy);
      steps(ap, ad);
      if (!(ap > 0.0) || !(ad > 0.0) || !dy.allFinite())
        return finish(Status::numerical_failure, "zero step length", pobj, gap, pinf, dinf, it);

      for (std::size_t j = 0; j < nb; ++j) {
        X[j] = sym(X[j] + ap * dX[j]);
        Z[j] = sym(Z[j] + ad * dZ[j]);
      }
      y += ad * dy;
    }
  }

 private:
  Settings settings_;
};

}  // namespace mwm::sdp
