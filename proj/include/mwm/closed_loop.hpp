#pragma once

// The networked loop under covert attack as a single realization: plant,
// observer-based controller, the four watermark filters and the attacker's
// cascade, with the actuator injection phi_u as input and the performance
// and residual outputs (y_J, y_r).

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mwm/covert_attack.hpp"
#include "mwm/lti.hpp"
#include "mwm/watermark.hpp"

namespace mwm {

/// Observer-based controller: xh+ = A xh + B u_c + L y_r, u_c = K xh,
/// y_r = y_q - C xh. `model` is the controller's copy of (A_p, B_p, C_p).
struct ControllerParams {
  Matrix K;
  Matrix L;
  StateSpaceModel model;
};

/// y_J = C_J x_p + D_J u_h.
struct PerformanceOutput {
  Matrix C_J;
  Matrix D_J;
};

struct Slice {
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

/// Closed-loop state ordering [x_p; x_h; x_g; x_c; x_q; x_w; x_a].
struct StateLayout {
  Slice p, h, g, c, q, w, a;
  Eigen::Index total = 0;
};

/// Linear read-out of an internal signal: C x + D_phi phi_u + D_ref r.
struct Tap {
  Matrix C;
  Matrix D_phi;
  Matrix D_ref;
};

struct ClosedLoopModel {
  /// Input phi_u; outputs stacked (y_J; y_r). The residual rows carry no feedthrough.
  StateSpaceModel sys;
  /// Exogenous reference added to the controller command (u_c = K xh + r).
  Matrix B_ref;
  Eigen::Index perf_outputs = 0;
  Eigen::Index residual_outputs = 0;
  StateLayout layout;
  std::map<std::string, Tap> taps;
  WatermarkBank bank_live;
  WatermarkBank bank_stale;
  double eps_a = 0.0;

  const Matrix& A() const noexcept { return sys.A(); }
  const Matrix& B() const noexcept { return sys.B(); }
  Matrix C_J() const { return sys.C().topRows(perf_outputs); }
  Matrix D_J() const { return sys.D().topRows(perf_outputs); }
  Matrix C_r() const { return sys.C().bottomRows(residual_outputs); }

  /// phi_u -> y_J.
  StateSpaceModel performance_channel() const { return StateSpaceModel(A(), B(), C_J(), D_J()); }
  /// phi_u -> y_r.
  StateSpaceModel residual_channel() const {
    return StateSpaceModel(A(), B(), C_r(), sys.D().bottomRows(residual_outputs));
  }
};

namespace detail {

/// Signal expressed as X x + P phi_u + R r over the closed-loop state.
struct Affine {
  Matrix x, phi, ref;

  Affine operator+(const Affine& o) const { return {x + o.x, phi + o.phi, ref + o.ref}; }
  Affine operator-(const Affine& o) const { return {x - o.x, phi - o.phi, ref - o.ref}; }
  friend Affine operator*(const Matrix& m, const Affine& s) { return {m * s.x, m * s.phi, m * s.ref}; }
};

inline Matrix selector(const Slice& s, Eigen::Index total) {
  Matrix m = Matrix::Zero(s.size, total);
  m.middleCols(s.offset, s.size).setIdentity();
  return m;
}

}  // namespace detail

/// Assembles the closed loop under covert attack.
///
/// Signal flow: u_c -> G -> u_g (+phi_u) -> H -> u_h -> P -> y_p -> W -> y_w
/// (+phi_y) -> Q -> y_q -> controller, with phi_y produced by the attacker's
/// stale cascade driven by phi_u. The controller is strictly proper and the
/// plant has no feedthrough, so the interconnection has no algebraic loop.
inline ClosedLoopModel assemble(const StateSpaceModel& plant, const PerformanceOutput& perf,
                                const ControllerParams& ctrl, const WatermarkBank& live, const WatermarkBank& stale,
                                double eps_a) {
  using detail::Affine;
  const auto np = plant.states(), m = plant.inputs(), p = plant.outputs();
  if (plant.D().size() > 0 && !plant.D().isZero(0.0))
    throw DimensionError("assemble: plant must be strictly proper (y_p = C_p x_p)");
  if (!is_schur(plant.A()))
    throw DomainError("assemble: plant is not Schur stable (spectral radius " +
                      std::to_string(spectral_radius(plant.A())) + "); a locally stabilized plant is required");
  if (perf.C_J.cols() != np || perf.D_J.cols() != m || perf.D_J.rows() != perf.C_J.rows())
    throw DimensionError("assemble: performance output (C_J, D_J) does not match the plant");
  const auto& cm = ctrl.model;
  if (cm.states() != np || cm.inputs() != m || cm.outputs() != p)
    throw DimensionError("assemble: controller model does not match the plant dimensions");
  if (ctrl.K.rows() != m || ctrl.K.cols() != np) throw DimensionError("assemble: K must be m x n");
  if (ctrl.L.rows() != np || ctrl.L.cols() != p) throw DimensionError("assemble: L must be n x p");
  for (const auto* bank : {&live, &stale}) {
    if (bank->h.filter.inputs() != m || bank->g.filter.outputs() != m)
      throw DimensionError("assemble: input-channel filters do not match the plant input width");
    if (bank->w.filter.inputs() != p || bank->q.filter.outputs() != p)
      throw DimensionError("assemble: output-channel filters do not match the plant output width");
  }
  if (!(eps_a > 0.0)) throw DomainError("assemble: attack energy bound must be positive");

  const auto& G = live.g.filter;
  const auto& H = live.h.filter;
  const auto& W = live.w.filter;
  const auto& Q = live.q.filter;
  const StateSpaceModel atk = attacker_model(stale, plant);

  StateLayout lay;
  Eigen::Index off = 0;
  auto place = [&off](Eigen::Index size) {
    Slice s{off, size};
    off += size;
    return s;
  };
  lay.p = place(np);
  lay.h = place(H.states());
  lay.g = place(G.states());
  lay.c = place(np);
  lay.q = place(Q.states());
  lay.w = place(W.states());
  lay.a = place(atk.states());
  lay.total = off;
  const auto N = lay.total;

  auto state = [&](const Slice& s) { return Affine{detail::selector(s, N), Matrix::Zero(s.size, m), Matrix::Zero(s.size, m)}; };
  auto zero = [&](Eigen::Index rows) { return Affine{Matrix::Zero(rows, N), Matrix::Zero(rows, m), Matrix::Zero(rows, m)}; };

  Affine phi_u = zero(m);
  phi_u.phi.setIdentity();
  Affine ref = zero(m);
  ref.ref.setIdentity();

  const Affine xp = state(lay.p), xh = state(lay.h), xg = state(lay.g), xc = state(lay.c);
  const Affine xq = state(lay.q), xw = state(lay.w), xa = state(lay.a);

  const Affine u_c = ctrl.K * xc + ref;
  const Affine u_g = G.C() * xg + G.D() * u_c;
  const Affine u_g_rx = u_g + phi_u;
  const Affine u_h = H.C() * xh + H.D() * u_g_rx;
  const Affine y_p = plant.C() * xp;
  const Affine y_J = perf.C_J * xp + perf.D_J * u_h;
  const Affine y_w = W.C() * xw + W.D() * y_p;
  const Affine phi_y = Matrix(-atk.C()) * xa + Matrix(-atk.D()) * phi_u;
  const Affine y_w_rx = y_w + phi_y;
  const Affine y_q = Q.C() * xq + Q.D() * y_w_rx;
  const Affine y_hat = cm.C() * xc;
  const Affine y_r = y_q - y_hat;

  Matrix A = Matrix::Zero(N, N), B = Matrix::Zero(N, m), B_ref = Matrix::Zero(N, m);
  auto set_rows = [&](const Slice& s, const Affine& next) {
    A.middleRows(s.offset, s.size) = next.x;
    B.middleRows(s.offset, s.size) = next.phi;
    B_ref.middleRows(s.offset, s.size) = next.ref;
  };
  set_rows(lay.p, plant.A() * xp + plant.B() * u_h);
  set_rows(lay.h, H.A() * xh + H.B() * u_g_rx);
  set_rows(lay.g, G.A() * xg + G.B() * u_c);
  set_rows(lay.c, cm.A() * xc + cm.B() * u_c + ctrl.L * y_r);
  set_rows(lay.q, Q.A() * xq + Q.B() * y_w_rx);
  set_rows(lay.w, W.A() * xw + W.B() * y_p);
  set_rows(lay.a, atk.A() * xa + atk.B() * phi_u);

  const auto pj = perf.C_J.rows();
  Matrix C(pj + p, N), D(pj + p, m);
  C << y_J.x, y_r.x;
  D << y_J.phi, y_r.phi;
  if (!y_r.phi.isZero(0.0)) throw NumericalError("assemble: residual has direct feedthrough from phi_u");

  ClosedLoopModel model{StateSpaceModel(std::move(A), std::move(B), std::move(C), std::move(D)),
                        std::move(B_ref),
                        pj,
                        p,
                        lay,
                        {},
                        live,
                        stale,
                        eps_a};
  auto tap = [&](const char* name, const Affine& s) { model.taps[name] = Tap{s.x, s.phi, s.ref}; };
  tap("phi_u", phi_u);
  tap("phi_y", phi_y);
  tap("u_c", u_c);
  tap("u_g", u_g);
  tap("u_h", u_h);
  tap("y_p", y_p);
  tap("y_w", y_w);
  tap("y_q", y_q);
  tap("y_J", y_J);
  tap("y_r", y_r);
  return model;
}

struct SimulationTrace {
  /// Per-signal samples, each (width x horizon).
  std::map<std::string, Matrix> signals;
  /// Closed-loop state at each step, (n x horizon).
  Matrix x;
  /// Cumulative energies ||y_r||^2_[0,k] and ||y_J||^2_[0,k].
  Vector cum_yr2;
  Vector cum_yJ2;

  const Matrix& operator[](const std::string& name) const { return signals.at(name); }
  int horizon() const { return static_cast<int>(x.cols()); }
};

/// Iterates x+ = A x + B phi_u (+ B_ref r) from x[0] = 0.
inline SimulationTrace simulate(const ClosedLoopModel& model, const AttackSignal& attack, int horizon,
                                const std::optional<Matrix>& reference = std::nullopt) {
  if (horizon < 1) throw DomainError("simulate: horizon must be >= 1");
  const auto m = model.sys.inputs();
  if (attack.channels != m) throw DimensionError("simulate: attack signal width does not match the plant input");
  if (reference && (reference->rows() != m || reference->cols() < horizon))
    throw DimensionError("simulate: reference must be m x horizon");

  SimulationTrace tr;
  const auto n = model.layout.total;
  tr.x.resize(n, horizon);
  for (const auto& [name, t] : model.taps) tr.signals[name].resize(t.C.rows(), horizon);
  tr.cum_yr2.resize(horizon);
  tr.cum_yJ2.resize(horizon);

  Vector x = Vector::Zero(n);
  Vector r = Vector::Zero(m);
  double cum_r = 0.0, cum_j = 0.0;
  for (int k = 0; k < horizon; ++k) {
    const Vector phi = attack.at(k);
    if (reference) r = reference->col(k);
    tr.x.col(k) = x;
    for (const auto& [name, t] : model.taps) tr.signals[name].col(k) = t.C * x + t.D_phi * phi + t.D_ref * r;
    cum_r += tr.signals["y_r"].col(k).squaredNorm();
    cum_j += tr.signals["y_J"].col(k).squaredNorm();
    tr.cum_yr2(k) = cum_r;
    tr.cum_yJ2(k) = cum_j;
    x = model.A() * x + model.B() * phi + model.B_ref * r;
    if (!x.allFinite()) throw NumericalError("simulate: state diverged at step " + std::to_string(k + 1));
  }
  return tr;
}

struct DetectionVerdict {
  bool detected = false;
  std::optional<int> detection_step;
  Vector cumulative;
};

/// First k with cumulative residual energy strictly above eps_r.
inline DetectionVerdict detect_cumulative(const Vector& cumulative, double eps_r) {
  if (!(eps_r > 0.0)) throw DomainError("detect: threshold must be positive");
  DetectionVerdict v;
  v.cumulative = cumulative;
  for (Eigen::Index k = 0; k < cumulative.size(); ++k) {
    if (cumulative(k) > eps_r) {
      v.detected = true;
      v.detection_step = static_cast<int>(k);
      break;
    }
  }
  return v;
}

/// Same as detect_cumulative, from raw residual samples (width x horizon).
inline DetectionVerdict detect(const Matrix& y_r, double eps_r) {
  Vector cum(y_r.cols());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < y_r.cols(); ++k) {
    acc += y_r.col(k).squaredNorm();
    cum(k) = acc;
  }
  return detect_cumulative(cum, eps_r);
}

/// Writes k, t, phi_u, phi_y, y_p, y_q, y_J, y_r, cum_yr2, cum_yJ2. Signals
/// wider than one channel get one column per channel (name_0, name_1, ...).
inline void write_trace_csv(const SimulationTrace& tr, double Ts, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
  out.precision(17);
  const std::vector<std::string> cols = {"phi_u", "phi_y", "y_p", "y_q", "y_J", "y_r"};
  out << "k,t";
  for (const auto& c : cols) {
    const auto w = tr[c].rows();
    if (w == 1) {
      out << ',' << c;
    } else {
      for (Eigen::Index i = 0; i < w; ++i) out << ',' << c << '_' << i;
    }
  }
  out << ",cum_yr2,cum_yJ2\n";
  for (int k = 0; k < tr.horizon(); ++k) {
    out << k << ',' << std::setprecision(12) << k * Ts << std::setprecision(17);
    for (const auto& c : cols)
      for (Eigen::Index i = 0; i < tr[c].rows(); ++i) out << ',' << tr[c](i, k);
    out << ',' << tr.cum_yr2(k) << ',' << tr.cum_yJ2(k) << '\n';
  }
}

}  // namespace mwm
