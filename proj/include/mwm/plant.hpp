#pragma once

// Sampled-data plant construction: continuous model, optional static output
// feedback prestabilization, zero-order-hold discretization.

#include <string>

#include "mwm/lti.hpp"

namespace mwm {

/// Load-frequency model of a single-area power system with governor and
/// turbine dynamics.
struct PowerSystemParams {
  double K_lm = 1.0;
  double T_lm = 6.0;
  double T_g = 0.2;
  double T_h = 4.0;
  double R = 0.05;
};

struct ContinuousPlant {
  Matrix A, B, C;
  /// Performance output row(s) C_J (y_J = C_J x, no feedthrough).
  Matrix C_J;
};

inline ContinuousPlant power_system(const PowerSystemParams& p) {
  for (double v : {p.T_lm, p.T_g, p.T_h, p.R})
    if (!(v > 0.0)) throw DomainError("power system time constants and droop must be positive");
  ContinuousPlant c;
  c.A.resize(3, 3);
  c.A << -1.0 / p.T_lm, p.K_lm / p.T_lm, -2.0 * p.K_lm / p.T_lm,  //
      0.0, -2.0 / p.T_h, 6.0 / p.T_h,                             //
      -1.0 / (p.T_g * p.R), 0.0, -1.0 / p.T_g;
  c.B = Matrix::Zero(3, 1);
  c.B(2, 0) = 1.0 / p.T_g;
  c.C = Matrix::Zero(1, 3);
  c.C(0, 0) = 1.0;
  c.C_J = Matrix::Zero(1, 3);
  c.C_J(0, 1) = 1.0;
  return c;
}

enum class Prestabilization { none, continuous, discrete };

inline Prestabilization parse_prestabilization(const std::string& s) {
  if (s == "none") return Prestabilization::none;
  if (s == "continuous") return Prestabilization::continuous;
  if (s == "discrete") return Prestabilization::discrete;
  throw ConfigError("prestabilization mode must be none, continuous or discrete (got '" + s + "')");
}

inline const char* to_string(Prestabilization p) {
  switch (p) {
    case Prestabilization::none: return "none";
    case Prestabilization::continuous: return "continuous";
    case Prestabilization::discrete: return "discrete";
  }
  return "?";
}

/// Local loop u = sign * gain * y_p + u_h.
struct LocalFeedback {
  double gain = 0.0;
  double sign = 1.0;
  Prestabilization mode = Prestabilization::none;
};

/// Discrete plant x+ = A x + B u_h, y_p = C x seen by the networked loop.
inline StateSpaceModel discretize_plant(const ContinuousPlant& c, double Ts, const LocalFeedback& fb) {
  const Matrix k = fb.sign * fb.gain * c.C;
  Matrix ac = c.A;
  if (fb.mode == Prestabilization::continuous) ac += c.B * k;
  auto d = zoh_discretize(ac, c.B, Ts);
  if (fb.mode == Prestabilization::discrete) d.Ad += d.Bd * k;
  return StateSpaceModel(d.Ad, d.Bd, c.C, Matrix::Zero(c.C.rows(), c.B.cols()));
}

/// Applies the local loop to an already discrete plant (continuous mode is
/// not available without the continuous model).
inline StateSpaceModel prestabilize_discrete(const StateSpaceModel& plant, const LocalFeedback& fb) {
  if (fb.mode == Prestabilization::none) return plant;
  if (fb.mode == Prestabilization::continuous)
    throw ConfigError("continuous prestabilization requires a continuous plant model");
  return StateSpaceModel(plant.A() + fb.sign * fb.gain * plant.B() * plant.C(), plant.B(), plant.C(), plant.D());
}

}  // namespace mwm
