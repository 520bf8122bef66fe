#pragma once

#include <cmath>
#include <random>

#include "mwm/closed_loop.hpp"
#include "mwm/plant.hpp"
#include "mwm/watermark.hpp"

namespace fixtures {

using mwm::Matrix;
using mwm::Vector;

/// Load-frequency plant, prestabilized in continuous time with gain 19.
inline mwm::StateSpaceModel power_plant(mwm::Prestabilization mode = mwm::Prestabilization::continuous) {
  return mwm::discretize_plant(mwm::power_system({}), 0.1, {19.0, 1.0, mode});
}

inline Matrix performance_row() {
  Matrix c = Matrix::Zero(1, 3);
  c(0, 1) = 1.0;
  return c;
}

inline mwm::ControllerParams controller(const mwm::StateSpaceModel& plant) {
  Matrix K(1, 3), L(3, 1);
  K << 0.1986, -0.0913, -0.1143;
  L << 0.2735, -0.0509, -0.2035;
  return {K, L, plant};
}

inline mwm::WatermarkBank bank(double a_h, double d_h, double a_q, double d_q, int epoch = 0) {
  return mwm::make_bank(a_h * Matrix::Identity(2, 2), Matrix::Constant(2, 1, 0.2), Matrix::Constant(1, 2, 0.05),
                        Matrix::Constant(1, 1, d_h), a_q * Matrix::Identity(2, 2), Matrix::Constant(2, 1, 0.7),
                        Matrix::Constant(1, 2, 0.1), Matrix::Constant(1, 1, d_q), epoch);
}

inline mwm::WatermarkBank initial_bank() { return bank(0.3, 0.1, 0.2, 0.15); }
inline mwm::WatermarkBank optimal_bank() { return bank(-0.65, 0.1482, -0.05, 0.1479, 1); }

inline mwm::ClosedLoopModel paper_loop(const mwm::WatermarkBank& live, const mwm::WatermarkBank& stale,
                                       double eps_a = 50.0) {
  const auto plant = power_plant();
  return mwm::assemble(plant, {performance_row(), Matrix::Zero(1, 1)}, controller(plant), live, stale, eps_a);
}

/// Random matrix with spectral radius exactly `radius`.
inline Matrix random_schur(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = g(rng);
  const double r = mwm::spectral_radius(a);
  return r > 0.0 ? Matrix(a * (radius / r)) : a;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
  return m;
}

/// Random square system whose realization and inverse realization are both
/// Schur (rejection sampling on the inverse).
inline mwm::StateSpaceModel random_invertible(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m) {
  std::uniform_real_distribution<double> rad(0.1, 0.9);
  for (;;) {
    const Matrix a = random_schur(rng, n, rad(rng));
    const Matrix b = random_matrix(rng, n, m, 0.3);
    const Matrix c = random_matrix(rng, m, n, 0.3);
    const Matrix d = Matrix::Identity(m, m) + random_matrix(rng, m, m, 0.2);
    mwm::StateSpaceModel g(a, b, c, d);
    if (mwm::condition_number(d) > 1e3) continue;
    if (mwm::is_schur(mwm::inverse_realization(g).A(), 1e-3)) return g;
  }
}

/// Random bank with diagonal filters, stable with stable inverses.
inline mwm::WatermarkBank random_bank(std::mt19937_64& rng, int epoch = 0) {
  for (;;) {
    try {
      return mwm::make_bank(random_invertible(rng, 2, 1), random_invertible(rng, 2, 1), epoch);
    } catch (const mwm::FilterUnstableError&) {
    }
  }
}

}  // namespace fixtures
