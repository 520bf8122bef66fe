#include <catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

#include "fixtures.hpp"
#include "mwm/lti.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using mwm::Complex;
using mwm::Matrix;
using mwm::StateSpaceModel;
using mwm::Vector;

TEST_CASE("StateSpaceModel validates dimensions", "[lti]") {
  CHECK_NOTHROW(StateSpaceModel(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)));
  CHECK_THROWS_AS(StateSpaceModel(Matrix::Zero(2, 3), Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)),
                  mwm::DimensionError);
  CHECK_THROWS_AS(StateSpaceModel(Matrix::Zero(2, 2), Matrix::Zero(3, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)),
                  mwm::DimensionError);
  CHECK_THROWS_AS(StateSpaceModel(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(2, 1)),
                  mwm::DimensionError);
  Matrix bad = Matrix::Zero(1, 1);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(StateSpaceModel(bad, Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1)),
                  mwm::NumericalError);
  const auto g = StateSpaceModel::gain(Matrix::Constant(2, 3, 1.0));
  CHECK(g.states() == 0);
  CHECK(g.inputs() == 3);
  CHECK(g.outputs() == 2);
}

TEST_CASE("expm agrees with the unsupported Eigen matrix exponential", "[lti]") {
  std::mt19937_64 rng(7);
  for (double scale : {1e-3, 0.5, 3.0, 20.0}) {
    const Matrix m = fixtures::random_matrix(rng, 5, 5, scale);
    const Matrix ref = m.exp();
    CHECK((mwm::expm(m) - ref).norm() <= 1e-11 * std::max(1.0, ref.norm()));
  }
  CHECK(mwm::expm(Matrix::Zero(3, 3)).isApprox(Matrix::Identity(3, 3)));
}

TEST_CASE("zoh_discretize scalar and quadrature oracles", "[lti]") {
  const auto d = mwm::zoh_discretize(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0), 0.1);
  CHECK_THAT(d.Ad(0, 0), WithinAbs(0.904837418, 1e-9));
  CHECK_THAT(d.Bd(0, 0), WithinAbs(0.095162582, 1e-9));

  // Bd = int_0^Ts e^{A s} ds B by composite Simpson.
  const auto c = mwm::power_system({});
  const double Ts = 0.1;
  const auto z = mwm::zoh_discretize(c.A, c.B, Ts);
  const int N = 2000;
  Matrix acc = Matrix::Zero(3, 1);
  for (int i = 0; i <= N; ++i) {
    const double w = (i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * (c.A * (Ts * i / N)).exp() * c.B;
  }
  acc *= Ts / (3.0 * N);
  CHECK((z.Bd - acc).norm() <= 1e-10);
  CHECK((z.Ad - (c.A * Ts).exp()).norm() <= 1e-12);

  CHECK_THROWS_AS(mwm::zoh_discretize(c.A, c.B, 0.0), mwm::DomainError);
  CHECK_THROWS_AS(mwm::zoh_discretize(c.A, Matrix::Zero(2, 1), Ts), mwm::DimensionError);
}

TEST_CASE("power system prestabilization", "[lti]") {
  const auto c = mwm::power_system({});
  const auto open = mwm::zoh_discretize(c.A, c.B, 0.1);
  CHECK(mwm::spectral_radius(open.Ad) > 1.0);
  CHECK_THAT(mwm::spectral_radius(fixtures::power_plant().A()), WithinAbs(0.98526, 1e-5));
  CHECK(mwm::is_schur(fixtures::power_plant(mwm::Prestabilization::discrete).A()));
}

TEST_CASE("series transfer equals product of transfers", "[lti]") {
  std::mt19937_64 rng(3);
  const StateSpaceModel g1(fixtures::random_schur(rng, 3, 0.8), fixtures::random_matrix(rng, 3, 2),
                           fixtures::random_matrix(rng, 2, 3), fixtures::random_matrix(rng, 2, 2));
  const StateSpaceModel g2(fixtures::random_schur(rng, 2, 0.5), fixtures::random_matrix(rng, 2, 2),
                           fixtures::random_matrix(rng, 1, 2), fixtures::random_matrix(rng, 1, 2));
  const auto s = mwm::series(g1, g2);
  CHECK(s.states() == 5);
  for (double w : {0.1, 1.0, 2.5}) {
    const Complex z = std::exp(Complex(0.0, w));
    CHECK((mwm::transfer(s, z) - mwm::transfer(g2, z) * mwm::transfer(g1, z)).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(mwm::series(g2, g1), mwm::DimensionError);
}

TEST_CASE("inverse realization", "[lti]") {
  const StateSpaceModel g(Matrix::Constant(1, 1, 0.3), Matrix::Constant(1, 1, 0.2), Matrix::Constant(1, 1, 0.05),
                          Matrix::Constant(1, 1, 0.1));
  const auto gi = mwm::inverse_realization(g);
  CHECK_THAT(gi.A()(0, 0), WithinAbs(0.2, 1e-14));
  CHECK_THAT(gi.B()(0, 0), WithinAbs(2.0, 1e-14));
  CHECK_THAT(gi.C()(0, 0), WithinAbs(-0.5, 1e-14));
  CHECK_THAT(gi.D()(0, 0), WithinAbs(10.0, 1e-13));

  const StateSpaceModel sing(Matrix::Identity(2, 2) * 0.5, Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                             Matrix::Zero(2, 2));
  CHECK_THROWS_AS(mwm::inverse_realization(sing), mwm::SingularFeedthroughError);
  const StateSpaceModel rect(Matrix::Identity(2, 2) * 0.5, Matrix::Zero(2, 1), Matrix::Zero(2, 2),
                             Matrix::Ones(2, 1));
  CHECK_THROWS_AS(mwm::inverse_realization(rect), mwm::DimensionError);

  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto h = fixtures::random_invertible(rng, 3, 2);
    const auto inv = mwm::inverse_realization(h);
    const auto twice = mwm::inverse_realization(inv);
    for (double w : {0.3, 1.7}) {
      const Complex z = std::exp(Complex(0.0, w));
      CHECK((mwm::transfer(twice, z) - mwm::transfer(h, z)).norm() <= 1e-10);
      CHECK((mwm::transfer(inv, z) * mwm::transfer(h, z) - Matrix::Identity(2, 2).cast<Complex>()).norm() <= 1e-10);
    }
  }
}

TEST_CASE("Lyapunov certificate against a Kronecker solve", "[lti]") {
  const auto scalar = mwm::lyapunov_certificate(Matrix::Constant(1, 1, 0.9));
  REQUIRE(scalar);
  CHECK_THAT(scalar->Z(0, 0), WithinRel(1.0 / (1.0 - 0.81), 1e-12));

  std::mt19937_64 rng(5);
  for (double r : {0.2, 0.9, 0.999}) {
    const Matrix a = fixtures::random_schur(rng, 4, r);
    const auto cert = mwm::lyapunov_certificate(a);
    REQUIRE(cert);
    // vec(A' Z A) = (A' kron A') vec(Z); solve (I - A' kron A') vec(Z) = vec(I).
    const Matrix at = a.transpose();
    Matrix kron(16, 16);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) kron.block(4 * i, 4 * j, 4, 4) = at(i, j) * at;
    const Matrix id = Matrix::Identity(4, 4);
    const Vector vz = (Matrix::Identity(16, 16) - kron).partialPivLu().solve(Eigen::Map<const Vector>(id.data(), 16));
    const Matrix zref = Eigen::Map<const Matrix>(vz.data(), 4, 4);
    CHECK((cert->Z - zref).norm() <= 1e-8 * zref.norm());
    CHECK(mwm::certifies(cert->Z, a));
  }
  CHECK_FALSE(mwm::lyapunov_certificate(Matrix::Constant(1, 1, 1.0)));
  CHECK_FALSE(mwm::lyapunov_certificate(Matrix::Constant(1, 1, -1.2)));
  CHECK_FALSE(mwm::certifies(Matrix::Identity(2, 2), Matrix::Identity(2, 2) * 1.1));
}

TEST_CASE("H-infinity norm against a dense frequency sweep", "[lti]") {
  const StateSpaceModel first(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                              Matrix::Zero(1, 1));
  CHECK_THAT(mwm::hinf_norm(first), WithinRel(2.0, 1e-9));

  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const StateSpaceModel g(fixtures::random_schur(rng, 4, 0.95), fixtures::random_matrix(rng, 4, 2),
                            fixtures::random_matrix(rng, 2, 4), fixtures::random_matrix(rng, 2, 2, 0.3));
    double sweep = 0.0, best_w = 0.0;
    const int N = 20000;
    for (int i = 0; i <= N; ++i) {
      const double w = M_PI * i / N;
      const double s = mwm::detail::sigma_max(mwm::transfer(g, std::exp(Complex(0.0, w))));
      if (s > sweep) {
        sweep = s;
        best_w = w;
      }
    }
    // Golden-section refinement around the sweep peak.
    double lo = std::max(0.0, best_w - M_PI / N), hi = std::min(M_PI, best_w + M_PI / N);
    auto f = [&](double w) { return mwm::detail::sigma_max(mwm::transfer(g, std::exp(Complex(0.0, w)))); };
    for (int it = 0; it < 100; ++it) {
      const double m1 = lo + (hi - lo) * 0.382, m2 = lo + (hi - lo) * 0.618;
      if (f(m1) < f(m2))
        lo = m1;
      else
        hi = m2;
    }
    sweep = std::max(sweep, f(0.5 * (lo + hi)));
    const double h = mwm::hinf_norm(g);
    CHECK(h >= sweep * (1.0 - 1e-9));
    CHECK(h <= sweep * (1.0 + 1e-6));
  }
  const StateSpaceModel unstable(Matrix::Constant(1, 1, 1.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                                 Matrix::Zero(1, 1));
  CHECK_THROWS_AS(mwm::hinf_norm(unstable), mwm::DomainError);
}

TEST_CASE("simulate matches the impulse response", "[lti]") {
  const StateSpaceModel g(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 2.0),
                          Matrix::Constant(1, 1, 3.0));
  Matrix u = Matrix::Zero(1, 6);
  u(0, 0) = 1.0;
  const Matrix y = mwm::simulate(g, u);
  CHECK(y(0, 0) == 3.0);
  for (int k = 1; k < 6; ++k) CHECK_THAT(y(0, k), WithinAbs(2.0 * std::pow(0.5, k - 1), 1e-15));
  CHECK_THROWS_AS(mwm::simulate(g, Matrix::Zero(2, 3)), mwm::DimensionError);
}
