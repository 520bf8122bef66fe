#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "mwm/aec_oog.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using mwm::AecOogProblem;
using mwm::Matrix;
using mwm::Vector;

TEST_CASE("program layout for the power-system loop", "[aec_oog]") {
  const auto model = fixtures::paper_loop(fixtures::optimal_bank(), fixtures::initial_bank());
  const auto prob = AecOogProblem::from_model(model, 1.0, 50.0, 0.1);
  const auto cp = mwm::build_sdp(prob);
  CHECK(cp.variables() == 21 * 22 / 2 + 2);
  REQUIRE(cp.blocks.size() == 4);
  CHECK(cp.blocks[0].dim() == 22);
  CHECK(cp.blocks[1].dim() == 21);
  CHECK(cp.blocks[2].dim() == 1);
  CHECK(cp.blocks[3].dim() == 1);
  CHECK(cp.variable_names.back() == "gamma_a");

  // The factored LMI coefficients reproduce -(R(E) + M) for a random point.
  std::mt19937_64 rng(1);
  const Vector y = fixtures::random_matrix(rng, cp.variables(), 1).col(0);
  const mwm::AecOogLayout lay{21};
  Matrix P(21, 21);
  for (int a = 0; a < 21; ++a)
    for (int b = a; b < 21; ++b) P(a, b) = P(b, a) = y(lay.p_index(a, b));
  const Matrix expected = -mwm::aec_oog_block(prob, P, y(lay.gamma()), y(lay.gamma_a()));
  CHECK((cp.blocks[0].evaluate(y) - expected).norm() <= 1e-10 * expected.norm());
  CHECK((cp.blocks[1].evaluate(y) - P).norm() <= 1e-12 * P.norm());
}

TEST_CASE("power-system optimum matches the frozen reference value", "[aec_oog]") {
  // Reference from an independent conic solver on the same model.
  const auto model = fixtures::paper_loop(fixtures::optimal_bank(), fixtures::initial_bank());
  const auto sol = mwm::solve_aec_oog(AecOogProblem::from_model(model, 1.0, 50.0, 0.1));
  REQUIRE(sol.ok());
  CHECK_THAT(sol.value, WithinRel(31.11186, 1e-5));
  CHECK_THAT(sol.objective(), WithinRel(53.26328, 1e-5));
  CHECK(sol.gamma >= 0.0);
  CHECK(sol.gamma_a >= 0.0);
  CHECK(sol.lmi_residual <= 1e-8);
  CHECK(sol.p_min_eigenvalue >= -1e-8);
  CHECK(sol.P.rows() == 21);
}

TEST_CASE("no performance output gives zero value", "[aec_oog]") {
  const auto model = fixtures::paper_loop(fixtures::optimal_bank(), fixtures::initial_bank());
  auto prob = AecOogProblem::from_model(model, 1.0, 50.0, 0.1);
  prob.C_J.setZero();
  prob.D_J.setZero();
  const auto sol = mwm::solve_aec_oog(prob);
  REQUIRE(sol.ok());
  CHECK_THAT(sol.value, WithinAbs(0.0, 1e-6));
  CHECK_THAT(sol.P.trace(), WithinAbs(0.0, 1e-5));
}

TEST_CASE("regularization trades value for a smaller certificate", "[aec_oog]") {
  const auto model = fixtures::paper_loop(fixtures::optimal_bank(), fixtures::initial_bank());
  const auto plain = mwm::solve_aec_oog(AecOogProblem::from_model(model, 1.0, 50.0, 0.0));
  const auto reg = mwm::solve_aec_oog(AecOogProblem::from_model(model, 1.0, 50.0, 0.1));
  REQUIRE(plain.ok());
  REQUIRE(reg.ok());
  CHECK(reg.P.trace() < plain.P.trace());
  CHECK(reg.value >= plain.value * (1.0 - 1e-6));
  CHECK(reg.objective() <= plain.value + 0.1 * plain.P.trace() + 1e-6);
}

TEST_CASE("matched banks: value equals the H-infinity bound", "[aec_oog]") {
  const auto bank = fixtures::initial_bank();
  const auto model = fixtures::paper_loop(bank, bank);
  const auto sol = mwm::solve_aec_oog(AecOogProblem::from_model(model, 1.0, 50.0, 0.0));
  REQUIRE(sol.ok());
  const double h = mwm::hinf_norm(model.performance_channel());
  CHECK_THAT(sol.value, WithinRel(50.0 * h * h, 1e-6));
}

TEST_CASE("scalar toy against a brute-force attack search", "[aec_oog]") {
  AecOogProblem prob;
  prob.A = Matrix::Constant(1, 1, 0.5);
  prob.B = Matrix::Constant(1, 1, 1.0);
  prob.C_J = Matrix::Constant(1, 1, 1.0);
  prob.D_J = Matrix::Zero(1, 1);
  prob.C_r = Matrix::Constant(1, 1, 1.0);
  prob.eps_r = 1.0;
  prob.eps_a = 1.0;
  prob.eps_p = 0.0;
  const auto sol = mwm::solve_aec_oog(prob);
  REQUIRE(sol.ok());

  // Every sign pattern of length 20, scaled to the largest admissible amplitude.
  constexpr int N = 20;
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << N); ++mask) {
    double x = 0.0, ey = 0.0;
    for (int k = 0; k < N; ++k) {
      ey += x * x;
      x = 0.5 * x + ((mask >> k) & 1u ? 1.0 : -1.0);
    }
    if (ey == 0.0) continue;
    const double scale = std::min(prob.eps_a / N, prob.eps_r / ey);
    best = std::max(best, scale * ey);
  }
  CHECK(best <= sol.value * (1.0 + 1e-6) + 1e-6);
  CHECK(best >= 0.95 * sol.value);
}

TEST_CASE("unstable closed loops are reported without solving", "[aec_oog]") {
  AecOogProblem prob;
  prob.A = Matrix::Constant(1, 1, 1.2);
  prob.B = Matrix::Constant(1, 1, 1.0);
  prob.C_J = Matrix::Constant(1, 1, 1.0);
  prob.D_J = Matrix::Zero(1, 1);
  prob.C_r = Matrix::Constant(1, 1, 1.0);
  const auto sol = mwm::solve_aec_oog(prob);
  CHECK(sol.status == mwm::AecOogStatus::unstable_loop);
  CHECK_THAT(sol.diagnostic, ContainsSubstring("not Schur"));
  CHECK_THAT(sol.spectral_radius, WithinAbs(1.2, 1e-12));
  CHECK_FALSE(std::isfinite(sol.value));
}

TEST_CASE("problem validation", "[aec_oog]") {
  AecOogProblem prob;
  prob.A = Matrix::Constant(1, 1, 0.5);
  prob.B = Matrix::Constant(1, 1, 1.0);
  prob.C_J = Matrix::Constant(1, 1, 1.0);
  prob.D_J = Matrix::Zero(1, 1);
  prob.C_r = Matrix::Constant(1, 1, 1.0);
  prob.eps_r = 0.0;
  CHECK_THROWS_AS(mwm::build_sdp(prob), mwm::DomainError);
  prob.eps_r = 1.0;
  prob.eps_p = -1.0;
  CHECK_THROWS_AS(mwm::build_sdp(prob), mwm::DomainError);
  prob.eps_p = 0.0;
  prob.C_r = Matrix::Zero(1, 2);
  CHECK_THROWS_AS(mwm::build_sdp(prob), mwm::DimensionError);
}
