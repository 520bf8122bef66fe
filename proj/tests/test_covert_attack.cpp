#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "mwm/covert_attack.hpp"

using Catch::Matchers::WithinAbs;
using mwm::AttackSignal;
using mwm::Matrix;

TEST_CASE("square attack signal", "[covert_attack]") {
  const auto s = AttackSignal::square(150.0, 2);
  CHECK(s.at(0)(0) == 150.0);
  CHECK(s.at(1)(0) == 0.0);
  CHECK(s.at(2)(0) == 150.0);
  const auto late = s.with_onset(3);
  CHECK(late.at(2)(0) == 0.0);
  CHECK(late.at(3)(0) == 150.0);
  CHECK(late.at(4)(0) == 0.0);
  const Matrix seq = s.sequence(10);
  CHECK(seq.cols() == 10);
  CHECK_THAT(seq.squaredNorm(), WithinAbs(5 * 150.0 * 150.0, 1e-9));
  CHECK(s.scaled(0.5).at(0)(0) == 75.0);
  CHECK(AttackSignal::zero().sequence(5).isZero());
  CHECK_THROWS_AS(AttackSignal::square(1.0, 0), mwm::DomainError);
  CHECK_THROWS_AS(s.with_onset(-1), mwm::DomainError);
}

TEST_CASE("attack specs parse", "[covert_attack]") {
  const auto s = mwm::parse_attack_spec("square:150:2");
  CHECK(s.kind == AttackSignal::Kind::square);
  CHECK(s.amplitude == 150.0);
  CHECK(s.period == 2);
  CHECK(mwm::parse_attack_spec("zero").kind == AttackSignal::Kind::zero);
  CHECK_THROWS_AS(mwm::parse_attack_spec("square:abc:2"), mwm::ConfigError);
  CHECK_THROWS_AS(mwm::parse_attack_spec("ramp"), mwm::ConfigError);
  CHECK_THROWS_AS(mwm::parse_attack_spec("file:/does/not/exist.csv"), mwm::ConfigError);

  const std::string path = "attack_spec_test.csv";
  {
    std::ofstream f(path);
    f << "# phi_u\n1.5\n\n-2\n0.25\n";
  }
  const auto c = mwm::parse_attack_spec("file:" + path);
  CHECK(c.kind == AttackSignal::Kind::custom);
  CHECK(c.at(0)(0) == 1.5);
  CHECK(c.at(1)(0) == -2.0);
  CHECK(c.at(2)(0) == 0.25);
  CHECK(c.at(3)(0) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("attacker cancels the watermarked plant output", "[covert_attack]") {
  const auto plant = fixtures::power_plant();
  const auto stale = fixtures::initial_bank();
  auto atk = mwm::build_attacker(stale, plant, 50.0);
  CHECK(atk.model().states() == 7);
  CHECK(atk.theta_epoch() == 0);

  // phi_y must equal -(W P H phi_u) computed from an independent cascade.
  const auto sig = AttackSignal::square(150.0, 2).sequence(60);
  const Matrix ref = mwm::simulate(stale.w.filter, mwm::simulate(plant, mwm::simulate(stale.h.filter, sig)));
  for (int k = 0; k < 60; ++k) CHECK_THAT(atk.step(sig.col(k))(0), WithinAbs(-ref(0, k), 1e-9));
  CHECK_THAT(atk.energy_spent(), WithinAbs(sig.squaredNorm(), 1e-6));
  atk.reset();
  CHECK(atk.state().isZero());
  CHECK(atk.energy_spent() == 0.0);
  CHECK_THROWS_AS(atk.step(Matrix::Zero(2, 1).col(0)), mwm::DimensionError);
}

TEST_CASE("attacker energy budget", "[covert_attack]") {
  auto atk = mwm::build_attacker(fixtures::initial_bank(), fixtures::power_plant(), 2.0);
  CHECK_FALSE(atk.budget_enforced());
  atk.enforce_budget(true);
  mwm::Vector u = mwm::Vector::Ones(1);
  atk.step(u);
  atk.step(u);
  CHECK_THROWS_AS(atk.step(u), mwm::BudgetExceededError);
  CHECK_THROWS_AS(mwm::build_attacker(fixtures::initial_bank(), fixtures::power_plant(), 0.0), mwm::DomainError);
}
