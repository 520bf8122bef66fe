#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "mwm/design_search.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using mwm::Matrix;
using mwm::SearchMode;

namespace {

mwm::SearchSpace paper_space(std::vector<double> grid, SearchMode mode) {
  mwm::SearchSpace s;
  s.grid = std::move(grid);
  s.mode = mode;
  s.h = {Matrix::Constant(2, 1, 0.2), Matrix::Constant(1, 2, 0.05), Matrix::Constant(1, 1, 0.1482)};
  s.q = {Matrix::Constant(2, 1, 0.7), Matrix::Constant(1, 2, 0.1), Matrix::Constant(1, 1, 0.1479)};
  return s;
}

mwm::SearchContext paper_context(double eps_p = 0.1) {
  const auto plant = fixtures::power_plant();
  return {plant,
          {fixtures::performance_row(), Matrix::Zero(1, 1)},
          fixtures::controller(plant),
          fixtures::initial_bank(),
          1.0,
          50.0,
          eps_p,
          1};
}

}  // namespace

TEST_CASE("grid generation", "[design_search]") {
  const auto g = mwm::generate_grid(0.3);
  const std::vector<double> expected{-0.95, -0.65, -0.35, -0.05, 0.25, 0.55, 0.85};
  REQUIRE(g.size() == expected.size());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == expected[i]);
  CHECK(mwm::generate_grid(1.0) == std::vector<double>{-0.5, 0.5});
  CHECK(mwm::generate_grid(0.1).size() == 20);
  for (double v : mwm::generate_grid(0.07)) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
  CHECK_THROWS_AS(mwm::generate_grid(0.0), mwm::DomainError);
  CHECK_THROWS_AS(mwm::generate_grid(2.0), mwm::DomainError);
}

TEST_CASE("candidate enumeration", "[design_search]") {
  const auto grid = mwm::generate_grid(0.3);
  const auto diag = mwm::enumerate_candidates(paper_space(grid, SearchMode::diag));
  CHECK(diag.size() == 2401);
  CHECK(diag.front().a_h(0) == -0.95);
  CHECK(diag[1].a_q(1) == -0.65);
  CHECK(diag.back().a_q(0) == 0.85);
  const auto scalar = mwm::enumerate_candidates(paper_space(grid, SearchMode::scalar));
  CHECK(scalar.size() == 49);
  CHECK(scalar[8].a_h(0) == scalar[8].a_h(1));
  auto bad = paper_space({0.0, 1.0}, SearchMode::scalar);
  CHECK_THROWS_AS(mwm::enumerate_candidates(bad), mwm::DomainError);
  CHECK_THROWS_AS(mwm::enumerate_candidates(paper_space({}, SearchMode::scalar)), mwm::DomainError);
}

TEST_CASE("scalar search on the power-system loop", "[design_search]") {
  const auto space = paper_space(mwm::generate_grid(0.3), SearchMode::scalar);
  const auto res = mwm::run_search(space, paper_context(), 1);
  CHECK(res.evaluated == 49);
  CHECK(static_cast<int>(res.table.size()) == 49);
  CHECK(res.argmin.a_h(0) == -0.65);
  CHECK(res.argmin.a_q(0) == -0.05);
  CHECK_THAT(res.L_star, WithinRel(31.11186, 1e-5));
  int total = 0;
  for (const auto& [name, count] : res.histogram) total += count;
  CHECK(total == 49);
  CHECK(res.solved == 24);
  CHECK(res.theta_plus.epoch == 1);

  int ok = 0;
  for (const auto& row : res.table) {
    if (row.status != mwm::CandidateStatus::ok) {
      CHECK_FALSE(row.diagnostic.empty());
      continue;
    }
    ++ok;
    CHECK(row.value >= res.L_star);
  }
  CHECK(ok == res.solved);

  // Re-solving a table entry reproduces its recorded value.
  const auto& row = *std::find_if(res.table.rbegin(), res.table.rend(),
                                  [](const auto& r) { return r.status == mwm::CandidateStatus::ok; });
  const auto again = mwm::evaluate_candidate(space, paper_context(), row.candidate, mwm::sdp::InteriorPointSolver{});
  CHECK_THAT(again.row.value, WithinRel(row.value, 1e-9));
}

TEST_CASE("search is independent of the worker count", "[design_search]") {
  const auto space = paper_space({-0.65, -0.35, -0.05, 0.25}, SearchMode::scalar);
  const auto one = mwm::run_search(space, paper_context(), 1);
  const auto three = mwm::run_search(space, paper_context(), 3);
  REQUIRE(one.table.size() == three.table.size());
  for (std::size_t i = 0; i < one.table.size(); ++i) {
    CHECK(one.table[i].status == three.table[i].status);
    if (one.table[i].status == mwm::CandidateStatus::ok) CHECK(one.table[i].value == three.table[i].value);
  }
  CHECK(one.L_star == three.L_star);
  CHECK(one.argmin.a_h == three.argmin.a_h);
}

TEST_CASE("singleton and duplicated grids", "[design_search]") {
  const auto single = mwm::run_search(paper_space({0.0}, SearchMode::scalar), paper_context(), 1);
  CHECK(single.evaluated == 1);
  CHECK(single.argmin.a_h.isZero());
  const auto direct = mwm::evaluate_candidate(paper_space({0.0}, SearchMode::scalar), paper_context(),
                                              single.argmin, mwm::sdp::InteriorPointSolver{});
  CHECK(direct.row.value == single.L_star);

  // Duplicated grid points tie exactly; the first (lexicographically
  // smallest) index wins and the result does not depend on the duplicate.
  const auto dup = mwm::run_search(paper_space({-0.05, -0.05, 0.25}, SearchMode::scalar), paper_context(), 2);
  CHECK(dup.argmin.a_q(0) == -0.05);
  CHECK(dup.table[0].value == dup.table[3].value);
}

TEST_CASE("all candidates rejected reports a histogram", "[design_search]") {
  try {
    mwm::run_search(paper_space({-0.95}, SearchMode::scalar), paper_context(), 1);
    FAIL("expected AllCandidatesRejected");
  } catch (const mwm::AllCandidatesRejected& e) {
    CHECK(e.histogram().at("unstable_inverse_h") == 1);
  }
}

TEST_CASE("refining the grid never increases the optimum", "[design_search]") {
  const auto coarse = mwm::run_search(paper_space(mwm::generate_grid(0.3), SearchMode::scalar), paper_context(), 1);
  const auto fine = mwm::run_search(paper_space(mwm::generate_grid(0.1), SearchMode::scalar), paper_context(), 1);
  CHECK(fine.evaluated == 400);
  CHECK(fine.L_star <= coarse.L_star * (1.0 + 1e-9));
}

TEST_CASE("random comparison draws", "[design_search]") {
  const auto space = paper_space(mwm::generate_grid(0.3), SearchMode::scalar);
  const auto ctx = paper_context();
  const auto best = mwm::run_search(space, ctx, 1);
  const auto draws = mwm::compare_random(space, ctx, 5, 17, true);
  REQUIRE(draws.size() == 5);
  for (const auto& d : draws) {
    CHECK(d.result.value >= best.L_star * (1.0 - 1e-9));
    CHECK(d.result.status != mwm::CandidateStatus::unstable_inverse_h);
    CHECK(d.result.status != mwm::CandidateStatus::unstable_inverse_q);
  }
  const auto again = mwm::compare_random(space, ctx, 5, 17, true);
  for (std::size_t i = 0; i < draws.size(); ++i) CHECK(again[i].result.value == draws[i].result.value);
  const auto off = mwm::compare_random(space, ctx, 2, 3, false);
  CHECK(off.size() == 2);
  CHECK_THROWS_AS(mwm::compare_random(space, ctx, 0, 1), mwm::DomainError);
}

TEST_CASE("search table CSV", "[design_search]") {
  const auto res = mwm::run_search(paper_space({-0.65, -0.05}, SearchMode::diag), paper_context(), 1);
  const std::string path = "search_table_test.csv";
  mwm::write_search_table(res.table, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "a_h1,a_h2,a_q1,a_q2,status,L_value,gamma,gamma_a,solve_ms");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 16);
  std::remove(path.c_str());
}
