#pragma once

// Exhaustive grid search over diagonal A_h, A_q for the watermark bank that
// minimizes the attack-energy-constrained output-to-output gain.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mwm/aec_oog.hpp"
#include "mwm/closed_loop.hpp"
#include "mwm/watermark.hpp"

namespace mwm {

enum class SearchMode { diag, scalar };

inline SearchMode parse_search_mode(const std::string& s) {
  if (s == "diag") return SearchMode::diag;
  if (s == "scalar") return SearchMode::scalar;
  throw ConfigError("search mode must be diag or scalar (got '" + s + "')");
}

inline const char* to_string(SearchMode m) { return m == SearchMode::diag ? "diag" : "scalar"; }

/// Cell centers of a tiling of (-1, 1) by cells of width `spacing` anchored
/// at +1, in ascending order: {1 - spacing/2 - j spacing} within (-1, 1).
inline std::vector<double> generate_grid(double spacing) {
  if (!(spacing > 0.0 && spacing < 2.0)) throw DomainError("grid spacing must lie in (0, 2)");
  std::vector<double> pts;
  for (int j = 0;; ++j) {
    double v = 1.0 - spacing / 2.0 - j * spacing;
    v = std::round(v * 1e12) / 1e12;
    if (v <= -1.0) break;
    if (v < 1.0) pts.push_back(v);
  }
  if (pts.empty()) throw DomainError("empty grid");
  std::reverse(pts.begin(), pts.end());
  return pts;
}

/// Fixed filter matrices; only the diagonal state matrices are searched.
struct FilterTemplate {
  Matrix B, C, D;
  Eigen::Index order() const noexcept { return B.rows(); }
};

struct SearchSpace {
  std::vector<double> grid;
  SearchMode mode = SearchMode::diag;
  FilterTemplate h, q;

  void validate() const {
    if (grid.empty()) throw DomainError("search space has an empty grid");
    for (double v : grid)
      if (!(v > -1.0 && v < 1.0)) throw DomainError("grid points must lie in the open interval (-1, 1)");
    for (const auto* f : {&h, &q})
      if (f->C.cols() != f->order() || f->D.rows() != f->C.rows() || f->D.cols() != f->B.cols())
        throw DimensionError("search space: inconsistent filter template");
  }
};

struct Candidate {
  Vector a_h;
  Vector a_q;
};

/// Candidates in lexicographic order of (diag A_h, diag A_q).
inline std::vector<Candidate> enumerate_candidates(const SearchSpace& space) {
  space.validate();
  const auto nh = space.h.order(), nq = space.q.order();
  const auto ng = space.grid.size();
  std::vector<Candidate> out;
  if (space.mode == SearchMode::scalar) {
    for (double ah : space.grid)
      for (double aq : space.grid) out.push_back({Vector::Constant(nh, ah), Vector::Constant(nq, aq)});
    return out;
  }
  const auto dims = nh + nq;
  std::vector<std::size_t> idx(static_cast<std::size_t>(dims), 0);
  for (;;) {
    Candidate c{Vector(nh), Vector(nq)};
    for (Eigen::Index i = 0; i < nh; ++i) c.a_h(i) = space.grid[idx[static_cast<std::size_t>(i)]];
    for (Eigen::Index i = 0; i < nq; ++i) c.a_q(i) = space.grid[idx[static_cast<std::size_t>(nh + i)]];
    out.push_back(std::move(c));
    auto k = static_cast<std::ptrdiff_t>(dims) - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == ng) idx[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return out;
}

inline WatermarkBank candidate_bank(const SearchSpace& space, const Candidate& c, int epoch) {
  return make_bank(StateSpaceModel(c.a_h.asDiagonal().toDenseMatrix(), space.h.B, space.h.C, space.h.D),
                   StateSpaceModel(c.a_q.asDiagonal().toDenseMatrix(), space.q.B, space.q.C, space.q.D), epoch);
}

/// Everything a candidate evaluation needs besides the candidate itself.
struct SearchContext {
  StateSpaceModel plant;
  PerformanceOutput perf;
  ControllerParams ctrl;
  WatermarkBank stale;
  double eps_r = 1.0;
  double eps_a = 1.0;
  double eps_p = 0.1;
  int epoch = 1;
};

enum class CandidateStatus { ok, unstable_inverse_h, unstable_inverse_q, unstable_closed_loop, solver_failure };

inline const char* to_string(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::ok: return "ok";
    case CandidateStatus::unstable_inverse_h: return "unstable_inverse_h";
    case CandidateStatus::unstable_inverse_q: return "unstable_inverse_q";
    case CandidateStatus::unstable_closed_loop: return "unstable_closed_loop";
    case CandidateStatus::solver_failure: return "solver_failure";
  }
  return "?";
}

struct CandidateResult {
  Candidate candidate;
  CandidateStatus status = CandidateStatus::solver_failure;
  double value = std::numeric_limits<double>::infinity();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double gamma_a = std::numeric_limits<double>::quiet_NaN();
  double regularizer = std::numeric_limits<double>::quiet_NaN();
  double solve_ms = 0.0;
  std::string diagnostic;
};

/// Full evaluation of one candidate (bank, closed loop, solve).
struct Evaluation {
  CandidateResult row;
  std::optional<WatermarkBank> bank;
  std::optional<AecOogSolution> solution;
};

inline Evaluation evaluate_candidate(const SearchSpace& space, const SearchContext& ctx, const Candidate& c,
                                     const sdp::ConicSolver& solver) {
  Evaluation ev;
  ev.row.candidate = c;
  WatermarkBank bank;
  try {
    bank = candidate_bank(space, c, ctx.epoch);
  } catch (const FilterUnstableError& e) {
    ev.row.status = e.defining_channel() == Channel::h ? CandidateStatus::unstable_inverse_h
                                                       : CandidateStatus::unstable_inverse_q;
    ev.row.diagnostic = e.what();
    return ev;
  }
  const auto model = assemble(ctx.plant, ctx.perf, ctx.ctrl, bank, ctx.stale, ctx.eps_a);
  ev.bank = bank;
  const auto prob = AecOogProblem::from_model(model, ctx.eps_r, ctx.eps_a, ctx.eps_p);
  auto sol = solve_aec_oog(prob, solver);
  ev.row.solve_ms = sol.solve_ms;
  ev.row.diagnostic = sol.diagnostic;
  switch (sol.status) {
    case AecOogStatus::solved:
      ev.row.status = CandidateStatus::ok;
      ev.row.value = sol.value;
      ev.row.gamma = sol.gamma;
      ev.row.gamma_a = sol.gamma_a;
      ev.row.regularizer = sol.regularizer;
      break;
    case AecOogStatus::unstable_loop: ev.row.status = CandidateStatus::unstable_closed_loop; break;
    default: ev.row.status = CandidateStatus::solver_failure; break;
  }
  ev.solution = std::move(sol);
  return ev;
}

class AllCandidatesRejected : public std::runtime_error {
 public:
  explicit AllCandidatesRejected(std::map<std::string, int> histogram)
      : std::runtime_error(message(histogram)), histogram_(std::move(histogram)) {}
  const std::map<std::string, int>& histogram() const noexcept { return histogram_; }

 private:
  static std::string message(const std::map<std::string, int>& h) {
    std::string s = "all candidates rejected:";
    for (const auto& [k, v] : h) s += " " + k + "=" + std::to_string(v);
    return s;
  }
  std::map<std::string, int> histogram_;
};

struct DesignResult {
  WatermarkBank theta_plus;
  Candidate argmin;
  double L_star = std::numeric_limits<double>::infinity();
  AecOogSolution certificate;
  std::vector<CandidateResult> table;
  std::map<std::string, int> histogram;
  int evaluated = 0;
  int solved = 0;
  double elapsed_ms = 0.0;
};

/// Evaluates every candidate with `workers` threads (0 = hardware
/// concurrency) and returns the minimizer. Results are stored by candidate
/// index and reduced serially, so the outcome does not depend on scheduling;
/// exact ties go to the lexicographically smallest candidate.
inline DesignResult run_search(const SearchSpace& space, const SearchContext& ctx, unsigned workers = 0,
                               const sdp::ConicSolver& solver = sdp::InteriorPointSolver{}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto candidates = enumerate_candidates(space);
  std::vector<CandidateResult> rows(candidates.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(candidates.size()));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned id) {
    try {
      for (std::size_t i; (i = next.fetch_add(1)) < candidates.size();)
        rows[i] = evaluate_candidate(space, ctx, candidates[i], solver).row;
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  DesignResult res;
  std::size_t best = candidates.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ++res.histogram[to_string(rows[i].status)];
    if (rows[i].status != CandidateStatus::ok) continue;
    ++res.solved;
    if (best == candidates.size() || rows[i].value < rows[best].value) best = i;
  }
  res.evaluated = static_cast<int>(rows.size());
  res.table = std::move(rows);
  if (best == candidates.size()) throw AllCandidatesRejected(res.histogram);

  // Re-solve the winner to return its full certificate.
  auto ev = evaluate_candidate(space, ctx, candidates[best], solver);
  res.argmin = candidates[best];
  res.theta_plus = *ev.bank;
  res.certificate = *ev.solution;
  res.L_star = res.table[best].value;
  res.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

struct RandomDraw {
  CandidateResult result;
  int redraws = 0;
};

/// Random diagonal A_h, A_q with the same structure as the search space.
/// On-grid draws pick grid points uniformly; off-grid draws are uniform in
/// (-1, 1). Draws with an unstable inverse are redrawn.
inline std::vector<RandomDraw> compare_random(const SearchSpace& space, const SearchContext& ctx, int trials,
                                              std::uint64_t seed, bool on_grid = true,
                                              const sdp::ConicSolver& solver = sdp::InteriorPointSolver{}) {
  if (trials < 1) throw DomainError("compare_random: trials must be >= 1");
  space.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, space.grid.size() - 1);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto entry = [&]() {
    if (on_grid) return space.grid[pick(rng)];
    double v;
    do v = uni(rng);
    while (v <= -1.0);
    return v;
  };
  const auto nh = space.h.order(), nq = space.q.order();
  std::vector<RandomDraw> out;
  for (int t = 0; t < trials; ++t) {
    RandomDraw d;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw DomainError("compare_random: could not draw a candidate with stable inverses");
      Candidate c{Vector(nh), Vector(nq)};
      if (space.mode == SearchMode::scalar) {
        c.a_h.setConstant(entry());
        c.a_q.setConstant(entry());
      } else {
        for (Eigen::Index i = 0; i < nh; ++i) c.a_h(i) = entry();
        for (Eigen::Index i = 0; i < nq; ++i) c.a_q(i) = entry();
      }
      auto ev = evaluate_candidate(space, ctx, c, solver);
      if (ev.row.status == CandidateStatus::unstable_inverse_h || ev.row.status == CandidateStatus::unstable_inverse_q) {
        ++d.redraws;
        continue;
      }
      d.result = std::move(ev.row);
      break;
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// Search table: a_h1..a_hn, a_q1..a_qn, status, L_value, gamma, gamma_a, solve_ms.
inline void write_search_table(const std::vector<CandidateResult>& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write search table '" + path + "'");
  out.precision(12);
  const auto nh = table.empty() ? 2 : table.front().candidate.a_h.size();
  const auto nq = table.empty() ? 2 : table.front().candidate.a_q.size();
  for (Eigen::Index i = 0; i < nh; ++i) out << "a_h" << i + 1 << ',';
  for (Eigen::Index i = 0; i < nq; ++i) out << "a_q" << i + 1 << ',';
  out << "status,L_value,gamma,gamma_a,solve_ms\n";
  for (const auto& r : table) {
    for (Eigen::Index i = 0; i < r.candidate.a_h.size(); ++i) out << r.candidate.a_h(i) << ',';
    for (Eigen::Index i = 0; i < r.candidate.a_q.size(); ++i) out << r.candidate.a_q(i) << ',';
    out << to_string(r.status) << ',';
    if (r.status == CandidateStatus::ok)
      out << r.value << ',' << r.gamma << ',' << r.gamma_a << ',';
    else
      out << ",,,";
    out << r.solve_ms << '\n';
  }
}

}  // namespace mwm
