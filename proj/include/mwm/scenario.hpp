#pragma once

// Scenario configuration and the experiment runners behind the CLI.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mwm/aec_oog.hpp"
#include "mwm/closed_loop.hpp"
#include "mwm/covert_attack.hpp"
#include "mwm/design_search.hpp"
#include "mwm/io.hpp"
#include "mwm/plant.hpp"
#include "mwm/watermark.hpp"

namespace mwm {

struct ScenarioConfig {
  /// Directory of the config file; relative paths inside it resolve here.
  std::filesystem::path base_dir = ".";

  // Plant: either a continuous model (discretized with ZOH) or explicit
  // discrete matrices.
  std::optional<ContinuousPlant> continuous;
  std::optional<StateSpaceModel> discrete;
  Matrix C_J;
  Matrix D_J;
  double Ts = 0.1;
  LocalFeedback local;

  Matrix K, L;
  StateSpaceModel h0, q0;

  double eps_r = 1.0;
  double eps_a = 50.0;
  double eps_p = 0.1;

  std::string attack = "square:150:2";
  double onset_s = 0.0;
  double horizon_s = 30.0;
  bool enforce_budget = false;

  double spacing = 0.3;
  SearchMode mode = SearchMode::diag;
  std::uint64_t seed = 1;
  double d_lo = 0.1;
  double d_hi = 0.15;
  std::optional<std::pair<double, double>> pinned_d;
  unsigned workers = 0;
  int random_draws = 5;
  int trials = 5;

  std::filesystem::path out_dir = "out";

  int steps(double seconds) const { return static_cast<int>(std::lround(seconds / Ts)); }
  int onset_step() const { return steps(onset_s); }
  int horizon_steps() const { return steps(horizon_s); }
};

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing required field '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const char* key, const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + "." + key + " must be finite");
  return d;
}

inline double number_or(const Json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

inline std::string string_or(const Json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ConfigError(where + "." + key + " must be a string");
  return j[key].get<std::string>();
}

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(where + ": unknown field '" + k + "'");
  }
}

}  // namespace detail

/// Parses and validates a scenario. See configs/paper.json for the schema.
inline ScenarioConfig parse_config(const Json& j, const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  check_keys(j, {"plant", "controller", "initial_bank", "thresholds", "attack", "search", "compare", "output"},
             "config");
  ScenarioConfig c;
  c.base_dir = base_dir;

  const auto& p = require(j, "plant", "config");
  check_keys(p, {"type", "params", "A", "B", "C", "C_J", "D_J", "Ts", "prestabilization"}, "plant");
  const auto type = string_or(p, "type", "power_system", "plant");
  c.Ts = number(p, "Ts", "plant");
  if (!(c.Ts > 0.0)) throw ConfigError("plant.Ts must be positive (seconds)");
  if (type == "power_system") {
    PowerSystemParams ps;
    if (p.contains("params")) {
      const auto& q = p["params"];
      check_keys(q, {"K_lm", "T_lm", "T_g", "T_h", "R"}, "plant.params");
      ps.K_lm = number_or(q, "K_lm", ps.K_lm, "plant.params");
      ps.T_lm = number_or(q, "T_lm", ps.T_lm, "plant.params");
      ps.T_g = number_or(q, "T_g", ps.T_g, "plant.params");
      ps.T_h = number_or(q, "T_h", ps.T_h, "plant.params");
      ps.R = number_or(q, "R", ps.R, "plant.params");
    }
    try {
      c.continuous = power_system(ps);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("plant.params: ") + e.what());
    }
    c.C_J = p.contains("C_J") ? matrix_from_json(p["C_J"], "plant.C_J") : c.continuous->C_J;
  } else if (type == "continuous" || type == "discrete") {
    const Matrix A = matrix_from_json(require(p, "A", "plant"), "plant.A");
    const Matrix B = matrix_from_json(require(p, "B", "plant"), "plant.B");
    const Matrix C = matrix_from_json(require(p, "C", "plant"), "plant.C");
    c.C_J = matrix_from_json(require(p, "C_J", "plant"), "plant.C_J");
    if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows())
      throw ConfigError("plant: A, B, C have inconsistent dimensions");
    if (type == "continuous")
      c.continuous = ContinuousPlant{A, B, C, c.C_J};
    else
      c.discrete = StateSpaceModel(A, B, C, Matrix::Zero(C.rows(), B.cols()));
  } else {
    throw ConfigError("plant.type must be power_system, continuous or discrete (got '" + type + "')");
  }
  const auto n = c.continuous ? c.continuous->A.rows() : c.discrete->states();
  const auto m = c.continuous ? c.continuous->B.cols() : c.discrete->inputs();
  const auto py = c.continuous ? c.continuous->C.rows() : c.discrete->outputs();
  if (c.C_J.cols() != n) throw ConfigError("plant.C_J must have one column per plant state");
  c.D_J = p.contains("D_J") ? matrix_from_json(p["D_J"], "plant.D_J") : Matrix::Zero(c.C_J.rows(), m);
  if (c.D_J.rows() != c.C_J.rows() || c.D_J.cols() != m) throw ConfigError("plant.D_J has wrong dimensions");
  if (p.contains("prestabilization")) {
    const auto& s = p["prestabilization"];
    check_keys(s, {"gain", "sign", "mode"}, "plant.prestabilization");
    c.local.gain = number(s, "gain", "plant.prestabilization");
    c.local.sign = number_or(s, "sign", 1.0, "plant.prestabilization");
    if (c.local.sign != 1.0 && c.local.sign != -1.0) throw ConfigError("plant.prestabilization.sign must be +1 or -1");
    c.local.mode = parse_prestabilization(string_or(s, "mode", "continuous", "plant.prestabilization"));
    if (py != m) throw ConfigError("plant.prestabilization requires as many outputs as inputs");
  }

  const auto& k = require(j, "controller", "config");
  check_keys(k, {"K", "L"}, "controller");
  c.K = matrix_from_json(require(k, "K", "controller"), "controller.K");
  c.L = matrix_from_json(require(k, "L", "controller"), "controller.L");
  if (c.K.rows() != m || c.K.cols() != n) throw ConfigError("controller.K must be inputs x states");
  if (c.L.rows() != n || c.L.cols() != py) throw ConfigError("controller.L must be states x outputs");

  const auto& b = require(j, "initial_bank", "config");
  check_keys(b, {"h", "q"}, "initial_bank");
  c.h0 = model_from_json(require(b, "h", "initial_bank"), "initial_bank.h");
  c.q0 = model_from_json(require(b, "q", "initial_bank"), "initial_bank.q");
  if (!c.h0.square() || c.h0.inputs() != m) throw ConfigError("initial_bank.h must be square with plant input width");
  if (!c.q0.square() || c.q0.inputs() != py) throw ConfigError("initial_bank.q must be square with plant output width");

  const auto& t = require(j, "thresholds", "config");
  check_keys(t, {"eps_r", "eps_a", "eps_p"}, "thresholds");
  c.eps_r = number(t, "eps_r", "thresholds");
  c.eps_a = number(t, "eps_a", "thresholds");
  c.eps_p = number_or(t, "eps_p", 0.1, "thresholds");
  if (!(c.eps_r > 0.0) || !(c.eps_a > 0.0) || !(c.eps_p >= 0.0))
    throw ConfigError("thresholds: eps_r and eps_a must be positive, eps_p nonnegative");

  if (j.contains("attack")) {
    const auto& a = j["attack"];
    check_keys(a, {"signal", "onset_s", "horizon_s", "enforce_budget"}, "attack");
    c.attack = string_or(a, "signal", c.attack, "attack");
    c.onset_s = number_or(a, "onset_s", c.onset_s, "attack");
    c.horizon_s = number_or(a, "horizon_s", c.horizon_s, "attack");
    if (a.contains("enforce_budget")) {
      if (!a["enforce_budget"].is_boolean()) throw ConfigError("attack.enforce_budget must be a boolean");
      c.enforce_budget = a["enforce_budget"].get<bool>();
    }
    if (c.onset_s < 0.0 || c.horizon_s <= 0.0) throw ConfigError("attack: onset must be >= 0 and horizon > 0 seconds");
  }

  if (j.contains("search")) {
    const auto& s = j["search"];
    check_keys(s, {"spacing", "mode", "seed", "d_range", "pinned_d", "workers"}, "search");
    c.spacing = number_or(s, "spacing", c.spacing, "search");
    c.mode = parse_search_mode(string_or(s, "mode", "diag", "search"));
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) throw ConfigError("search.seed must be a nonnegative integer");
      c.seed = s["seed"].get<std::uint64_t>();
    }
    if (s.contains("d_range")) {
      const auto& r = s["d_range"];
      if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
        throw ConfigError("search.d_range must be [lo, hi]");
      c.d_lo = r[0].get<double>();
      c.d_hi = r[1].get<double>();
    }
    if (s.contains("pinned_d") && !s["pinned_d"].is_null()) {
      const auto& d = s["pinned_d"];
      check_keys(d, {"h", "q"}, "search.pinned_d");
      c.pinned_d = {number(d, "h", "search.pinned_d"), number(d, "q", "search.pinned_d")};
    }
    if (s.contains("workers")) {
      if (!s["workers"].is_number_unsigned()) throw ConfigError("search.workers must be a nonnegative integer");
      c.workers = s["workers"].get<unsigned>();
    }
  }
  if (!(c.spacing > 0.0 && c.spacing < 2.0)) throw ConfigError("search.spacing must lie in (0, 2)");
  if (!(c.d_lo > 0.0 && c.d_hi > c.d_lo)) throw ConfigError("search.d_range must satisfy 0 < lo < hi");

  if (j.contains("compare")) {
    const auto& s = j["compare"];
    check_keys(s, {"trials", "random_draws"}, "compare");
    c.trials = static_cast<int>(number_or(s, "trials", c.trials, "compare"));
    c.random_draws = static_cast<int>(number_or(s, "random_draws", c.random_draws, "compare"));
    if (c.trials < 1 || c.random_draws < 1) throw ConfigError("compare: trials and random_draws must be >= 1");
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    check_keys(o, {"dir"}, "output");
    c.out_dir = string_or(o, "dir", "out", "output");
  }
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  auto c = parse_config(read_json_file(path.string()), path.parent_path());
  return c;
}

/// The discrete plant seen by the networked loop. Fails when it is not Schur:
/// the plant must be stable (locally prestabilized) with zero initial state.
inline StateSpaceModel build_plant(const ScenarioConfig& c) {
  StateSpaceModel plant = c.continuous ? discretize_plant(*c.continuous, c.Ts, c.local)
                                       : prestabilize_discrete(*c.discrete, c.local);
  if (!is_schur(plant.A()))
    throw ConfigError("plant is not Schur stable after prestabilization (mode " +
                      std::string(to_string(c.local.mode)) + ", spectral radius " +
                      std::to_string(spectral_radius(plant.A())) +
                      "); the design requires a stable plant with zero initial state");
  return plant;
}

inline WatermarkBank initial_bank(const ScenarioConfig& c) {
  try {
    return make_bank(c.h0, c.q0, 0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("initial_bank: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("initial_bank: ") + e.what());
  }
}

inline SearchSpace make_space(const ScenarioConfig& c, double d_h, double d_q) {
  SearchSpace s;
  s.grid = generate_grid(c.spacing);
  s.mode = c.mode;
  s.h = {c.h0.B(), c.h0.C(), d_h * Matrix::Identity(c.h0.inputs(), c.h0.inputs())};
  s.q = {c.q0.B(), c.q0.C(), d_q * Matrix::Identity(c.q0.inputs(), c.q0.inputs())};
  return s;
}

inline SearchContext make_context(const ScenarioConfig& c, const StateSpaceModel& plant, const WatermarkBank& stale,
                                  int epoch) {
  return SearchContext{plant, {c.C_J, c.D_J}, {c.K, c.L, plant}, stale, c.eps_r, c.eps_a, c.eps_p, epoch};
}

inline std::filesystem::path prepare_out_dir(const ScenarioConfig& c) {
  std::filesystem::create_directories(c.out_dir);
  return c.out_dir;
}

inline Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// ---------------------------------------------------------------------------
// design
// ---------------------------------------------------------------------------

struct DesignOutcome {
  DesignResult result;
  double d_h = 0.0;
  double d_q = 0.0;
  std::filesystem::path table_path, bank_path, summary_path;
};

inline DesignOutcome run_design(const ScenarioConfig& c, const StateSpaceModel& plant, const WatermarkBank& stale,
                                double d_h, double d_q, int epoch) {
  DesignOutcome o;
  o.d_h = d_h;
  o.d_q = d_q;
  o.result = run_search(make_space(c, d_h, d_q), make_context(c, plant, stale, epoch), c.workers);
  return o;
}

inline Json design_summary(const ScenarioConfig& c, const DesignOutcome& o) {
  const auto& r = o.result;
  Json hist = Json::object();
  for (const auto& [k, v] : r.histogram) hist[k] = v;
  return {{"command", "design"},
          {"mode", to_string(c.mode)},
          {"prestabilization", to_string(c.local.mode)},
          {"spacing", c.spacing},
          {"grid", generate_grid(c.spacing)},
          {"seed", c.seed},
          {"d_h", o.d_h},
          {"d_q", o.d_q},
          {"eps_r", c.eps_r},
          {"eps_a", c.eps_a},
          {"eps_p", c.eps_p},
          {"a_h", vector_to_json(r.argmin.a_h)},
          {"a_q", vector_to_json(r.argmin.a_q)},
          {"L_star", r.L_star},
          {"regularizer", r.certificate.regularizer},
          {"objective_with_regularizer", r.certificate.objective()},
          {"gamma", r.certificate.gamma},
          {"gamma_a", r.certificate.gamma_a},
          {"trace_P", r.certificate.P.trace()},
          {"lmi_residual", r.certificate.lmi_residual},
          {"closed_loop_spectral_radius", r.certificate.spectral_radius},
          {"candidates", r.evaluated},
          {"solved", r.solved},
          {"histogram", hist},
          {"elapsed_s", r.elapsed_ms / 1000.0}};
}

/// Draws (or takes pinned) feedthroughs, runs the grid search against the
/// initial bank and writes search_table.csv, bank.json and design_summary.json.
inline DesignOutcome cmd_design(const ScenarioConfig& c) {
  const auto plant = build_plant(c);
  const auto stale = initial_bank(c);
  double d_h, d_q;
  if (c.pinned_d) {
    std::tie(d_h, d_q) = *c.pinned_d;
  } else {
    std::tie(d_h, d_q) = sample_feedthroughs(c.seed, c.d_lo, c.d_hi);
  }
  auto o = run_design(c, plant, stale, d_h, d_q, 1);
  const auto dir = prepare_out_dir(c);
  o.table_path = dir / "search_table.csv";
  o.bank_path = dir / "bank.json";
  o.summary_path = dir / "design_summary.json";
  write_search_table(o.result.table, o.table_path.string());
  auto summary = design_summary(c, o);
  Json bank = bank_to_json(o.result.theta_plus);
  bank["L_star"] = o.result.L_star;
  bank["d_h"] = d_h;
  bank["d_q"] = d_q;
  write_json_file(bank, o.bank_path.string());
  write_json_file(summary, o.summary_path.string());
  return o;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

enum class Scenario { no_switch, optimal_switch, bank_file };

inline Scenario parse_scenario(const std::string& s) {
  if (s == "no_switch") return Scenario::no_switch;
  if (s == "optimal_switch") return Scenario::optimal_switch;
  if (s == "bank_file") return Scenario::bank_file;
  throw ConfigError("scenario must be no_switch, optimal_switch or bank_file (got '" + s + "')");
}

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::no_switch: return "no_switch";
    case Scenario::optimal_switch: return "optimal_switch";
    case Scenario::bank_file: return "bank_file";
  }
  return "?";
}

struct SimulateOutcome {
  SimulationTrace trace;
  DetectionVerdict verdict;
  WatermarkBank live;
  std::optional<double> detection_s_from_onset;
  std::optional<double> L_live;
  std::filesystem::path trace_path, summary_path;
};

inline WatermarkBank load_bank_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("bank file '" + path.string() + "' does not exist");
  try {
    return bank_from_json(read_json_file(path.string()), path.string());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline AttackSignal make_attack(const ScenarioConfig& c) {
  std::string spec = c.attack;
  if (spec.rfind("file:", 0) == 0) {
    std::filesystem::path f = spec.substr(5);
    if (f.is_relative()) f = c.base_dir / f;
    spec = "file:" + f.string();
  }
  auto sig = parse_attack_spec(spec);
  if (sig.kind == AttackSignal::Kind::zero) sig = AttackSignal::zero(c.K.rows());
  if (sig.channels != c.K.rows())
    throw ConfigError("attack signal has " + std::to_string(sig.channels) + " channels, plant has " +
                      std::to_string(c.K.rows()) + " inputs");
  return sig.with_onset(c.onset_step());
}

/// Simulates the attack against a live bank (stale bank = initial bank) and
/// writes trace_<scenario>.csv and simulate_<scenario>.json.
/// For optimal_switch the live bank comes from a fresh design run.
inline SimulateOutcome cmd_simulate(const ScenarioConfig& c, Scenario scenario,
                                    const std::optional<std::filesystem::path>& bank_path = std::nullopt) {
  const auto plant = build_plant(c);
  const auto stale = initial_bank(c);
  const auto attack = make_attack(c);
  SimulateOutcome o;
  switch (scenario) {
    case Scenario::no_switch: o.live = stale; break;
    case Scenario::optimal_switch: {
      double d_h, d_q;
      if (c.pinned_d)
        std::tie(d_h, d_q) = *c.pinned_d;
      else
        std::tie(d_h, d_q) = sample_feedthroughs(c.seed, c.d_lo, c.d_hi);
      auto d = run_design(c, plant, stale, d_h, d_q, 1);
      o.live = d.result.theta_plus;
      o.L_live = d.result.L_star;
      break;
    }
    case Scenario::bank_file: {
      const auto path = bank_path ? *bank_path : c.out_dir / "bank.json";
      o.live = load_bank_file(path);
      break;
    }
  }
  const auto model = assemble(plant, {c.C_J, c.D_J}, {c.K, c.L, plant}, o.live, stale, c.eps_a);
  const int horizon = c.horizon_steps();
  if (c.enforce_budget) {
    double e = 0.0;
    for (int k = 0; k < horizon; ++k) e += attack.at(k).squaredNorm();
    if (e > c.eps_a)
      throw BudgetExceededError("attack energy " + std::to_string(e) + " exceeds eps_a = " + std::to_string(c.eps_a));
  }
  o.trace = simulate(model, attack, horizon);
  o.verdict = detect_cumulative(o.trace.cum_yr2, c.eps_r);
  if (o.verdict.detection_step) o.detection_s_from_onset = (*o.verdict.detection_step - c.onset_step()) * c.Ts;

  const auto dir = prepare_out_dir(c);
  const std::string tag = to_string(scenario);
  o.trace_path = dir / ("trace_" + tag + ".csv");
  o.summary_path = dir / ("simulate_" + tag + ".json");
  write_trace_csv(o.trace, c.Ts, o.trace_path.string());
  Json s = {{"command", "simulate"},
            {"scenario", tag},
            {"attack", attack.tag()},
            {"Ts", c.Ts},
            {"onset_step", c.onset_step()},
            {"horizon_steps", horizon},
            {"eps_r", c.eps_r},
            {"detected", o.verdict.detected},
            {"detection_step", o.verdict.detection_step ? Json(*o.verdict.detection_step) : Json(nullptr)},
            {"detection_s_from_onset", o.detection_s_from_onset ? Json(*o.detection_s_from_onset) : Json(nullptr)},
            {"cum_yr2_final", o.trace.cum_yr2(horizon - 1)},
            {"cum_yJ2_final", o.trace.cum_yJ2(horizon - 1)},
            {"phi_u_energy", o.trace["phi_u"].squaredNorm()},
            {"live_bank", bank_to_json(o.live)}};
  if (o.L_live) s["L_live"] = *o.L_live;
  write_json_file(s, o.summary_path.string());
  return o;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct EpochComparison {
  int epoch = 0;
  double d_h = 0.0, d_q = 0.0;
  double L_opt = 0.0;
  Candidate argmin;
  std::vector<RandomDraw> random;

  double min_random() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& d : random) v = std::min(v, d.result.value);
    return v;
  }
};

struct CompareOutcome {
  std::vector<EpochComparison> epochs;
  std::filesystem::path csv_path, summary_path;
};

/// Runs `trials` switching epochs. Each epoch draws fresh feedthroughs (the
/// first uses pinned values when configured), designs the optimal bank
/// against the previous epoch's bank (initially the configured bank), and
/// evaluates `random_draws` on-grid random banks against the same stale bank.
inline CompareOutcome cmd_compare(const ScenarioConfig& c, int trials) {
  if (trials < 1) throw ConfigError("compare: trials must be >= 1");
  const auto plant = build_plant(c);
  WatermarkBank stale = initial_bank(c);
  FeedthroughSampler sampler(c.seed);
  CompareOutcome o;
  for (int e = 1; e <= trials; ++e) {
    EpochComparison ep;
    ep.epoch = e;
    const auto draw = sampler.sample(c.d_lo, c.d_hi);
    if (e == 1 && c.pinned_d) {
      std::tie(ep.d_h, ep.d_q) = *c.pinned_d;
    } else {
      ep.d_h = draw.d_h(0, 0);
      ep.d_q = draw.d_q(0, 0);
    }
    const auto space = make_space(c, ep.d_h, ep.d_q);
    const auto ctx = make_context(c, plant, stale, e);
    const auto res = run_search(space, ctx, c.workers);
    ep.L_opt = res.L_star;
    ep.argmin = res.argmin;
    ep.random = compare_random(space, ctx, c.random_draws, c.seed * 1000003ULL + static_cast<std::uint64_t>(e), true);
    stale = res.theta_plus;
    o.epochs.push_back(std::move(ep));
  }

  const auto dir = prepare_out_dir(c);
  o.csv_path = dir / "compare.csv";
  o.summary_path = dir / "compare_summary.json";
  std::ofstream csv(o.csv_path);
  if (!csv) throw std::runtime_error("cannot write '" + o.csv_path.string() + "'");
  csv.precision(12);
  csv << "epoch,d_h,d_q,L_opt,draw";
  const auto nh = c.h0.states(), nq = c.q0.states();
  for (Eigen::Index i = 0; i < nh; ++i) csv << ",a_h" << i + 1;
  for (Eigen::Index i = 0; i < nq; ++i) csv << ",a_q" << i + 1;
  csv << ",status,L_random\n";
  Json epochs = Json::array();
  for (const auto& ep : o.epochs) {
    Json rand = Json::array();
    for (std::size_t k = 0; k < ep.random.size(); ++k) {
      const auto& r = ep.random[k].result;
      csv << ep.epoch << ',' << ep.d_h << ',' << ep.d_q << ',' << ep.L_opt << ',' << k + 1;
      for (Eigen::Index i = 0; i < nh; ++i) csv << ',' << r.candidate.a_h(i);
      for (Eigen::Index i = 0; i < nq; ++i) csv << ',' << r.candidate.a_q(i);
      csv << ',' << to_string(r.status) << ',';
      if (r.status == CandidateStatus::ok) csv << r.value;
      csv << '\n';
      rand.push_back(r.status == CandidateStatus::ok ? Json(r.value) : Json(nullptr));
    }
    epochs.push_back({{"epoch", ep.epoch},
                      {"d_h", ep.d_h},
                      {"d_q", ep.d_q},
                      {"L_opt", ep.L_opt},
                      {"a_h", vector_to_json(ep.argmin.a_h)},
                      {"a_q", vector_to_json(ep.argmin.a_q)},
                      {"L_random", rand}});
  }
  write_json_file({{"command", "compare"}, {"trials", trials}, {"mode", to_string(c.mode)}, {"epochs", epochs}},
                  o.summary_path.string());
  return o;
}

// ---------------------------------------------------------------------------
// dump-sdp
// ---------------------------------------------------------------------------

/// Writes the conic program for live = bank file (or the configured bank),
/// stale = configured bank, to sdp.json.
inline std::filesystem::path cmd_dump_sdp(const ScenarioConfig& c,
                                          const std::optional<std::filesystem::path>& bank_path = std::nullopt) {
  const auto plant = build_plant(c);
  const auto stale = initial_bank(c);
  const auto live = bank_path ? load_bank_file(*bank_path) : stale;
  const auto model = assemble(plant, {c.C_J, c.D_J}, {c.K, c.L, plant}, live, stale, c.eps_a);
  const auto prob = AecOogProblem::from_model(model, c.eps_r, c.eps_a, c.eps_p);
  Json j = conic_program_to_json(build_sdp(prob));
  j["closed_loop"] = {{"A", matrix_to_json(prob.A)},
                      {"B", matrix_to_json(prob.B)},
                      {"C_J", matrix_to_json(prob.C_J)},
                      {"D_J", matrix_to_json(prob.D_J)},
                      {"C_r", matrix_to_json(prob.C_r)}};
  j["eps"] = {{"r", c.eps_r}, {"a", c.eps_a}, {"p", c.eps_p}};
  const auto dir = prepare_out_dir(c);
  const auto path = dir / "sdp.json";
  write_json_file(j, path.string());
  return path;
}

}  // namespace mwm
