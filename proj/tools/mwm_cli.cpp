// Command-line front end: design, simulate, compare, dump-sdp.

#include <CLI11.hpp>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mwm/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitSolver = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<double> pin_d;
  std::string scenario = "optimal_switch";
  std::optional<int> trials;
  std::optional<std::string> out;
  std::optional<std::string> prestabilize;
  std::optional<std::string> mode;
  std::optional<double> spacing;
  std::optional<std::string> bank;
};

mwm::ScenarioConfig load(const Options& o) {
  auto c = mwm::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.pin_d.empty()) c.pinned_d = std::make_pair(o.pin_d[0], o.pin_d[1]);
  if (o.out) c.out_dir = *o.out;
  if (o.prestabilize) c.local.mode = mwm::parse_prestabilization(*o.prestabilize);
  if (o.mode) c.mode = mwm::parse_search_mode(*o.mode);
  if (o.spacing) {
    if (!(*o.spacing > 0.0 && *o.spacing < 2.0)) throw mwm::ConfigError("--spacing must lie in (0, 2)");
    c.spacing = *o.spacing;
  }
  if (o.trials) c.trials = *o.trials;
  return c;
}

void print_vec(const char* name, const mwm::Vector& v) {
  std::cout << name << " = diag(";
  for (Eigen::Index i = 0; i < v.size(); ++i) std::cout << (i ? ", " : "") << v(i);
  std::cout << ")\n";
}

int run_design(const Options& o) {
  const auto c = load(o);
  const auto out = mwm::cmd_design(c);
  const auto& r = out.result;
  std::cout << std::setprecision(8);
  std::cout << "mode " << mwm::to_string(c.mode) << ", prestabilization " << mwm::to_string(c.local.mode)
            << ", spacing " << c.spacing << "\n";
  std::cout << "D_h = " << out.d_h << ", D_q = " << out.d_q << "\n";
  std::cout << "candidates " << r.evaluated << ", solved " << r.solved;
  for (const auto& [k, v] : r.histogram) std::cout << ", " << k << " " << v;
  std::cout << "\n";
  print_vec("A_h*", r.argmin.a_h);
  print_vec("A_q*", r.argmin.a_q);
  std::cout << "L* = " << r.L_star << " (regularizer " << r.certificate.regularizer << ", total "
            << r.certificate.objective() << ")\n";
  std::cout << "elapsed " << r.elapsed_ms / 1000.0 << " s\n";
  std::cout << "wrote " << out.table_path.string() << ", " << out.bank_path.string() << ", "
            << out.summary_path.string() << "\n";
  return kExitOk;
}

int run_simulate(const Options& o) {
  const auto c = load(o);
  std::optional<std::filesystem::path> bank;
  if (o.bank) bank = *o.bank;
  const auto out = mwm::cmd_simulate(c, mwm::parse_scenario(o.scenario), bank);
  const int h = out.trace.horizon();
  std::cout << std::setprecision(8);
  std::cout << "scenario " << o.scenario << ", horizon " << h << " steps (" << h * c.Ts << " s)\n";
  if (out.L_live) std::cout << "live bank L = " << *out.L_live << "\n";
  std::cout << "||y_r||^2 = " << out.trace.cum_yr2(h - 1) << ", ||y_J||^2 = " << out.trace.cum_yJ2(h - 1) << "\n";
  if (out.verdict.detected)
    std::cout << "detected at step " << *out.verdict.detection_step << " (" << *out.detection_s_from_onset
              << " s after onset)\n";
  else
    std::cout << "not detected\n";
  std::cout << "wrote " << out.trace_path.string() << ", " << out.summary_path.string() << "\n";
  return kExitOk;
}

int run_compare(const Options& o) {
  const auto c = load(o);
  const auto out = mwm::cmd_compare(c, c.trials);
  std::cout << std::setprecision(8);
  for (const auto& e : out.epochs) {
    std::cout << "epoch " << e.epoch << ": L_opt " << e.L_opt << ", random";
    for (const auto& d : e.random) std::cout << ' ' << d.result.value;
    std::cout << "\n";
  }
  std::cout << "wrote " << out.csv_path.string() << ", " << out.summary_path.string() << "\n";
  return kExitOk;
}

int run_dump(const Options& o) {
  const auto c = load(o);
  std::optional<std::filesystem::path> bank;
  if (o.bank) bank = *o.bank;
  std::cout << "wrote " << mwm::cmd_dump_sdp(c, bank).string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switching multiplicative watermarking: filter design and covert-attack simulation"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Scenario JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Seed for feedthrough sampling");
    cmd->add_option("--pin-d", o.pin_d, "Pinned feedthroughs D_h D_q")->expected(2);
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--prestabilize", o.prestabilize, "Local loop placement")
        ->check(CLI::IsMember({"none", "continuous", "discrete"}));
    cmd->add_option("--mode", o.mode, "Search mode")->check(CLI::IsMember({"diag", "scalar"}));
    cmd->add_option("--spacing", o.spacing, "Grid spacing");
  };
  auto* design = app.add_subcommand("design", "Grid search for the optimal filter bank");
  common(design);
  auto* sim = app.add_subcommand("simulate", "Simulate the covert attack and detection");
  common(sim);
  sim->add_option("--scenario", o.scenario, "no_switch | optimal_switch | bank_file")
      ->check(CLI::IsMember({"no_switch", "optimal_switch", "bank_file"}));
  sim->add_option("--bank", o.bank, "Bank file for the bank_file scenario (default <out>/bank.json)");
  auto* cmp = app.add_subcommand("compare", "Optimal versus random switching over several epochs");
  common(cmp);
  cmp->add_option("--trials", o.trials, "Number of epochs")->check(CLI::PositiveNumber);
  auto* dump = app.add_subcommand("dump-sdp", "Write the conic program as JSON");
  common(dump);
  dump->add_option("--bank", o.bank, "Live bank file (default: configured bank)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*design) return run_design(o);
    if (*sim) return run_simulate(o);
    if (*cmp) return run_compare(o);
    if (*dump) return run_dump(o);
  } catch (const mwm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mwm::AllCandidatesRejected& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const mwm::BudgetExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const mwm::NumericalError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
